import pytest
from mpmath import mp
from sympy import Matrix, Rational, eye, expand, symbols

from services.errors import (
    DegenerateDecomposition,
    IndexOutOfRange,
    InvalidSigns,
    NotAdmissible,
    RootsUnavailable,
    ZeroVector,
)
from services.exact_checks import random_split
from services.curve_kummer import Sextic, is_admissible
from services.quad_algebra import Quad, delta, discr, res
from services.richelot_core import (
    FactoredSextic,
    H_from_A,
    SignChoice,
    construct,
    enumerate_decompositions,
    extract_A_matrices,
    first_three_rows_scale,
    hat_f,
    hat_hyperplane_row,
    hat_triple,
    last_row_constant,
    map_T,
    matrices_U_V,
    matrix_C,
    matrix_C_inv,
    matrix_D,
    matrix_H,
    mu,
    richelot_map,
    richelot_map_numeric,
    square_map,
    symmetry_X,
    trope_vector,
)

a = symbols("a1:5")


def test_factored_sextic_validation(standard_fs):
    assert standard_fs.delta == 32
    assert standard_fs.f.rational_roots() == [0, 1, 2, 3, 4, 5]
    with pytest.raises(DegenerateDecomposition):
        FactoredSextic(Quad(0, -5, 1), Quad(4, -5, 1), Quad(6, -5, 1))
    with pytest.raises(NotAdmissible):
        FactoredSextic(Quad(0, 0, 1), Quad(-1, 0, 1), Quad(0, 1, 0))


def test_hat_triple_and_dual_curve(standard_fs):
    hp, hq, hr = hat_triple(standard_fs)
    assert (hp, hq, hr) == (Quad(-46, 28, -4), Quad(20, -40, 8), Quad(-6, 12, -4))
    assert delta(hp, hq, hr) == -2 * 32 ** 2
    assert res(hp, hq) == 32 ** 2 * discr(standard_fs.r)
    f_hat = hat_f(standard_fs)
    assert f_hat[6] == 1
    assert is_admissible(f_hat)


def test_sign_choice(standard_fs, standard_signs):
    assert (standard_signs.delta_p, standard_signs.delta_q, standard_signs.delta_r) == (1, 1, 1)
    assert standard_signs.validate(standard_fs) is standard_signs
    assert standard_signs.flipped("q").delta_q == -1
    with pytest.raises(InvalidSigns):
        SignChoice(2, 1, 1).validate(standard_fs)


def test_mu_index_range(standard_fs):
    with pytest.raises(IndexOutOfRange):
        mu(3, 0, 0, 0, standard_fs)


def test_closed_form_inverse(standard_fs, rng):
    assert matrix_C(standard_fs) * matrix_C_inv(standard_fs) == eye(4)
    assert matrix_D(standard_fs).det() != 0
    for _ in range(5):
        fs, _, _ = random_split(rng, 20)
        assert matrix_C(fs) * matrix_C_inv(fs) == eye(4)


def test_kernel_nodes_collapse(standard_fs):
    C = matrix_C(standard_fs)
    for k in range(4):
        image = richelot_map(standard_fs, list(C.col(k)))
        assert [image[i] for i in range(3)] == [0, 0, 0]
        assert image[3] != 0


def test_richelot_map_rejects_zero(standard_fs):
    with pytest.raises(ZeroVector):
        richelot_map(standard_fs, [0, 0, 0, 0])


def test_numeric_map_matches_exact(standard_fs):
    point = [Rational(1, 3), Rational(-2), Rational(5, 7), Rational(1)]
    exact = richelot_map(standard_fs, point)
    with mp.workprec(96):
        approx = richelot_map_numeric(standard_fs, point)
        for i in range(4):
            value = mp.mpf(int(Rational(exact[i]).p)) / int(Rational(exact[i]).q)
            assert abs(approx[i] - value) <= mp.mpf(10) ** -20 * max(1, abs(value))


def test_a_family_quadratic_forms(standard_fs):
    vec = Matrix(a)
    image = richelot_map(standard_fs, a)
    for j, A in enumerate(extract_A_matrices(standard_fs)):
        assert A == A.T
        assert expand((vec.T * A * vec)[0, 0] - image[j]) == 0


def test_last_rows_and_H(standard_fs):
    A, A22, A12, A11 = extract_A_matrices(standard_fs)
    c = last_row_constant(standard_fs)
    assert c == -16 * 32 ** 3
    assert list(A.row(3)) == [c, 0, 0, 0]
    assert list(A22.row(3)) == [0, c, 0, 0]
    assert list(A12.row(3)) == [0, 0, c, 0]
    H = matrix_H(standard_fs)
    assert A11[3, 3] == 2 * c
    assert list(A11.row(3)) == [-c * H[0, 0], -c * H[0, 1], c * H[1, 1], 2 * c]
    assert H_from_A(standard_fs) == H
    assert H == H.T


def test_main_theorem_scale_at_origin(standard_fs):
    """S_f^(0) = (0, 0, 0, 1) must give S_f(0) = (0, 0, 0, 1)."""
    origin = Matrix([0, 0, 0, 1])
    d3 = standard_fs.delta ** 3
    values = [-(origin.T * A * origin)[0, 0] / (32 * d3) for A in extract_A_matrices(standard_fs)]
    assert values == [0, 0, 0, 1]


def test_trope_vector_on_standard_fixture(standard_fs, standard_signs):
    assert list(trope_vector(standard_fs, standard_signs)) == [0, 0, 32, 232]


def test_square_identity(standard_fs, standard_signs):
    lhs = square_map(standard_fs, standard_signs, a)
    rhs = map_T(standard_fs, a)
    for i in range(4):
        assert expand(lhs[i] - 4 * standard_signs.product * rhs[i]) == 0


def test_first_three_rows(standard_fs, standard_signs):
    c, residual = first_three_rows_scale(standard_fs, standard_signs)
    assert c == Rational(-1, 64 * 32 ** 3)
    assert all(residual[i, j] == 0 for i in range(3) for j in range(4))
    U, _ = matrices_U_V(standard_fs, standard_signs)
    assert list((U * matrix_C_inv(standard_fs)).col(3)) == [-16 * 32] * 4


def test_symmetries(standard_fs, standard_signs):
    hp, hq, hr = hat_triple(standard_fs)
    X = {w: symmetry_X(standard_fs, w) for w in "pqr"}
    assert X["p"] * X["p"] == res(hp, hq) * res(hp, hr) * eye(4)
    assert X["q"] * X["q"] == res(hq, hr) * res(hq, hp) * eye(4)
    assert X["p"] * X["q"] == res(hp, hq) * X["r"]
    d2 = standard_fs.delta ** 2
    for s in (standard_signs, standard_signs.flipped("p"), standard_signs.flipped("r")):
        row = Matrix([list(hat_hyperplane_row(standard_fs, s).coords)])
        assert row * X["p"] == d2 * s.delta_q * s.delta_r * row
        assert row * X["q"] == d2 * s.delta_r * s.delta_p * row
    with pytest.raises(IndexOutOfRange):
        symmetry_X(standard_fs, "s")


def test_construct_payload(standard_fs):
    data = construct(standard_fs)
    payload = data.to_json()
    assert payload["delta"] == "32/1"
    assert set(payload) >= {"C", "Cinv", "D", "A", "A22", "A12", "A11", "H", "hat_f"}
    with mp.workprec(64):
        lifted = data.to_mp()
    assert lifted["C"].rows == 4


def test_decompositions_of_standard_fixture(standard_fs):
    rows = enumerate_decompositions(standard_fs.f)
    assert len(rows) == 15
    by_pairs = {d.pairs: d for d in rows}
    assert by_pairs[((0, 1), (2, 3), (4, 5))].delta == 32
    assert by_pairs[((0, 5), (1, 4), (2, 3))].degenerate
    assert "hat_f" in by_pairs[((0, 1), (2, 3), (4, 5))].to_json()
    for d in rows:
        if not d.degenerate:
            assert is_admissible(hat_f(d.factored))


def test_even_fixture_is_degenerate():
    f = Sextic.from_factors((-1, 0, 1), (-4, 0, 1), (-9, 0, 1))
    rows = enumerate_decompositions(f)
    assert any(d.degenerate and d.pairs == ((0, 5), (1, 4), (2, 3)) for d in rows)


def test_decompositions_need_roots():
    with pytest.raises(RootsUnavailable):
        enumerate_decompositions(Sextic.from_factors((1, 0, 1), (2, 0, 1), (3, 0, 1)))
