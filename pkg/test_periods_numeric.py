import pytest
from mpmath import mp
from sympy import Matrix

from services.curve_kummer import Sextic
from services.errors import BasisSearchFailed, NotAdmissible
from services.periods_numeric import (
    J4,
    LatticeApprox,
    PeriodService,
    adapted_transform,
    intersection_form,
    symplectic_reduction,
)
from services.quad_algebra import Quad, mobius_act
from services.richelot_core import FactoredSextic, hat_f, matrix_H
from services.verification_service import VerificationService

CHAIN = [[0, 1, 0, 0], [-1, 0, 1, 0], [0, -1, 0, 1], [0, 0, -1, 0]]


def gram(M, K):
    return [[intersection_form(M[i], M[j], K) for j in range(4)] for i in range(4)]


def test_symplectic_reduction_of_a_chain():
    M = symplectic_reduction(CHAIN)
    assert gram(M, CHAIN) == J4
    assert Matrix(M).det() in (1, -1)
    assert symplectic_reduction(J4) == [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]


def test_symplectic_reduction_needs_a_unimodular_pair():
    with pytest.raises(BasisSearchFailed):
        symplectic_reduction([[0, 2, 0, 0], [-2, 0, 0, 0], [0, 0, 0, 2], [0, 0, -2, 0]])


def test_adapted_transform_moves_b_cycles_into_the_sublattice():
    N = [[0, 0, 1, 0], [0, 0, 0, 1], [2, 0, 0, 0], [0, 2, 0, 0]]
    M = adapted_transform(N)
    assert gram(M, J4) == J4
    for row in M[:2]:
        assert row[0] % 2 == 0 and row[1] % 2 == 0
    identity = [[1 if i == j else 0 for j in range(4)] for i in range(4)]
    with pytest.raises(BasisSearchFailed):
        adapted_transform(identity)


def test_lattice_approx_on_the_gaussian_lattice():
    with mp.workprec(64):
        G = mp.matrix([[1, 0, 1j, 0], [0, 1, 0, 1j]])
        L = LatticeApprox(G)
        assert L.contains([mp.mpc(1, 2), mp.mpc(3, 0)])
        assert not L.contains([mp.mpc(0.5, 0), mp.mpc(0, 0)])
        assert abs(L.covolume() - 1) < 1e-15
        assert L.integer_coordinates([mp.mpc(2, -1), mp.mpc(0, 4)]) == [2, 0, -1, 4]
        reduced = L.reduce([mp.mpc(1.4, 2.6), mp.mpc(-0.3, 0)])
        assert abs(reduced[0] - mp.mpc(0.4, -0.4)) < 1e-15
        assert abs(reduced[1] - mp.mpc(-0.3, 0)) < 1e-15


def test_periods_need_an_admissible_curve():
    with pytest.raises(NotAdmissible):
        PeriodService().branching(Sextic.from_factors((0, 0, 1), (6, -5, 1), (20, -9, 1)))


@pytest.fixture(scope="module")
def service():
    return PeriodService({"precision": 96})


@pytest.fixture(scope="module")
def fixture_fs():
    return FactoredSextic(Quad(0, -1, 1), Quad(6, -5, 1), Quad(20, -9, 1))


@pytest.fixture(scope="module")
def adapted(service, fixture_fs):
    return service.adapted_bases(fixture_fs)


@pytest.mark.numeric
def test_branch_points_are_the_roots(service, fixture_fs):
    roots = service.branch_points(fixture_fs.f)
    assert len(roots) == 6
    for k, e in enumerate(roots):
        assert abs(e - k) < 1e-20


@pytest.mark.numeric
def test_legendre_relation_and_riemann_matrix(service, fixture_fs):
    pd = service.compute_periods(fixture_fs.f)
    residuals = pd.legendre_residuals()
    assert max(residuals.values()) <= 1e-8
    K = pd.homology["intersection"]
    assert all(K[i][j] == -K[j][i] for i in range(4) for j in range(4))
    with mp.workprec(96):
        Y = [[mp.im(pd.Omega[i, j]) for j in range(2)] for i in range(2)]
        assert Y[0][0] > 0
        assert Y[0][0] * Y[1][1] - Y[0][1] * Y[1][0] > 0
    assert service.compute_periods(fixture_fs.f) is pd


@pytest.mark.numeric
def test_dual_lattice_has_index_four(service, adapted):
    with mp.workprec(96):
        L_f = adapted.f_periods.lattice()
        L_h = adapted.hat_periods.lattice()
        assert all(L_f.contains(L_h.column(k)) for k in range(4))
        assert all(L_h.contains([2 * w for w in L_f.column(k)]) for k in range(4))
        assert abs(L_h.covolume() / L_f.covolume() - 4) < 1e-10
        a1 = L_f.column(0)
        assert not L_f.contains([a1[0] / 2, a1[1] / 2])
    assert gram(adapted.hat_coordinates, J4) == J4


@pytest.mark.numeric
def test_kernel_half_periods(service, adapted, fixture_fs):
    f = fixture_fs.f
    labels = adapted.kernel_labels
    assert set(labels) == {"p", "q", "r"}
    assert set(labels.values()) == {"a1/2", "a2/2", "(a1+a2)/2"}
    with mp.workprec(96):
        L_h = adapted.hat_periods.lattice()
        inside = service.abel_pair(f, service.weierstrass_divisor(f, 0, 1))
        outside = service.abel_pair(f, service.weierstrass_divisor(f, 0, 2))
        assert L_h.contains([2 * inside[0], 2 * inside[1]])
        assert not L_h.contains([2 * outside[0], 2 * outside[1]])


@pytest.mark.numeric
def test_eta_transform(service, adapted, fixture_fs):
    report = service.verify_eta_transform(fixture_fs, adapted.f_periods, adapted.hat_periods, matrix_H(fixture_fs))
    assert report["residual"] <= 1e-6


QUINTIC = {"p": ["0", "1", "0"], "q": ["6", "-5", "1"], "r": ["20", "-9", "1"]}
IRRATIONAL_SPLIT = {"p": ["-2", "0", "1"], "q": ["6", "-5", "1"], "r": ["20", "-9", "1"]}


def test_finite_model_keeps_sextics_and_moves_quintics(service, fixture_fs):
    assert service.finite_model(fixture_fs) == (fixture_fs, None)
    quintic = FactoredSextic.from_json(QUINTIC)
    assert quintic.f.degree() == 5
    model, S = service.finite_model(quintic)
    assert S is not None and S.a * S.d - S.b * S.c == 1
    assert model.f.degree() == 6 and hat_f(model).degree() == 6
    assert model.delta == quintic.delta == 14
    assert model.p == mobius_act(S, quintic.p)


def test_period_caches_are_bounded(fixture_fs):
    small = PeriodService({"cache_size": 1})
    small.branching(fixture_fs.f)
    small.branching(FactoredSextic.from_json(IRRATIONAL_SPLIT).f)
    info = small._branching_cache.cache_info()
    assert info.maxsize == 1
    assert info.currsize == 1


@pytest.mark.numeric
def test_numeric_checks_on_a_quintic():
    service = VerificationService({"precision": 64, "seed": 3, "trials": 5})
    report = service.run_checks(QUINTIC, checks=["legendre", "lattice_inclusion"])
    assert report.passed, report.to_text()
    lattice = report.results[1]
    assert sorted(lattice.details["kernel_labels"]) == ["p", "q", "r"]
    assert lattice.reproduce["mobius"] is not None
    assert lattice.reproduce["factors"] == FactoredSextic.from_json(QUINTIC).to_json()


@pytest.mark.numeric
def test_numeric_checks_when_the_factors_do_not_split():
    service = VerificationService({"precision": 64, "seed": 3, "trials": 5})
    report = service.run_checks(IRRATIONAL_SPLIT, checks=["legendre", "lattice_inclusion", "square_relation"])
    assert report.passed, report.to_text()
    square = report.results[2]
    assert "skipped" in square.details
    assert "mobius" not in report.results[1].reproduce
