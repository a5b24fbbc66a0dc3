import numpy as np
import pytest
from mpmath import mp
from sympy import Rational

from services.curve_kummer import (
    CurvePoint,
    DivisorPair,
    F_pair,
    ProjPoint4,
    Sextic,
    cofactor,
    incidence_matrix,
    is_admissible,
    node,
    node_table,
    node_zero,
    projective_distance,
    trope_single,
    trope_table,
    trope_triple,
    xi_coords,
)
from services.errors import CoincidentX, FactorMismatch, InfinitePoint, RootsUnavailable, ZeroVector
from services.quad_algebra import LinFactor


@pytest.fixture
def f(standard_fs):
    return standard_fs.f


def test_sextic_basics(f):
    assert f.degree() == 6
    assert f.rational_roots() == [0, 1, 2, 3, 4, 5]
    assert is_admissible(f)
    assert f(Rational(-1)) == 720
    assert not is_admissible(Sextic.from_factors((0, 0, 1), (6, -5, 1), (20, -9, 1)))
    assert Sextic.from_factors((1, 0, 1), (2, 0, 1), (3, 0, 1)).rational_roots() is None


def test_biform_diagonal(f):
    for a in (Rational(7), Rational(-3, 2)):
        assert F_pair(f, a, a) == 2 * f(a)


def test_xi_of_weierstrass_pair_is_node(f):
    D = DivisorPair(CurvePoint(0, 0), CurvePoint(1, 0))
    xi = xi_coords(f, D)
    assert xi.coords == (1, 1, 0, -30)
    assert xi == node_table(f).points["N01"]


def test_xi_rejects_bad_divisors(f):
    with pytest.raises(CoincidentX):
        xi_coords(f, DivisorPair(CurvePoint(2, 0), CurvePoint(2, 0)))
    with pytest.raises(InfinitePoint):
        xi_coords(f, DivisorPair(CurvePoint.at_infinity(), CurvePoint(2, 0)))


def test_xi_approaches_node_near_branch_points(f):
    """xi tends to the node linearly as the points approach a Weierstrass pair."""
    with mp.workprec(128):
        eps = mp.mpf("1e-9")
        points = []
        for e in (mp.mpf(2), mp.mpf(3)):
            x = e + eps
            points.append(CurvePoint(x, mp.sqrt(mp.mpc(f(x)))))
        xi = xi_coords(f, DivisorPair(*points))
        expected = node_table(f).points["N23"]
        assert projective_distance([mp.mpc(c) for c in expected.coords], list(xi.coords)) < 1e-6


def test_divisor_pairs_are_unordered():
    a, b = CurvePoint(0, 0), CurvePoint(1, 0)
    assert DivisorPair(a, b) == DivisorPair(b, a)
    assert CurvePoint(2, 3).flipped() == CurvePoint(2, -3)


def test_points_on_curve(f):
    assert CurvePoint(0, 0).on_curve(f)
    assert not CurvePoint(0, 1).on_curve(f)


def test_node_requires_a_factorization(f):
    with pytest.raises(FactorMismatch):
        node(f, (0, -1, 1), (1, 2, 3))
    assert cofactor(f, (0, -1, 1)) == (120, -154, 71, -14, 1)


def test_projective_points():
    assert ProjPoint4((1, 2, 3, 4)) == ProjPoint4((-2, -4, -6, -8))
    assert ProjPoint4((1, 2, 3, 4)) != ProjPoint4((1, 2, 3, 5))
    assert node_zero().normalized() == (0, 0, 0, 1)
    with pytest.raises(ZeroVector):
        ProjPoint4((0, 0, 0, 0))


def test_node_table_on_standard_fixture(f):
    table = node_table(f)
    assert len(table) == 16
    assert table.points["N0"].coords == (0, 0, 0, 1)
    assert table.points["N01"].coords == (1, 1, 0, -30)
    assert table.points["N02"].coords == (1, 2, 0, -15)
    assert table.find((2, 2, 0, -60)) == "N01"
    assert table.find((1, 0, 0, 0)) is None


def test_trope_formulas(f):
    tropes = trope_table(f)
    assert len(tropes) == 16
    assert tropes["T0"].equals((0, 0, -1, 0))
    assert tropes["T024"].equals((90, -15, -31, 4))
    assert trope_single(LinFactor(-2, 1)).coords == (4, -2, -1, 0)
    g, h = (0, 8, -6, 1), (-15, 23, -9, 1)
    assert trope_triple(g, h, f).equals(trope_triple(h, g, f))
    with pytest.raises(FactorMismatch):
        trope_triple(g, (1, 1, 1, 1), f)


def test_sixteen_six_configuration(f):
    nodes = node_table(f)
    incidence = np.array(incidence_matrix(nodes, trope_table(f)))
    assert incidence.shape == (16, 16)
    assert (incidence.sum(axis=0) == 6).all()
    assert (incidence.sum(axis=1) == 6).all()


def test_quintic_has_a_weierstrass_point_at_infinity():
    quintic = Sextic.from_factors(*[(-k, 1) for k in range(5)])
    assert quintic.rational_roots() == [0, 1, 2, 3, 4, None]
    nodes = node_table(quintic)
    assert nodes.points["N05"].coords == (0, -1, 0, 0)
    tropes = trope_table(quintic)
    assert tropes["T5"].coords == (1, 0, 0, 0)
    incidence = np.array(incidence_matrix(nodes, tropes))
    assert (incidence.sum(axis=0) == 6).all()
    assert (incidence.sum(axis=1) == 6).all()


def test_numeric_roots_give_the_same_nodes(f):
    with mp.workprec(96):
        approx = node_table(f, [mp.mpc(k) for k in range(6)])
    exact = node_table(f)
    for label, point in exact.points.items():
        assert point.equals(approx.points[label].coords, 1e-20)


def test_roots_required_when_f_does_not_split():
    g = Sextic.from_factors((1, 0, 1), (2, 0, 1), (3, 0, 1))
    with pytest.raises(RootsUnavailable):
        node_table(g)
