import pytest
from mpmath import mp
from sympy import Rational

from services.errors import InvalidMobius, ZeroPolynomial
from services.exact_checks import random_linear, random_mobius, random_quad
from services.quad_algebra import (
    LinFactor,
    Mobius,
    ProjRoot,
    Quad,
    are_proportional,
    bracket,
    delta,
    discr,
    mobius_act,
    poly_divmod,
    rational_sqrt,
    res,
    res1,
    roots,
    scalar_to_json,
    share_root,
    to_mp,
    to_scalar,
)


def test_scalars_are_exact():
    assert to_scalar("3/4") == Rational(3, 4)
    assert to_scalar(-7) == Rational(-7)
    assert scalar_to_json(Rational(3)) == "3/1"
    with pytest.raises(TypeError):
        to_scalar(0.5)
    assert rational_sqrt(Rational(9, 4)) == Rational(3, 2)
    assert rational_sqrt(Rational(2)) is None
    assert to_mp(Rational(1, 2)) == mp.mpf("0.5")


def test_bracket_on_standard_factors():
    p, q = Quad(0, -1, 1), Quad(6, -5, 1)
    assert bracket(p, q) == Quad(-6, 12, -4)
    assert res(p, q) == 12
    assert discr(bracket(p, q)) == 4 * res(p, q)
    assert delta(p, q, Quad(20, -9, 1)) == 32


def test_bracket_identities_random(rng):
    for _ in range(100):
        p, q, r = (random_quad(rng, 30) for _ in range(3))
        assert (bracket(p, q) + bracket(q, p)).is_zero()
        jacobi = bracket(p, bracket(q, r)) + bracket(q, bracket(r, p)) + bracket(r, bracket(p, q))
        assert jacobi.is_zero()
        assert discr(bracket(p, q)) == 4 * res(p, q)


def test_res1_squared_is_discriminant(rng):
    for _ in range(100):
        g, h = random_linear(rng, 30), random_linear(rng, 30)
        assert res1(g, h) ** 2 == discr(g * h)


def test_mobius_equivariance_and_delta_invariance(rng):
    for _ in range(50):
        S = random_mobius(rng, 20)
        p, q, r = (random_quad(rng, 20) for _ in range(3))
        assert mobius_act(S, bracket(p, q)) == bracket(mobius_act(S, p), mobius_act(S, q))
        assert delta(mobius_act(S, p), mobius_act(S, q), mobius_act(S, r)) == delta(p, q, r)


def test_mobius_requires_unit_determinant():
    S = Mobius(2, 1, 1, 1)
    assert S.compose(S.inverse()) == Mobius.identity()
    with pytest.raises(InvalidMobius):
        Mobius(1, 1, 1, 1)
    p = Quad(3, -2, 5)
    assert mobius_act(Mobius.identity(), p) == p


def test_roots_on_the_sphere():
    assert roots(Quad(0, -1, 1)) == (ProjRoot.finite(1), ProjRoot.finite(0))
    assert roots(Quad(-6, 3, 0)) == (ProjRoot.finite(2), ProjRoot.infinity())
    assert roots(Quad(4, 0, 0)) == (ProjRoot.infinity(), ProjRoot.infinity())
    first, second = roots(Quad(-2, 0, 1))
    assert first.kind == "quadratic" and first.radicand == 2
    with mp.workprec(64):
        assert abs(first.to_complex() - mp.sqrt(2)) < mp.mpf(10) ** -15
        assert abs(second.to_complex() + mp.sqrt(2)) < mp.mpf(10) ** -15
    with pytest.raises(ZeroPolynomial):
        roots(Quad(0, 0, 0))


def test_from_roots_with_infinity():
    assert Quad.from_roots(None, 2, 3) == Quad(-6, 3, 0)
    assert Quad.from_roots(None, None, 4) == Quad(4, 0, 0)


def test_resultant_vanishes_iff_common_root():
    cases = [
        (Quad.from_roots(1, 2), Quad.from_roots(2, 5), True),
        (Quad.from_roots(1, 2), Quad.from_roots(3, 5), False),
        (Quad.from_roots(None, 1), Quad.from_roots(None, 2), True),
        (Quad.from_roots(None, 1), Quad.from_roots(0, 2), False),
    ]
    for p, q, shared in cases:
        assert (res(p, q) == 0) is shared
        assert share_root(p, q) is shared


def test_discriminant_vanishes_iff_double_root():
    assert discr(Quad.from_roots(3, 3)) == 0
    assert discr(Quad(7, 0, 0)) == 0
    assert discr(Quad.from_roots(None, 3)) != 0


def test_proportionality():
    p = Quad(1, 2, 3)
    assert are_proportional(p, p.scale(Rational(-5, 2)))
    assert not are_proportional(p, Quad(1, 2, 4))


def test_linear_factors():
    g = LinFactor(-2, 1)
    assert g * LinFactor(-3, 1) == Quad(6, -5, 1)
    assert g.root() == ProjRoot.finite(2)
    assert LinFactor(1, 0).root().is_infinite
    with pytest.raises(ZeroPolynomial):
        LinFactor(0, 0)


def test_poly_divmod():
    quotient, remainder = poly_divmod((Rational(-1), Rational(0), Rational(1)), (Rational(-1), Rational(1)))
    assert quotient == (1, 1)
    assert remainder == (0,)
    quotient, remainder = poly_divmod((Rational(1), Rational(0), Rational(0), Rational(2)), (Rational(1), Rational(0), Rational(1)))
    assert quotient == (0, 2)
    assert remainder == (1, -2)
    assert poly_divmod((Rational(3),), (Rational(0), Rational(1))) == ((0,), (3,))
    with pytest.raises(ZeroPolynomial):
        poly_divmod((Rational(1),), (Rational(0), Rational(0)))
