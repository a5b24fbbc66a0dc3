import pytest
from mpmath import mp
from sympy import Rational

from services.check_interface import CheckContext
from services.kleinian_numeric import (
    KleinianService,
    ThetaChar,
    even_characteristics,
    theta,
    theta_quasi_factor,
)
from services.quad_algebra import LinFactor, Quad
from services.richelot_core import FactoredSextic, SignChoice, hat_f

PRECISION = 96


def sample_omega():
    return mp.matrix([[mp.mpc(0.1, 1.2), mp.mpc(0.3, 0.2)], [mp.mpc(0.3, 0.2), mp.mpc(-0.2, 0.9)]])


def test_characteristics():
    assert ThetaChar((1, 0)).alpha == (0, 0)
    assert ThetaChar((Rational(3, 2), 0)).alpha == (Rational(1, 2), 0)
    with pytest.raises(ValueError):
        ThetaChar((Rational(1, 3), 0))
    evens = even_characteristics()
    assert len(evens) == 10
    assert not ThetaChar((Rational(1, 2), 0), (Rational(1, 2), 0)).is_even


def test_theta_factorizes_on_a_diagonal_period_matrix():
    with mp.workprec(PRECISION):
        Omega = mp.matrix([[1j, 0], [0, 2j]])
        zero = [mp.mpc(0), mp.mpc(0)]
        expected = mp.jtheta(3, 0, mp.exp(-mp.pi)) * mp.jtheta(3, 0, mp.exp(-2 * mp.pi))
        assert abs(theta(zero, Omega, ThetaChar()) - expected) < mp.mpf(10) ** -20


def test_theta_quasi_periodicity():
    service = KleinianService({"precision": PRECISION})
    with mp.workprec(PRECISION):
        Omega = sample_omega()
        z = [mp.mpc(0.17, -0.05), mp.mpc(-0.31, 0.12)]
    for ch in even_characteristics():
        for m, n in (((1, 0), (0, 1)), ((0, -1), (1, 1)), ((1, 1), (0, 0))):
            assert service.verify_theta_quasi_periodicity(Omega, ch, z, m, n) < 1e-12


def test_odd_theta_vanishes_at_the_origin():
    with mp.workprec(PRECISION):
        odd = ThetaChar((Rational(1, 2), 0), (Rational(1, 2), 0))
        assert abs(theta([mp.mpc(0), mp.mpc(0)], sample_omega(), odd)) < mp.mpf(10) ** -20
        factor = theta_quasi_factor([mp.mpc(0), mp.mpc(0)], sample_omega(), ThetaChar(), (0, 0), (1, 0))
        assert abs(factor - 1) < mp.mpf(10) ** -25


def test_addition_formula():
    service = KleinianService({"precision": PRECISION})
    with mp.workprec(PRECISION):
        zs = [[mp.mpc(0.2, 0.1), mp.mpc(-0.4, 0.05)], [mp.mpc(-0.1, -0.2), mp.mpc(0.3, 0.3)]]
        assert service.verify_addition_formula(sample_omega(), zs) < 1e-12
        constants = service.theta_constants(sample_omega())
    assert len(constants) == 10
    assert min(abs(v) for v in constants.values()) > 1e-6


@pytest.fixture(scope="module")
def ctx():
    fs = FactoredSextic(Quad(0, -1, 1), Quad(6, -5, 1), Quad(20, -9, 1))
    return CheckContext(fs, {"precision": PRECISION, "seed": 11})


@pytest.mark.numeric
def test_s_basis_normalization(ctx):
    for sb in (ctx.sb_f, ctx.sb_hat):
        assert sb.certificate["analytic"] < 1e-15
        assert sb.certificate["finite_difference"] < 1e-6
    with mp.workprec(PRECISION):
        values = ctx.kleinian_service.eval_S_vec(ctx.sb_f, [mp.mpc(0), mp.mpc(0)])
        assert max(abs(v) for v in values[:3]) < 1e-20
        assert abs(values[3] - 1) < 1e-20


@pytest.mark.numeric
def test_s_basis_is_even_and_quasi_periodic(ctx):
    service = ctx.kleinian_service
    for sb in (ctx.sb_f, ctx.sb_hat):
        z = service.sample_points(sb.periods, 1, 5)[0]
        assert service.verify_evenness(sb, z) < 1e-15
        assert service.verify_quasi_periodicity(sb, z) < 1e-6


@pytest.mark.numeric
def test_wp_matches_xi_and_nodes(ctx):
    service = ctx.kleinian_service
    divisors = service.random_divisors(ctx.fs.f, 3, 5)
    assert service.verify_wp_xi(ctx.fs.f, ctx.sb_f, divisors) < 1e-6
    assert max(service.verify_node_half_periods(ctx.fs, ctx.sb_f).values()) < 1e-6


@pytest.mark.numeric
def test_main_theorem(ctx):
    service = ctx.kleinian_service
    zs = service.sample_points(ctx.adapted.f_periods, 4, 9)
    report = service.verify_main_theorem(ctx.fs, ctx.sb_f, ctx.sb_hat, zs)
    assert report["max_residual"] < 1e-6
    assert len(report["samples"]) == 4


@pytest.mark.numeric
def test_kummer_diagram_and_square_relation(ctx):
    service = ctx.kleinian_service
    divisors = service.random_divisors(hat_f(ctx.fs), 3, 13)
    report = service.verify_kummer_diagram(ctx.fs, ctx.sb_f, ctx.adapted.hat_periods, divisors)
    assert report["max_projective"] < 1e-6
    signs = SignChoice.from_factors(*[LinFactor(-k, 1) for k in range(6)])
    zs = service.sample_points(ctx.adapted.f_periods, 2, 17)
    assert service.verify_square_relation(ctx.fs, signs, ctx.sb_f, ctx.sb_hat, zs) < 1e-6
