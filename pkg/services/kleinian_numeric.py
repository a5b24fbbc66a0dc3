"""
Theta functions with characteristics, the T-isomorphism onto the space of
weight-2 Kleinian functions, and the normalized basis (S, S22, S12, S11).

Theta convention:

    theta[alpha; beta](z, Omega) =
        sum_n exp(pi i (n+alpha)^T Omega (n+alpha) + 2 pi i (n+alpha)^T (z+beta))

so that theta(z + Omega m + n) =
    exp(-pi i m^T Omega m - 2 pi i m^T (z+beta) + 2 pi i alpha^T n) theta(z).

The second-order functions psi_j(u) = theta[alpha_j; 0](2u, 2 Omega) span the
theta space; T(phi)(z) = exp(z^T Q z) phi(A^-1 z) with Q = eta_A A^-1 carries
them into the Kleinian space, and the basis is fixed by its Taylor data at 0:

    S = z1^2 + ...,  S22 = 2 z1 z2 + ...,  S12 = -z2^2 + ...,  S11 = 1 + o(z^2).
"""
import logging
import os
import random
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from mpmath import mp
from sympy import Rational

from services.curve_kummer import (
    CurvePoint,
    DivisorPair,
    Sextic,
    node,
    projective_distance,
    xi_coords,
)
from services.errors import NormalizationSingular, NotRiemannMatrix, PrecisionLoss
from services.periods_numeric import PeriodData, PeriodService, complex_to_json
from services.quad_algebra import poly_mul, to_mp
from services.richelot_core import (
    FactoredSextic,
    SignChoice,
    extract_A_matrices,
    hat_f,
    matrices_U_V,
    matrix_C_inv,
    matrix_D,
    matrix_H,
    richelot_map_numeric,
    to_mp_matrix,
)

logger = logging.getLogger(__name__)

HALF = Rational(1, 2)

# psi_j characteristics, in the order used for the Taylor system
SECOND_ORDER_ALPHAS = ((0, 0), (HALF, 0), (0, HALF), (HALF, HALF))

# Taylor targets (constant, z1^2, z1 z2, z2^2) of S, S22, S12, S11
TAYLOR_TARGETS = (
    (0, 1, 0, 0),
    (0, 0, 2, 0),
    (0, 0, 0, -1),
    (1, 0, 0, 0),
)

S_LABELS = ("S", "S22", "S12", "S11")


@dataclass(frozen=True)
class ThetaChar:
    """Characteristic [alpha; beta] with entries in {0, 1/2}."""

    alpha: Tuple[Rational, Rational] = (0, 0)
    beta: Tuple[Rational, Rational] = (0, 0)

    def __post_init__(self):
        for name in ("alpha", "beta"):
            values = []
            for v in getattr(self, name):
                v = Rational(v) % 1
                if v not in (0, HALF):
                    raise ValueError(f"Characteristic entries must be 0 or 1/2, got {v}")
                values.append(v)
            object.__setattr__(self, name, tuple(values))

    @property
    def is_even(self) -> bool:
        return int(4 * sum(a * b for a, b in zip(self.alpha, self.beta))) % 2 == 0

    def label(self) -> str:
        return f"[{self.alpha[0]},{self.alpha[1]};{self.beta[0]},{self.beta[1]}]"


def even_characteristics() -> List[ThetaChar]:
    values = (0, HALF)
    chars = [ThetaChar((a1, a2), (b1, b2)) for a1 in values for a2 in values for b1 in values for b2 in values]
    return [ch for ch in chars if ch.is_even]


def _imag_part(Omega):
    Y = mp.matrix(2, 2)
    for i in range(2):
        for j in range(2):
            Y[i, j] = mp.im((Omega[i, j] + Omega[j, i]) / 2)
    return Y


def _smallest_eigenvalue(Y):
    tr = Y[0, 0] + Y[1, 1]
    det = Y[0, 0] * Y[1, 1] - Y[0, 1] * Y[1, 0]
    return (tr - mp.sqrt(max(tr * tr - 4 * det, 0))) / 2


def theta_sum(ch: ThetaChar, z: Sequence, Omega, tol: float,
              weights: Optional[Sequence[Callable]] = None) -> Tuple[List, Any]:
    """
    Weighted theta series sum_n w(n+alpha) exp(...) for each weight, plus the
    sum of term moduli (the scale of the truncation error).
    """
    Y = _imag_part(Omega)
    lam = _smallest_eigenvalue(Y)
    if lam <= 0:
        raise NotRiemannMatrix("Im(Omega) is not positive definite", {"lambda_min": lam})
    weights = weights or [lambda k: 1]
    alpha = [to_mp(a) for a in ch.alpha]
    beta = [to_mp(b) for b in ch.beta]
    shifted = [z[0] + beta[0], z[1] + beta[1]]
    center = mp.lu_solve(Y, mp.matrix([-mp.im(z[0]), -mp.im(z[1])]))
    radius = mp.sqrt(mp.log(1 / mp.mpf(tol)) / (mp.pi * lam)) + 1
    ranges = [range(int(mp.ceil(center[i] - alpha[i] - radius)), int(mp.floor(center[i] - alpha[i] + radius)) + 1)
              for i in range(2)]
    sums = [mp.mpc(0)] * len(weights)
    abs_sum = mp.mpf(0)
    pi_i = mp.mpc(0, 1) * mp.pi
    for n1 in ranges[0]:
        for n2 in ranges[1]:
            k = (n1 + alpha[0], n2 + alpha[1])
            quad = k[0] * k[0] * Omega[0, 0] + k[0] * k[1] * (Omega[0, 1] + Omega[1, 0]) + k[1] * k[1] * Omega[1, 1]
            term = mp.exp(pi_i * quad + 2 * pi_i * (k[0] * shifted[0] + k[1] * shifted[1]))
            abs_sum += abs(term)
            sums = [s + w(k) * term for s, w in zip(sums, weights)]
    return sums, abs_sum


def theta(z: Sequence, Omega, ch: ThetaChar, tol: float = 1e-25):
    return theta_sum(ch, z, Omega, tol)[0][0]


def theta_quasi_factor(z: Sequence, Omega, ch: ThetaChar, m: Sequence[int], n: Sequence[int]):
    """exp(-pi i m^T Omega m - 2 pi i m^T (z + beta) + 2 pi i alpha^T n)."""
    pi_i = mp.mpc(0, 1) * mp.pi
    mOm = sum(m[i] * Omega[i, j] * m[j] for i in range(2) for j in range(2))
    mz = sum(m[i] * (z[i] + to_mp(ch.beta[i])) for i in range(2))
    an = sum(to_mp(ch.alpha[i]) * n[i] for i in range(2))
    return mp.exp(-pi_i * mOm - 2 * pi_i * mz + 2 * pi_i * an)


def _quadratic(z: Sequence, Q) -> Any:
    return sum(z[i] * Q[i, j] * z[j] for i in range(2) for j in range(2))


def _apply(M, z: Sequence) -> List:
    return [sum(M[i, j] * z[j] for j in range(M.cols)) for i in range(M.rows)]


def T_iso(pd: PeriodData, phi: Callable) -> Callable:
    """T(phi)(z) = exp(z^T (eta_A A^-1) z) phi(A^-1 z)."""
    A_inv = mp.inverse(pd.A)
    Q = pd.etaA * A_inv

    def transformed(z: Sequence):
        return mp.exp(_quadratic(z, Q)) * phi(_apply(A_inv, z))

    return transformed


@dataclass(frozen=True)
class SBasis:
    """The normalized Kleinian quadruple attached to one PeriodData."""

    M: Any
    Q: Any
    A_inv: Any
    Omega: Any
    theta_tol: float
    periods: PeriodData
    certificate: Dict[str, Any] = field(default_factory=dict)

    def second_order(self, z: Sequence) -> Tuple[List, List]:
        """T(psi_j)(z) for the four psi_j, with their error scales."""
        u = _apply(self.A_inv, z)
        factor = mp.exp(_quadratic(z, self.Q))
        two_u = [2 * u[0], 2 * u[1]]
        values, scales = [], []
        for alpha in SECOND_ORDER_ALPHAS:
            (value,), scale = theta_sum(ThetaChar(alpha), two_u, 2 * self.Omega, self.theta_tol)
            values.append(factor * value)
            scales.append(abs(factor) * scale)
        return values, scales

    def evaluate(self, z: Sequence) -> Tuple[List, List]:
        values, scales = self.second_order(z)
        out = [sum(self.M[i, j] * values[j] for j in range(4)) for i in range(4)]
        bounds = [self.theta_tol * sum(abs(self.M[i, j]) * scales[j] for j in range(4)) for i in range(4)]
        return out, bounds


def _taylor_matrix(Omega, A_inv, Q, tol: float):
    """Rows: (G(0), H11/2, H12, H22/2) of G_j = T(psi_j) at the origin."""
    rows = []
    four_pi_i_sq = (4 * mp.pi * mp.mpc(0, 1)) ** 2
    weights = [
        lambda k: 1,
        lambda k: four_pi_i_sq * k[0] * k[0],
        lambda k: four_pi_i_sq * k[0] * k[1],
        lambda k: four_pi_i_sq * k[1] * k[1],
    ]
    for alpha in SECOND_ORDER_ALPHAS:
        (g0, h11, h12, h22), _ = theta_sum(ThetaChar(alpha), [mp.mpc(0), mp.mpc(0)], 2 * Omega, tol, weights)
        Hpsi = mp.matrix([[h11, h12], [h12, h22]])
        H = 2 * Q * g0 + A_inv.T * Hpsi * A_inv
        rows.append([g0, H[0, 0] / 2, (H[0, 1] + H[1, 0]) / 2, H[1, 1] / 2])
    return mp.matrix(rows)


def _fd_taylor(evaluate: Callable, h) -> List[List]:
    """Central second differences at 0 for each component: (value, c11, c12, c22)."""
    zero = [mp.mpc(0), mp.mpc(0)]
    s0 = evaluate(zero)
    e1p = evaluate([h, 0])
    e1m = evaluate([-h, 0])
    e2p = evaluate([0, h])
    e2m = evaluate([0, -h])
    pp = evaluate([h, h])
    pm = evaluate([h, -h])
    mpl = evaluate([-h, h])
    mm = evaluate([-h, -h])
    out = []
    for i in range(4):
        d11 = (e1p[i] - 2 * s0[i] + e1m[i]) / (h * h)
        d22 = (e2p[i] - 2 * s0[i] + e2m[i]) / (h * h)
        d12 = (pp[i] - pm[i] - mpl[i] + mm[i]) / (4 * h * h)
        out.append([s0[i], d11 / 2, d12, d22 / 2])
    return out


class KleinianService:
    """
    Theta evaluation and the Kleinian S-basis.

    Args:
        config (dict, optional): precision, theta_tol, tol, seed; defaults
            come from RICHELOT_* env vars.
        period_service (PeriodService, optional): shared period computations
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None, period_service: Optional[PeriodService] = None):
        config = config or {}
        self.precision = int(config.get("precision", os.getenv("RICHELOT_PRECISION", 96)))
        self.theta_tol = float(config.get("theta_tol", os.getenv("RICHELOT_THETA_TOL", 1e-25)))
        self.tol = float(config.get("tol", os.getenv("RICHELOT_TOL", 1e-6)))
        self.seed = int(config.get("seed", os.getenv("RICHELOT_SEED", 20240517)))
        self.fd_step = float(config.get("fd_step", 1e-3))
        self.periods = period_service or PeriodService(config)

    def theta(self, z: Sequence, Omega, ch: ThetaChar):
        with mp.workprec(self.precision):
            return theta(z, Omega, ch, self.theta_tol)

    def theta_constants(self, Omega) -> Dict[str, Any]:
        """The ten even theta constants theta[alpha; beta](0, Omega)."""
        zero = [mp.mpc(0), mp.mpc(0)]
        with mp.workprec(self.precision):
            return {ch.label(): theta(zero, Omega, ch, self.theta_tol) for ch in even_characteristics()}

    def T_iso(self, pd: PeriodData, phi: Callable) -> Callable:
        with mp.workprec(self.precision):
            return T_iso(pd, phi)

    def build_S_basis(self, f: Sextic, pd: PeriodData) -> SBasis:
        logger.info(f"Building S-basis for f = {f.to_json()}")
        with mp.workprec(self.precision):
            A_inv = mp.inverse(pd.A)
            Q = pd.etaA * A_inv
            Omega = pd.Omega
            tay = _taylor_matrix(Omega, A_inv, Q, self.theta_tol)
            scale = mp.mnorm(tay, 1)
            if abs(mp.det(tay)) <= mp.mpf(10) ** (-mp.dps // 2) * scale ** 4:
                raise NormalizationSingular("Taylor system of the theta basis is singular",
                                            {"det": mp.nstr(mp.det(tay), 5)})
            target = mp.matrix([list(row) for row in TAYLOR_TARGETS])
            M = target * mp.inverse(tay)
            sb = SBasis(M, Q, A_inv, Omega, self.theta_tol, pd)
            certificate = self._certificate(sb, M * tay, target)
        logger.info(f"S-basis built; Taylor residual {certificate['finite_difference']:.3e}")
        return replace(sb, certificate=certificate)

    def _certificate(self, sb: SBasis, analytic, target) -> Dict[str, float]:
        analytic_residual = mp.mnorm(analytic - target, 1)
        h = mp.mpf(self.fd_step)
        coarse = _fd_taylor(lambda z: sb.evaluate(z)[0], h)
        fine = _fd_taylor(lambda z: sb.evaluate(z)[0], h / 2)
        worst = mp.mpf(0)
        halving = mp.mpf(0)
        for i in range(4):
            for k in range(4):
                extrapolated = fine[i][k] + (fine[i][k] - coarse[i][k]) / 3
                worst = max(worst, abs(extrapolated - target[i, k]))
                halving = max(halving, abs(fine[i][k] - coarse[i][k]))
        return {
            "analytic": float(analytic_residual),
            "finite_difference": float(worst),
            "step_halving": float(halving),
            "step": float(h),
        }

    def eval_S_vec(self, sb: SBasis, z: Sequence) -> List:
        with mp.workprec(self.precision):
            z = [mp.mpc(to_mp(v)) for v in z]
            values, bounds = sb.evaluate(z)
        if all(abs(v) <= 100 * b for v, b in zip(values, bounds)):
            raise PrecisionLoss("All S components are below the truncation error",
                                {"z": [complex_to_json(v) for v in z]})
        return values

    def wp(self, sb: SBasis, z: Sequence) -> Dict[str, Any]:
        """wp_jk = S_jk / S."""
        s, s22, s12, s11 = self.eval_S_vec(sb, z)
        with mp.workprec(self.precision):
            return {"wp22": s22 / s, "wp12": s12 / s, "wp11": s11 / s}

    def sample_points(self, pd: PeriodData, count: int, seed: Optional[int] = None) -> List[List]:
        """z = A u + B v with u, v uniform in [-1/2, 1/2]^2."""
        rng = random.Random(self.seed if seed is None else seed)
        points = []
        with mp.workprec(self.precision):
            for _ in range(count):
                u = [mp.mpf(rng.uniform(-0.5, 0.5)) for _ in range(2)]
                v = [mp.mpf(rng.uniform(-0.5, 0.5)) for _ in range(2)]
                Au = _apply(pd.A, u)
                Bv = _apply(pd.B, v)
                points.append([Au[0] + Bv[0], Au[1] + Bv[1]])
        return points

    def random_divisors(self, f: Sextic, count: int, seed: Optional[int] = None) -> List[DivisorPair]:
        """Generic complex divisors kept away from the branch points."""
        rng = random.Random(self.seed if seed is None else seed)
        roots = self.periods.branch_points(f)
        lo = min(float(mp.re(e)) for e in roots) - 1
        hi = max(float(mp.re(e)) for e in roots) + 1
        divisors = []
        with mp.workprec(self.precision):
            while len(divisors) < count:
                points = []
                while len(points) < 2:
                    x = mp.mpc(rng.uniform(lo, hi), rng.choice((-1, 1)) * rng.uniform(0.3, 1.2))
                    if min(abs(x - e) for e in roots) < 0.1:
                        continue
                    y = mp.sqrt(f(x)) * rng.choice((-1, 1))
                    points.append(CurvePoint(x, y))
                if abs(points[0].x - points[1].x) > 0.1:
                    divisors.append(DivisorPair(points[0], points[1]))
        return divisors

    @staticmethod
    def _relative(lhs: Sequence, rhs: Sequence) -> float:
        scale = max(abs(v) for v in lhs)
        return float(max(abs(a - b) for a, b in zip(lhs, rhs)) / scale)

    def verify_quasi_periodicity(self, sb: SBasis, z: Sequence) -> float:
        """max over generators w of |S(z+w) - exp(2 eta(w)^T (z + w/2)) S(z)|, relative."""
        pd = sb.periods
        L = pd.lattice()
        E = pd.eta_generators()
        worst = 0.0
        with mp.workprec(self.precision):
            base = self.eval_S_vec(sb, z)
            for k in range(4):
                w = L.column(k)
                eta = [E[0, k], E[1, k]]
                factor = mp.exp(2 * sum(eta[i] * (z[i] + w[i] / 2) for i in range(2)))
                shifted = self.eval_S_vec(sb, [z[0] + w[0], z[1] + w[1]])
                worst = max(worst, self._relative(shifted, [factor * v for v in base]))
        return worst

    def verify_evenness(self, sb: SBasis, z: Sequence) -> float:
        plus = self.eval_S_vec(sb, z)
        minus = self.eval_S_vec(sb, [-z[0], -z[1]])
        return self._relative(plus, minus)

    def verify_theta_quasi_periodicity(self, Omega, ch: ThetaChar, z: Sequence,
                                       m: Sequence[int], n: Sequence[int]) -> float:
        with mp.workprec(self.precision):
            shift = [z[i] + sum(Omega[i, j] * m[j] for j in range(2)) + n[i] for i in range(2)]
            lhs = theta(shift, Omega, ch, self.theta_tol)
            rhs = theta_quasi_factor(z, Omega, ch, m, n) * theta(z, Omega, ch, self.theta_tol)
            return float(abs(lhs - rhs) / max(abs(lhs), mp.mpf(10) ** (-mp.dps)))

    def verify_addition_formula(self, Omega, zs: Sequence[Sequence]) -> float:
        """theta[0; alpha_j](z, Omega)^2 = sum_k (-1)^(4 alpha_k.alpha_j) theta[alpha_k; 0](0, 2 Omega) psi_k(z)."""
        worst = 0.0
        zero = [mp.mpc(0), mp.mpc(0)]
        with mp.workprec(self.precision):
            consts = [theta(zero, 2 * Omega, ThetaChar(a), self.theta_tol) for a in SECOND_ORDER_ALPHAS]
            for z in zs:
                psis = [theta([2 * z[0], 2 * z[1]], 2 * Omega, ThetaChar(a), self.theta_tol)
                        for a in SECOND_ORDER_ALPHAS]
                lhs, rhs = [], []
                for aj in SECOND_ORDER_ALPHAS:
                    lhs.append(theta(z, Omega, ThetaChar((0, 0), aj), self.theta_tol) ** 2)
                    total = mp.mpc(0)
                    for ak, c, p in zip(SECOND_ORDER_ALPHAS, consts, psis):
                        sign = -1 if int(4 * (ak[0] * aj[0] + ak[1] * aj[1])) % 2 else 1
                        total += sign * c * p
                    rhs.append(total)
                worst = max(worst, self._relative(lhs, rhs))
        return worst

    def verify_main_theorem(self, fs: FactoredSextic, sb_f: SBasis, sb_hat: SBasis,
                            zs: Sequence[Sequence]) -> Dict[str, Any]:
        """S_f(z) = -exp(z^T H z) / (32 Delta^3) (S^^T A_j S^)_j at each sample z."""
        samples = []
        with mp.workprec(self.precision):
            A_family = [to_mp_matrix(A) for A in extract_A_matrices(fs)]
            H = to_mp_matrix(matrix_H(fs))
            d3 = to_mp(fs.delta) ** 3
            for z in zs:
                z = [mp.mpc(v) for v in z]
                lhs = self.eval_S_vec(sb_f, z)
                hat = self.eval_S_vec(sb_hat, z)
                scalar = -mp.exp(_quadratic(z, H)) / (32 * d3)
                rhs = [scalar * sum(hat[i] * A[i, j] * hat[j] for i in range(4) for j in range(4)) for A in A_family]
                samples.append({
                    "z": [complex_to_json(v) for v in z],
                    "lhs": [complex_to_json(v) for v in lhs],
                    "rhs": [complex_to_json(v) for v in rhs],
                    "residual": self._relative(lhs, rhs),
                    "projective": projective_distance(lhs, rhs),
                })
        return {
            "samples": samples,
            "max_residual": max((s["residual"] for s in samples), default=0.0),
            "max_projective": max((s["projective"] for s in samples), default=0.0),
        }

    def verify_kummer_diagram(self, fs: FactoredSextic, sb_f: SBasis, pd_hat: PeriodData,
                              divisors: Sequence[DivisorPair]) -> Dict[str, Any]:
        """richelot_map(xi_f^(D^)) against S_f(abel_pair(f^, D^)), projectively."""
        f_hat = hat_f(fs)
        samples = []
        for D in divisors:
            z = self.periods.abel_pair(f_hat, D, pd_hat)
            with mp.workprec(self.precision):
                xi = xi_coords(f_hat, D)
                image = richelot_map_numeric(fs, list(xi.coords))
                image = [image[i] for i in range(4)]
            theta_side = self.eval_S_vec(sb_f, z)
            samples.append({
                "z": [complex_to_json(v) for v in z],
                "richelot": [complex_to_json(v) for v in image],
                "kleinian": [complex_to_json(v) for v in theta_side],
                "projective": projective_distance(theta_side, image),
            })
        return {"samples": samples, "max_projective": max((s["projective"] for s in samples), default=0.0)}

    def verify_wp_xi(self, f: Sextic, sb: SBasis, divisors: Sequence[DivisorPair]) -> float:
        """wp_jk(A_f(D)) against xi_jk(D), relative."""
        worst = 0.0
        for D in divisors:
            z = self.periods.abel_pair(f, D, sb.periods)
            values = self.wp(sb, z)
            with mp.workprec(self.precision):
                xi = xi_coords(f, D)
                lhs = [values["wp22"], values["wp12"], values["wp11"]]
                rhs = list(xi.coords[1:])
                worst = max(worst, self._relative(rhs, lhs))
        return worst

    def verify_node_half_periods(self, fs: FactoredSextic, sb_f: SBasis) -> Dict[str, float]:
        """S_f at the half-period of each factor's Weierstrass pair against the node N_p, N_q, N_r."""
        br = self.periods.branching(fs.f)
        out = {}
        for name, (p, g) in zip("pqr", self._node_cofactors(fs)):
            i, j = self.periods._factor_indices(br, p)
            D = self.periods.weierstrass_divisor(fs.f, i, j)
            z = self.periods.abel_pair(fs.f, D, sb_f.periods)
            values = self.eval_S_vec(sb_f, z)
            with mp.workprec(self.precision):
                expected = node(fs.f, p.coeffs, g)
            out[name] = projective_distance([mp.mpc(to_mp(c)) for c in expected.coords], values)
        return out

    @staticmethod
    def _node_cofactors(fs: FactoredSextic) -> List[Tuple[Any, Tuple]]:
        p, q, r = fs.factors
        return [(p, poly_mul(q.coeffs, r.coeffs)), (q, poly_mul(r.coeffs, p.coeffs)), (r, poly_mul(p.coeffs, q.coeffs))]

    def verify_square_relation(self, fs: FactoredSextic, s: SignChoice, sb_f: SBasis, sb_hat: SBasis,
                               zs: Sequence[Sequence]) -> float:
        """B S_f(z) against Sq(B^ S_f^(z)) projectively, B^-1 = D V and B^ = U Cinv."""
        U, V = matrices_U_V(fs, s)
        B = (matrix_D(fs) * V).inv()
        B_hat = U * matrix_C_inv(fs)
        worst = 0.0
        with mp.workprec(self.precision):
            Bm = to_mp_matrix(B)
            Bh = to_mp_matrix(B_hat)
            for z in zs:
                lhs = _apply(Bm, self.eval_S_vec(sb_f, z))
                rhs = [v * v for v in _apply(Bh, self.eval_S_vec(sb_hat, z))]
                worst = max(worst, projective_distance(lhs, rhs))
        return worst
