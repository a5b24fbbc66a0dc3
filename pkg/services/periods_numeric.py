"""
Periods of the differentials of the first and second kind, symplectic
bases, the Abel map, and lattice checks for Richelot-isogenous curves.

Branch handling: along a straight segment [a, b] the square root y of f is
the product sqrt(lead) * prod_j sqrt_j(x - e_j), where each factor is a
principal square root rotated so that x - e_j never crosses its cut while x
runs over the segment. Endpoint branch points are removed analytically by
the substitutions x = m - h cos(theta) (both ends) or x = a + (b - a) t^2
(one end), after which mpmath's tanh-sinh quadrature sees a smooth integrand.

Cycles: c_k is the loop around the segment [e_k, e_{k+1}] of the sorted
branch points (k = 0..3). Its integral is twice the segment integral. The
intersection matrix is recovered from the bilinear pairing
E(g, g') = sum_m [eta_m(g) omega_m(g') - omega_m(g) eta_m(g')] = 2 pi i <g, g'>.
"""
import functools
import itertools
import logging
import os
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from mpmath import mp
from sympy import Rational

from services.curve_kummer import CurvePoint, DivisorPair, Sextic, is_admissible
from services.errors import (
    BasisSearchFailed,
    IllConditioned,
    InfinitePoint,
    NotAdmissible,
    NotRiemannMatrix,
    PathDegeneracy,
)
from services.quad_algebra import Mobius, mobius_act, scalar_to_json, to_mp
from services.quad_algebra import roots as quad_roots
from services.richelot_core import FactoredSextic, hat_f

logger = logging.getLogger(__name__)

J4 = [[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]]

DIFFERENTIAL_NAMES = ("omega1", "omega2", "r1", "r2")


def complex_to_json(z) -> List[str]:
    z = mp.mpc(z)
    return [mp.nstr(z.real, mp.dps), mp.nstr(z.imag, mp.dps)]


def matrix_to_json(M) -> List[List[List[str]]]:
    return [[complex_to_json(M[i, j]) for j in range(M.cols)] for i in range(M.rows)]


def mobius_to_json(S: Optional[Mobius]) -> Optional[List[str]]:
    if S is None:
        return None
    return [scalar_to_json(v) for v in (S.a, S.b, S.c, S.d)]


def _rsqrt(z, phi):
    """Square root with its cut along the ray of angle phi + pi."""
    return mp.expj(phi / 2) * mp.sqrt(z * mp.expj(-phi))


def _distance_to_segment(e, a, b):
    d = b - a
    t = mp.re((e - a) * mp.conj(d)) / (abs(d) ** 2)
    t = min(max(t, 0), 1)
    return abs(a + t * d - e)


class Branching:
    """Branch points of y^2 = f(x) and segment integration of the four differentials."""

    def __init__(self, f: Sextic, separation: float, maxdegree: int = 8):
        coeffs = [to_mp(c) for c in f.coeffs]
        degree = f.degree()
        self.coeffs = coeffs
        self.degree = degree
        self.lead = coeffs[degree]
        self.sqrt_lead = mp.sqrt(mp.mpc(self.lead))
        self.maxdegree = maxdegree
        self.separation = mp.mpf(separation)
        found = mp.polyroots(list(reversed(coeffs[: degree + 1])), maxsteps=400, extraprec=2 * mp.prec)
        self.roots = sorted((mp.mpc(e) for e in found), key=lambda e: (round(float(e.real), 9), float(e.imag)))
        for e1, e2 in itertools.combinations(self.roots, 2):
            if abs(e1 - e2) < self.separation:
                raise IllConditioned("Branch points are closer than the separation threshold",
                                     {"e1": e1, "e2": e2, "separation": separation})

    def numerators(self, x) -> List:
        """Numerators of omega1, omega2, r1, r2 (each to be divided by y)."""
        f = self.coeffs
        return [
            mp.mpf(1),
            x,
            (f[3] * x + 2 * f[4] * x ** 2 + 3 * f[5] * x ** 3 + 4 * f[6] * x ** 4) / 4,
            (f[5] * x ** 2 + 2 * f[6] * x ** 3) / 4,
        ]

    def index_of(self, x) -> Optional[int]:
        for j, e in enumerate(self.roots):
            if abs(x - e) < self.separation:
                return j
        return None

    def _phi(self, e, a, b):
        da = a - e
        db = b - e
        if da == 0:
            return mp.arg(db)
        if db == 0:
            return mp.arg(da)
        u = da / abs(da) + db / abs(db)
        if abs(u) < self.separation:
            raise PathDegeneracy("Segment passes through a branch point", {"e": e, "a": a, "b": b})
        return mp.arg(u)

    def rotations(self, a, b) -> List:
        return [self._phi(e, a, b) for e in self.roots]

    def y_at(self, x, phis: Sequence):
        """y at a point of the segment, on the branch fixed by the segment's rotations."""
        return self.sqrt_lead * mp.fprod(_rsqrt(x - e, phi) for e, phi in zip(self.roots, phis))

    def segment(self, a, b, ia: Optional[int] = None, ib: Optional[int] = None,
                count: int = 4) -> Tuple[List, List]:
        """
        Integrals over [a, b] of the first `count` differentials, with
        branch-point endpoints flagged by their root index.
        """
        skip = {k for k in (ia, ib) if k is not None}
        for j, e in enumerate(self.roots):
            if j not in skip and _distance_to_segment(e, a, b) < self.separation:
                raise PathDegeneracy("Integration path runs into a branch point", {"e": e, "a": a, "b": b})
        phis = self.rotations(a, b)
        others = [j for j in range(len(self.roots)) if j not in skip]

        def rest(x):
            return self.sqrt_lead * mp.fprod(_rsqrt(x - self.roots[j], phis[j]) for j in others)

        if ia is not None and ib is not None:
            m = (a + b) / 2
            h = (b - a) / 2
            scale = 2 * h / (_rsqrt(2 * h, phis[ia]) * _rsqrt(-2 * h, phis[ib]))
            interval = [0, mp.pi]

            def point(t):
                x = m - h * mp.cos(t)
                return x, scale / rest(x)
        elif ia is not None:
            scale = 2 * (b - a) / _rsqrt(b - a, phis[ia])
            interval = [0, 1]

            def point(t):
                x = a + (b - a) * t * t
                return x, scale / rest(x)
        elif ib is not None:
            scale = -2 * (a - b) / _rsqrt(a - b, phis[ib])
            interval = [0, 1]

            def point(t):
                x = b + (a - b) * t * t
                return x, scale / rest(x)
        else:
            interval = [0, 1]

            def point(t):
                x = a + (b - a) * t
                return x, (b - a) / rest(x)

        cache: Dict[Any, Tuple[List, Any]] = {}

        def sample(t):
            if t not in cache:
                x, weight = point(t)
                cache[t] = (self.numerators(x), weight)
            return cache[t]

        values = []
        for k in range(count):
            value, err = mp.quad(lambda t, k=k: sample(t)[0][k] * sample(t)[1], interval,
                                 error=True, maxdegree=self.maxdegree)
            if err > mp.mpf(10) ** (-mp.dps // 2) * max(1, abs(value)):
                logger.warning(f"Quadrature error estimate {mp.nstr(err, 3)} on segment {a} -> {b}")
            values.append(value)
        return values, phis


@dataclass(frozen=True)
class LatticeApprox:
    """Lattice in C^2 spanned by the columns a1, a2, b1, b2 of a 2x4 matrix."""

    generators: Any
    tol: float = 1e-6

    def _real_system(self):
        G = mp.matrix(4, 4)
        for k in range(4):
            w = (self.generators[0, k], self.generators[1, k])
            G[0, k], G[1, k] = mp.re(w[0]), mp.im(w[0])
            G[2, k], G[3, k] = mp.re(w[1]), mp.im(w[1])
        return G

    def column(self, k: int) -> List:
        return [self.generators[0, k], self.generators[1, k]]

    def coordinates(self, z: Sequence) -> List:
        rhs = mp.matrix([mp.re(z[0]), mp.im(z[0]), mp.re(z[1]), mp.im(z[1])])
        sol = mp.lu_solve(self._real_system(), rhs)
        return [sol[k] for k in range(4)]

    def integer_coordinates(self, z: Sequence) -> List[int]:
        coords = self.coordinates(z)
        rounded = [int(mp.nint(c)) for c in coords]
        if max(abs(c - n) for c, n in zip(coords, rounded)) > self.tol:
            raise IllConditioned("Vector is not in the lattice", {"coordinates": [mp.nstr(c, 8) for c in coords]})
        return rounded

    def contains(self, z: Sequence) -> bool:
        coords = self.coordinates(z)
        return max(abs(c - mp.nint(c)) for c in coords) <= self.tol

    def combine(self, n: Sequence[int]) -> List:
        return [sum(n[k] * self.generators[i, k] for k in range(4)) for i in range(2)]

    def covolume(self):
        return abs(mp.det(self._real_system()))

    def reduce(self, z: Sequence) -> List:
        """Translate z by a lattice vector into the centred fundamental cell."""
        shift = [int(mp.nint(c)) for c in self.coordinates(z)]
        w = self.combine(shift)
        return [z[0] - w[0], z[1] - w[1]]


def lattice_member(z: Sequence, L: LatticeApprox) -> bool:
    return L.contains(z)


@dataclass(frozen=True)
class PeriodData:
    """Periods on a symplectic basis (a1, a2, b1, b2); columns of A are omega-periods of a1, a2."""

    A: Any
    B: Any
    etaA: Any
    etaB: Any
    Omega: Any
    homology: Dict[str, Any] = field(default_factory=dict)
    precision: int = 96
    tol: float = 1e-6

    def lattice(self) -> LatticeApprox:
        G = mp.matrix(2, 4)
        for i in range(2):
            for k in range(2):
                G[i, k] = self.A[i, k]
                G[i, k + 2] = self.B[i, k]
        return LatticeApprox(G, self.tol)

    def eta_generators(self):
        E = mp.matrix(2, 4)
        for i in range(2):
            for k in range(2):
                E[i, k] = self.etaA[i, k]
                E[i, k + 2] = self.etaB[i, k]
        return E

    def eta_of(self, w: Sequence) -> List:
        """eta(w) for a lattice vector w, by linearity over its integer coordinates."""
        n = self.lattice().integer_coordinates(w)
        E = self.eta_generators()
        return [sum(n[k] * E[i, k] for k in range(4)) for i in range(2)]

    def legendre_residuals(self) -> Dict[str, float]:
        two_pi_i = 2j * mp.pi
        L = self.B * self.etaA.T - self.A * self.etaB.T
        legendre = mp.mnorm(L - two_pi_i * mp.eye(2), 1) / mp.mnorm(two_pi_i * mp.eye(2), 1)
        P = self.etaA * self.etaB.T
        Q = self.etaA.T * self.A
        R = self.etaB.T * self.B
        scale = max(mp.mnorm(P, 1), mp.mnorm(Q, 1), mp.mnorm(R, 1), 1)
        return {
            "legendre": float(legendre),
            "etaA_etaB_symmetry": float(mp.mnorm(P - P.T, 1) / scale),
            "etaA_A_symmetry": float(mp.mnorm(Q - Q.T, 1) / scale),
            "etaB_B_symmetry": float(mp.mnorm(R - R.T, 1) / scale),
            "omega_symmetry": float(mp.mnorm(self.Omega - self.Omega.T, 1) / max(mp.mnorm(self.Omega, 1), 1)),
        }

    def to_json(self) -> Dict[str, Any]:
        return {
            "precision": self.precision,
            "A": matrix_to_json(self.A),
            "B": matrix_to_json(self.B),
            "etaA": matrix_to_json(self.etaA),
            "etaB": matrix_to_json(self.etaB),
            "Omega": matrix_to_json(self.Omega),
            "homology": self.homology,
        }


@dataclass(frozen=True)
class AdaptedBases:
    """Symplectic basis (a1, a2, b1, b2) of Per_f with a1, a2 in Per_f^, and the induced (a1, a2, 2b1, 2b2).

    Periods belong to `model`, which is the input factorization moved by
    `mobius` when f or f^ has a root at infinity (None otherwise).
    """

    f_periods: PeriodData
    hat_periods: PeriodData
    transform: List[List[int]]
    hat_coordinates: List[List[int]]
    kernel_labels: Dict[str, str]
    model: Optional[FactoredSextic] = None
    mobius: Optional[Mobius] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "f_periods": self.f_periods.to_json(),
            "hat_periods": self.hat_periods.to_json(),
            "transform": self.transform,
            "hat_coordinates": self.hat_coordinates,
            "kernel_labels": self.kernel_labels,
            "model": self.model.to_json() if self.model is not None else None,
            "mobius": mobius_to_json(self.mobius),
        }


def intersection_form(u: Sequence[int], v: Sequence[int], K: Sequence[Sequence[int]]) -> int:
    return sum(u[i] * K[i][j] * v[j] for i in range(len(u)) for j in range(len(v)))


def symplectic_reduction(K: Sequence[Sequence[int]]) -> List[List[int]]:
    """
    Integer change of basis M (rows a1, a2, b1, b2 in the old coordinates)
    with M K M^T equal to the standard symplectic form.
    """
    n = len(K)
    vecs = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    a_rows, b_rows = [], []
    while 2 * len(a_rows) < n:
        candidates = list(vecs) + [
            [x + s * y for x, y in zip(vecs[i], vecs[j])]
            for i, j in itertools.combinations(range(len(vecs)), 2) for s in (1, -1)
        ]
        pair = None
        for u, v in itertools.combinations(candidates, 2):
            if abs(intersection_form(u, v, K)) == 1:
                pair = (u, v)
                break
        if pair is None:
            raise BasisSearchFailed("Intersection form has no unimodular pair", {"K": K})
        u, v = pair
        if intersection_form(u, v, K) == -1:
            v = [-x for x in v]
        # a unimodular pair splits off; the projections span the orthogonal complement
        rest = []
        for w in vecs:
            wv = intersection_form(w, v, K)
            wu = intersection_form(w, u, K)
            projected = [w[i] - wv * u[i] + wu * v[i] for i in range(n)]
            if any(projected) and projected not in rest:
                rest.append(projected)
        a_rows.append(u)
        b_rows.append(v)
        vecs = rest
    return a_rows + b_rows


def _transvect(M: List[List[int]], v: Sequence[int]) -> List[List[int]]:
    out = []
    for row in M:
        c = row[0] * v[2] + row[1] * v[3] - row[2] * v[0] - row[3] * v[1]
        out.append([row[i] + c * v[i] for i in range(4)])
    return out


def _span_mod2(rows: Sequence[Sequence[int]]) -> set:
    span = {(0, 0, 0, 0)}
    for row in rows:
        r = tuple(x % 2 for x in row)
        span |= {tuple((s + t) % 2 for s, t in zip(r, x)) for x in span}
    return span


def adapted_transform(N: Sequence[Sequence[int]], max_depth: int = 8) -> List[List[int]]:
    """
    Integer symplectic M whose first two rows reduce mod 2 into the span of
    the rows of N (the sublattice modulo twice the lattice).
    """
    target = _span_mod2(N)
    if len(target) != 4:
        raise BasisSearchFailed("Sublattice is not of index 4 over twice the lattice",
                                {"span_size": len(target)})
    moves = [v for v in itertools.product((0, 1), repeat=4) if any(v)]
    start = [[1 if i == j else 0 for j in range(4)] for i in range(4)]

    def key(M):
        return tuple(x % 2 for row in M for x in row)

    def done(M):
        return tuple(x % 2 for x in M[0]) in target and tuple(x % 2 for x in M[1]) in target

    queue = deque([(start, 0)])
    seen = {key(start)}
    while queue:
        M, depth = queue.popleft()
        if done(M):
            return M
        if depth == max_depth:
            continue
        for v in moves:
            nxt = _transvect(M, v)
            k = key(nxt)
            if k not in seen:
                seen.add(k)
                queue.append((nxt, depth + 1))
    raise BasisSearchFailed("No adapted symplectic basis within the search bound", {"max_depth": max_depth})


class PeriodService:
    """
    Numeric periods and Abel map at a configurable working precision.

    Args:
        config (dict, optional): precision (bits), lattice_tol, legendre_tol,
            branch_separation, maxdegree; defaults come from RICHELOT_* env vars.
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        config = config or {}
        self.precision = int(config.get("precision", os.getenv("RICHELOT_PRECISION", 96)))
        self.lattice_tol = float(config.get("lattice_tol", os.getenv("RICHELOT_LATTICE_TOL", 1e-6)))
        self.legendre_tol = float(config.get("legendre_tol", os.getenv("RICHELOT_LEGENDRE_TOL", 1e-8)))
        self.branch_separation = float(
            config.get("branch_separation", os.getenv("RICHELOT_BRANCH_SEPARATION", 1e-8)))
        self.maxdegree = int(config.get("maxdegree", os.getenv("RICHELOT_QUAD_MAXDEGREE", 8)))
        self.model_search = int(config.get("model_search", os.getenv("RICHELOT_MODEL_SEARCH", 20)))
        # per-curve caches, bounded for long-running API processes
        self.cache_size = int(config.get("cache_size", os.getenv("RICHELOT_PERIOD_CACHE", 16)))
        self._branching_cache = functools.lru_cache(maxsize=self.cache_size)(self._build_branching)
        self._period_cache = functools.lru_cache(maxsize=self.cache_size)(self._compute_periods)

    def _build_branching(self, f: Sextic) -> Branching:
        if not is_admissible(f):
            raise NotAdmissible("Periods need an admissible curve", {"f": f.to_json()})
        with mp.workprec(self.precision):
            return Branching(f, self.branch_separation, self.maxdegree)

    def branching(self, f: Sextic) -> Branching:
        return self._branching_cache(f)

    def differentials(self, f: Sextic) -> Dict[str, Callable]:
        """Integrands of omega1, omega2, r1, r2 per unit dx at a point (x, y)."""
        coeffs = [to_mp(c) for c in f.coeffs]

        def r1(x, y):
            return (coeffs[3] * x + 2 * coeffs[4] * x ** 2 + 3 * coeffs[5] * x ** 3 + 4 * coeffs[6] * x ** 4) / (4 * y)

        def r2(x, y):
            return (coeffs[5] * x ** 2 + 2 * coeffs[6] * x ** 3) / (4 * y)

        return {
            "omega1": lambda x, y: 1 / y,
            "omega2": lambda x, y: x / y,
            "r1": r1,
            "r2": r2,
        }

    def branch_points(self, f: Sextic) -> List:
        return list(self.branching(f).roots)

    def _cycle_periods(self, br: Branching) -> Tuple[Any, Any]:
        W = mp.matrix(2, 4)
        E = mp.matrix(2, 4)
        for k in range(4):
            values, _ = br.segment(br.roots[k], br.roots[k + 1], k, k + 1)
            W[0, k], W[1, k] = 2 * values[0], 2 * values[1]
            E[0, k], E[1, k] = -2 * values[2], -2 * values[3]
        return W, E

    @staticmethod
    def _pairing_matrix(W, E) -> List[List[Any]]:
        two_pi_i = 2j * mp.pi
        return [
            [sum(E[m, i] * W[m, j] - W[m, i] * E[m, j] for m in range(2)) / two_pi_i for j in range(4)]
            for i in range(4)
        ]

    def compute_periods(self, f: Sextic) -> PeriodData:
        return self._period_cache(f)

    def _compute_periods(self, f: Sextic) -> PeriodData:
        br = self.branching(f)
        logger.info(f"Computing periods at {self.precision} bits for f = {f.to_json()}")
        with mp.workprec(self.precision):
            W, E = self._cycle_periods(br)
            raw = self._pairing_matrix(W, E)
            K = [[int(mp.nint(mp.re(v))) for v in row] for row in raw]
            drift = max(abs(raw[i][j] - K[i][j]) for i in range(4) for j in range(4))
            if drift > 1e-3:
                raise IllConditioned("Intersection numbers are not close to integers",
                                     {"drift": mp.nstr(drift, 5)})
            M = symplectic_reduction(K)
            P = mp.matrix(2, 4)
            Q = mp.matrix(2, 4)
            for k in range(4):
                for i in range(2):
                    P[i, k] = sum(M[k][j] * W[i, j] for j in range(4))
                    Q[i, k] = sum(M[k][j] * E[i, j] for j in range(4))
            pd = self._assemble(P, Q, {
                "branch_points": [complex_to_json(e) for e in br.roots],
                "cycles": "c_k encircles the segment [e_k, e_k+1] of the sorted branch points, k = 0..3",
                "intersection": K,
                "basis": M,
            })
        logger.info(f"Periods computed; Legendre residual {pd.legendre_residuals()['legendre']:.3e}")
        return pd

    def _assemble(self, P, Q, homology: Dict[str, Any]) -> PeriodData:
        A, B, etaA, etaB = (mp.matrix(2, 2) for _ in range(4))
        for i in range(2):
            for k in range(2):
                A[i, k], B[i, k] = P[i, k], P[i, k + 2]
                etaA[i, k], etaB[i, k] = Q[i, k], Q[i, k + 2]
        if abs(mp.det(A)) == 0:
            raise IllConditioned("a-period matrix is singular")
        Omega = mp.inverse(A) * B
        Y = mp.matrix(2, 2)
        for i in range(2):
            for k in range(2):
                Y[i, k] = mp.im((Omega[i, k] + Omega[k, i]) / 2)
        if not (Y[0, 0] > 0 and Y[0, 0] * Y[1, 1] - Y[0, 1] * Y[1, 0] > 0):
            raise NotRiemannMatrix("Im(Omega) is not positive definite",
                                   {"Y": [[mp.nstr(Y[i, k], 8) for k in range(2)] for i in range(2)]})
        return PeriodData(A, B, etaA, etaB, Omega, homology, self.precision, self.lattice_tol)

    def _pivots(self, br: Branching) -> List:
        center = sum(br.roots) / len(br.roots)
        radius = max(abs(e - center) for e in br.roots) + 1
        return [center + radius * mp.mpf("0.7") * mp.expj(mp.mpf(angle)) for angle in ("1.1", "2.3", "4.0", "5.3", "0.4")]

    def _abel_point(self, br: Branching, P: CurvePoint) -> List:
        """Integral of (omega1, omega2) from the first branch point to P."""
        if P.is_infinite:
            raise InfinitePoint("Abel map is evaluated on affine points only")
        x = mp.mpc(to_mp(P.x))
        y = mp.mpc(to_mp(P.y))
        base = 0
        W = br.roots[base]
        k = br.index_of(x)
        if k == base:
            return [mp.mpc(0), mp.mpc(0)]
        end = br.roots[k] if k is not None else x
        last_error = None
        for pivot in self._pivots(br):
            try:
                v1, phis1 = br.segment(W, pivot, base, None, count=2)
                v2, phis2 = br.segment(pivot, end, None, k, count=2)
            except PathDegeneracy as e:
                last_error = e
                continue
            ratio = br.y_at(pivot, phis1) / br.y_at(pivot, phis2)
            s = 1 if mp.re(ratio) > 0 else -1
            total = [v1[i] + s * v2[i] for i in range(2)]
            if k is None:
                y_end = s * br.y_at(x, phis2)
                if abs(y_end + y) < abs(y_end - y):
                    total = [-t for t in total]
                if min(abs(y_end + y), abs(y_end - y)) > mp.mpf(10) ** (-mp.dps // 3) * max(1, abs(y)):
                    raise PathDegeneracy("Point is not on the curve", {"x": x, "y": y})
            return total
        raise PathDegeneracy("No admissible integration path", {"x": x, "cause": str(last_error)})

    def abel_pair(self, f: Sextic, D: DivisorPair, pd: Optional[PeriodData] = None) -> List:
        """
        z with A_f(D) = z mod Per_f. The base divisor is twice the first
        branch point, which represents the canonical class.
        """
        br = self.branching(f)
        with mp.workprec(self.precision):
            z1 = self._abel_point(br, D.first)
            z2 = self._abel_point(br, D.second)
            z = [z1[0] + z2[0], z1[1] + z2[1]]
            if pd is not None:
                z = pd.lattice().reduce(z)
        return z

    def weierstrass_divisor(self, f: Sextic, i: int, j: int) -> DivisorPair:
        br = self.branching(f)
        return DivisorPair(CurvePoint(br.roots[i], mp.mpc(0)), CurvePoint(br.roots[j], mp.mpc(0)))

    def _factor_indices(self, br: Branching, quad) -> Tuple[int, int]:
        found = []
        for root in quad_roots(quad):
            value = root.to_complex()
            if value is None:
                raise IllConditioned("Kernel labels need finite Weierstrass points")
            found.append(min(range(len(br.roots)), key=lambda j: abs(br.roots[j] - value)))
        return found[0], found[1]

    def finite_model(self, fs: FactoredSextic) -> Tuple[FactoredSextic, Optional[Mobius]]:
        """
        fs itself when f and f^ both have six finite roots. Otherwise every
        factor is moved by S(x) = k - 1/x, which carries infinity to 0 and a
        finite root t to 1/(k - t); k is the first small integer that is a root
        of neither f nor f^. Delta and the pairing into p, q, r are unchanged.
        """
        f_hat = hat_f(fs)
        if fs.f.degree() == 6 and f_hat.degree() == 6:
            return fs, None
        for n in range(self.model_search + 1):
            for k in ((n, -n) if n else (0,)):
                k = Rational(k)
                if fs.f(k) != 0 and f_hat(k) != 0:
                    S = Mobius(k, -1, 1, 0)
                    model = FactoredSextic(*(mobius_act(S, quad) for quad in fs.factors))
                    logger.info(f"Root at infinity; periods use the model x -> {k} - 1/x")
                    return model, S
        raise IllConditioned("No small integer avoids the roots of f and f^",
                             {"search": self.model_search})

    def adapted_bases(self, fs: FactoredSextic) -> AdaptedBases:
        """Adapted bases for fs, computed on its finite model when f or f^ has a root at infinity."""
        fs, S = self.finite_model(fs)
        pd_f = self.compute_periods(fs.f)
        hf = hat_f(fs)
        pd_h = self.compute_periods(hf)
        with mp.workprec(self.precision):
            L_f = pd_f.lattice()
            L_h = pd_h.lattice()
            N = [L_f.integer_coordinates(L_h.column(k)) for k in range(4)]
            M = adapted_transform(N)
            G = L_f.generators
            E = pd_f.eta_generators()
            P = mp.matrix(2, 4)
            Q = mp.matrix(2, 4)
            for k in range(4):
                for i in range(2):
                    P[i, k] = sum(M[k][j] * G[i, j] for j in range(4))
                    Q[i, k] = sum(M[k][j] * E[i, j] for j in range(4))
            new_f = self._assemble(P, Q, dict(pd_f.homology, adapted_transform=M))
            vectors = [[P[0, 0], P[1, 0]], [P[0, 1], P[1, 1]],
                       [2 * P[0, 2], 2 * P[1, 2]], [2 * P[0, 3], 2 * P[1, 3]]]
            C = [L_h.integer_coordinates(v) for v in vectors]
            gram = [[intersection_form(C[i], C[j], J4) for j in range(4)] for i in range(4)]
            if gram != J4:
                raise BasisSearchFailed("Induced basis is not symplectic in the dual lattice", {"gram": gram})
            Ph = mp.matrix(2, 4)
            Qh = mp.matrix(2, 4)
            for k, v in enumerate(vectors):
                eta = pd_h.eta_of(v)
                for i in range(2):
                    Ph[i, k] = v[i]
                    Qh[i, k] = eta[i]
            new_h = self._assemble(Ph, Qh, dict(pd_h.homology, induced_from="a1, a2, 2 b1, 2 b2"))
            labels = self._kernel_labels(fs, new_f)
        logger.info(f"Adapted bases found; kernel labels {labels}")
        return AdaptedBases(new_f, new_h, M, C, labels, fs, S)

    def _kernel_labels(self, fs: FactoredSextic, pd: PeriodData) -> Dict[str, str]:
        br = self.branching(fs.f)
        L = pd.lattice()
        a1 = L.column(0)
        a2 = L.column(1)
        targets = {
            "a1/2": [a1[0] / 2, a1[1] / 2],
            "a2/2": [a2[0] / 2, a2[1] / 2],
            "(a1+a2)/2": [(a1[0] + a2[0]) / 2, (a1[1] + a2[1]) / 2],
        }
        labels = {}
        for name, quad in zip("pqr", fs.factors):
            i, j = self._factor_indices(br, quad)
            z1 = self._abel_point(br, CurvePoint(br.roots[i], mp.mpc(0)))
            z2 = self._abel_point(br, CurvePoint(br.roots[j], mp.mpc(0)))
            z = [z1[0] + z2[0], z1[1] + z2[1]]
            for label, t in targets.items():
                if L.contains([z[0] - t[0], z[1] - t[1]]):
                    labels[name] = label
                    break
            else:
                raise BasisSearchFailed(f"Kernel half-period of {name} is not a1/2, a2/2 or (a1+a2)/2")
        return labels

    def verify_eta_transform(self, fs: FactoredSextic, pd_f: PeriodData, pd_hat: PeriodData, H) -> Dict[str, Any]:
        """
        Residual of eta^f(w) = 2 eta^f^(w) + H w over the generators
        a1, a2, 2b1, 2b2 of Per_f^ (both PeriodData on the adapted bases).
        """
        with mp.workprec(self.precision):
            Hm = mp.matrix([[to_mp(H[i, j]) for j in range(2)] for i in range(2)])
            worst = mp.mpf(0)
            scale = mp.mpf(0)
            for k in range(4):
                if k < 2:
                    w = [pd_hat.A[0, k], pd_hat.A[1, k]]
                    eta_f = [pd_f.etaA[0, k], pd_f.etaA[1, k]]
                    eta_h = [pd_hat.etaA[0, k], pd_hat.etaA[1, k]]
                else:
                    w = [pd_hat.B[0, k - 2], pd_hat.B[1, k - 2]]
                    eta_f = [2 * pd_f.etaB[0, k - 2], 2 * pd_f.etaB[1, k - 2]]
                    eta_h = [pd_hat.etaB[0, k - 2], pd_hat.etaB[1, k - 2]]
                for i in range(2):
                    lhs = eta_f[i]
                    rhs = 2 * eta_h[i] + Hm[i, 0] * w[0] + Hm[i, 1] * w[1]
                    worst = max(worst, abs(lhs - rhs))
                    scale = max(scale, abs(lhs))
            H_numeric = (pd_f.etaA - 2 * pd_hat.etaA) * mp.inverse(pd_f.A)
        return {
            "residual": float(worst / max(scale, 1)),
            "H_numeric": matrix_to_json(H_numeric),
        }
