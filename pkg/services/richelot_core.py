"""
The Richelot construction and the explicit isogeny of Kummer surfaces.

Every matrix here is built from its closed form with exact rationals, so the
scale of the composed map a -> D T(Cinv a) is reproducible, not just its
projective class. Vectors are 4x1 sympy matrices in (S : S22 : S12 : S11)
order. Entry points that accept numeric vectors (mpmath) return mp.matrix.
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Optional, Sequence, Tuple

from mpmath import mp, mpc, mpf
from sympy import ImmutableMatrix, Matrix, Rational, diag, zeros

from services.curve_kummer import Hyperplane4, Sextic, is_admissible
from services.errors import (
    DegenerateDecomposition,
    IndexOutOfRange,
    InvalidSigns,
    NotAdmissible,
    RootsUnavailable,
    ZeroVector,
)
from services.quad_algebra import (
    LinFactor,
    Quad,
    bracket,
    delta,
    discr,
    is_exact,
    poly_mul,
    res,
    res1,
    scalar_to_json,
    to_mp,
    to_scalar,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FactoredSextic:
    """Admissible f = p*q*r with Delta(p, q, r) != 0."""

    p: Quad
    q: Quad
    r: Quad
    f: Sextic = field(init=False, compare=False)
    delta: Rational = field(init=False, compare=False)

    def __post_init__(self):
        d = delta(self.p, self.q, self.r)
        if d == 0:
            raise DegenerateDecomposition(
                "Delta(p, q, r) vanishes",
                {"p": self.p, "q": self.q, "r": self.r},
            )
        f = Sextic(poly_mul(poly_mul(self.p.coeffs, self.q.coeffs), self.r.coeffs))
        if not is_admissible(f):
            raise NotAdmissible("p*q*r is not admissible", {"f": f.to_json()})
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "delta", d)

    @property
    def factors(self) -> Tuple[Quad, Quad, Quad]:
        return (self.p, self.q, self.r)

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "FactoredSextic":
        return cls(Quad.from_json(data["p"]), Quad.from_json(data["q"]), Quad.from_json(data["r"]))

    def to_json(self) -> Dict[str, Any]:
        return {"p": self.p.to_json(), "q": self.q.to_json(), "r": self.r.to_json()}


@dataclass(frozen=True)
class SignChoice:
    """Square roots delta_p, delta_q, delta_r of Discr(p), Discr(q), Discr(r)."""

    delta_p: Rational
    delta_q: Rational
    delta_r: Rational

    def __post_init__(self):
        for name in ("delta_p", "delta_q", "delta_r"):
            object.__setattr__(self, name, to_scalar(getattr(self, name)))

    @property
    def product(self) -> Rational:
        return self.delta_p * self.delta_q * self.delta_r

    def validate(self, fs: FactoredSextic) -> "SignChoice":
        for value, quad, label in zip(
            (self.delta_p, self.delta_q, self.delta_r), fs.factors, "pqr"
        ):
            if value ** 2 != discr(quad):
                raise InvalidSigns(
                    f"delta_{label}^2 differs from Discr({label})",
                    {f"delta_{label}": value, "discr": discr(quad)},
                )
        return self

    def flipped(self, which: str) -> "SignChoice":
        signs = {"p": 1, "q": 1, "r": 1}
        signs[which] = -1
        return SignChoice(signs["p"] * self.delta_p, signs["q"] * self.delta_q, signs["r"] * self.delta_r)

    @classmethod
    def from_factors(cls, p1: LinFactor, p2: LinFactor, q1: LinFactor, q2: LinFactor,
                     r1: LinFactor, r2: LinFactor) -> "SignChoice":
        """Signs fixed by the ordering r(p1, p2) = delta_p and cyclic."""
        return cls(res1(p1, p2), res1(q1, q2), res1(r1, r2))


def _require(fs: FactoredSextic):
    if fs.delta == 0:
        raise DegenerateDecomposition("Delta(p, q, r) vanishes")


def hat_triple(fs: FactoredSextic) -> Tuple[Quad, Quad, Quad]:
    """(p^, q^, r^) = ([q, r], [r, p], [p, q])."""
    _require(fs)
    return bracket(fs.q, fs.r), bracket(fs.r, fs.p), bracket(fs.p, fs.q)


def hat_f(fs: FactoredSextic) -> Sextic:
    hp, hq, hr = hat_triple(fs)
    prod = poly_mul(poly_mul(hp.coeffs, hq.coeffs), hr.coeffs)
    scale = 1 / (4 * fs.delta)
    return Sextic(tuple(c * scale for c in prod))


def mu(j: int, k: int, l: int, m: int, fs: FactoredSextic) -> Rational:
    for index in (j, k, l, m):
        if index not in (0, 1, 2):
            raise IndexOutOfRange("mu indices range over 0..2", {"indices": (j, k, l, m)})
    p, q, r = fs.factors
    hp, hq, hr = hat_triple(fs)
    return (
        hp[j] * p[k] * p[l] * q[m] * r[m]
        + hq[j] * q[k] * q[l] * p[m] * r[m]
        + hr[j] * r[k] * r[l] * p[m] * q[m]
    )


def psi(fs: FactoredSextic) -> Tuple[Rational, Rational, Rational]:
    """Entries of the last row of the closed-form inverse of C."""
    p, q, r = fs.factors
    psi0 = 4 * mu(0, 0, 0, 2, fs) + mu(2, 1, 1, 0, fs) + mu(2, 0, 0, 1, fs)
    psi1 = -fs.delta / 2 * p[1] * q[1] * r[1] - mu(1, 0, 2, 1, fs)
    psi2 = -4 * mu(2, 2, 2, 0, fs) - mu(0, 1, 1, 2, fs) - mu(0, 2, 2, 1, fs)
    return psi0, psi1, psi2


def _phi_c(a: Quad, b: Quad, c: Quad, d: Rational) -> Rational:
    return -(
        a[2] ** 2 * b[0] * c[0]
        + a[2] * a[0] * (b[0] * c[2] + b[1] * c[1] + b[2] * c[0])
        + a[0] ** 2 * b[2] * c[2]
    ) / (16 * d)


def _hat_rows(fs: FactoredSextic) -> List[List[Rational]]:
    hats = hat_triple(fs)
    return [
        [h[2] for h in hats] + [Rational(0)],
        [-h[1] for h in hats] + [Rational(0)],
        [-h[0] for h in hats] + [Rational(0)],
    ]


@lru_cache(maxsize=256)
def matrix_C(fs: FactoredSextic) -> ImmutableMatrix:
    """Columns are the nodes N^_p, N^_q, N^_r, N^_0 of the Richelot-dual Kummer surface."""
    hp, hq, hr = hat_triple(fs)
    d = fs.delta
    phi_c = [_phi_c(hp, hq, hr, d), _phi_c(hq, hr, hp, d), _phi_c(hr, hp, hq, d)]
    return ImmutableMatrix(_hat_rows(fs) + [phi_c + [-1 / (16 * d)]])


@lru_cache(maxsize=256)
def matrix_C_inv(fs: FactoredSextic) -> ImmutableMatrix:
    d = fs.delta
    rows = [[-s[0] / d, -s[1] / (2 * d), s[2] / d, Rational(0)] for s in fs.factors]
    psi0, psi1, psi2 = psi(fs)
    rows.append([psi0, psi1, psi2, -16 * d])
    return ImmutableMatrix(rows)


@lru_cache(maxsize=256)
def matrix_D(fs: FactoredSextic) -> ImmutableMatrix:
    p, q, r = fs.factors
    hp, hq, hr = hat_triple(fs)
    d = fs.delta
    phi_d = [
        (d - p[1] * hp[1]) * q[1] * r[1],
        (d - q[1] * hq[1]) * r[1] * p[1],
        (d - r[1] * hr[1]) * p[1] * q[1],
    ]
    return ImmutableMatrix(_hat_rows(fs) + [[v / 8 for v in phi_d] + [-d / 8]])


def _is_numeric(values: Sequence) -> bool:
    return any(isinstance(v, (mpf, mpc)) for v in values)


def _T_components(d, dp, dq, dr, a: Sequence) -> List:
    a1, a2, a3, a4 = a
    d2 = d * d
    d4 = d2 * d2
    return [
        2 * d2 * a1 * a4 + 2 * d4 * dp * a2 * a3,
        2 * d2 * a2 * a4 + 2 * d4 * dq * a1 * a3,
        2 * d2 * a3 * a4 + 2 * d4 * dr * a1 * a2,
        d4 * (dq * dr * a1 * a1 + dp * dr * a2 * a2 + dp * dq * a3 * a3) + a4 * a4,
    ]


def _vector_values(a) -> List:
    if isinstance(a, mp.matrix):
        return [a[i] for i in range(a.rows)]
    return list(a)


def map_T(fs: FactoredSextic, a) -> Any:
    """The homogeneous quadratic map T_{p,q,r}; exact or symbolic in, sympy out."""
    values = _vector_values(a)
    consts = [fs.delta] + [discr(s) for s in fs.factors]
    if _is_numeric(values):
        consts = [to_mp(c) for c in consts]
        return mp.matrix(_T_components(*consts, values))
    return ImmutableMatrix(_T_components(*consts, values))


def to_mp_matrix(M) -> mp.matrix:
    """Exact sympy matrix lifted to the current mpmath precision."""
    out = mp.matrix(M.rows, M.cols)
    for i in range(M.rows):
        for j in range(M.cols):
            out[i, j] = to_mp(Rational(M[i, j]))
    return out


def _compose(fs: FactoredSextic, a) -> Any:
    values = _vector_values(a)
    if _is_numeric(values):
        b = to_mp_matrix(matrix_C_inv(fs)) * mp.matrix(values)
        return to_mp_matrix(matrix_D(fs)) * map_T(fs, b)
    b = matrix_C_inv(fs) * Matrix(values)
    return ImmutableMatrix(matrix_D(fs) * map_T(fs, b))


def richelot_map(fs: FactoredSextic, a) -> Any:
    """a -> D T(Cinv a): the Kummer-surface isogeny in homogeneous coordinates."""
    values = _vector_values(a)
    if all(is_exact(v) for v in values) and all(v == 0 for v in values):
        raise ZeroVector("richelot_map needs a nonzero vector")
    if _is_numeric(values) and all(v == 0 for v in values):
        raise ZeroVector("richelot_map needs a nonzero vector")
    return _compose(fs, values)


def richelot_map_numeric(fs: FactoredSextic, a: Sequence) -> mp.matrix:
    """Same map on an approximate complex vector."""
    values = [mp.mpc(to_mp(v)) for v in _vector_values(a)]
    return richelot_map(fs, values)


def _unit(k: int) -> List[Rational]:
    return [Rational(1) if i == k else Rational(0) for i in range(4)]


@lru_cache(maxsize=256)
def extract_A_matrices(fs: FactoredSextic) -> Tuple[ImmutableMatrix, ...]:
    """Symmetric A, A22, A12, A11 with a^T A_j a equal to component j of richelot_map."""
    _require(fs)
    diag_values = [_compose(fs, _unit(k)) for k in range(4)]
    mats = [zeros(4, 4) for _ in range(4)]
    for k in range(4):
        for j in range(4):
            mats[j][k, k] = diag_values[k][j]
    for k, l in itertools.combinations(range(4), 2):
        both = _compose(fs, [u + v for u, v in zip(_unit(k), _unit(l))])
        for j in range(4):
            value = (both[j] - diag_values[k][j] - diag_values[l][j]) / 2
            mats[j][k, l] = value
            mats[j][l, k] = value
    return tuple(ImmutableMatrix(m) for m in mats)


def last_row_constant(fs: FactoredSextic) -> Rational:
    """c = -16 Delta^3, the common constant in the last rows of the A-family."""
    return -16 * fs.delta ** 3


def matrix_H(fs: FactoredSextic) -> ImmutableMatrix:
    """Closed form of the symmetric matrix relating the eta-periods of f and f^."""
    p, q, r = fs.factors
    d = fs.delta
    psi0, _, psi2 = psi(fs)
    m = mu(1, 0, 2, 1, fs)
    h11 = p[0] * q[1] * r[1] + p[1] * q[0] * r[1] + p[1] * q[1] * r[0] + psi0 / d
    h12 = -m / d
    h22 = p[2] * q[1] * r[1] + p[1] * q[2] * r[1] + p[1] * q[1] * r[2] - psi2 / d
    return ImmutableMatrix([[h11 / 8, h12 / 8], [h12 / 8, h22 / 8]])


def H_from_A(fs: FactoredSextic, A11: Optional[ImmutableMatrix] = None) -> ImmutableMatrix:
    """Read H off the last row (-cH11, -cH12, cH22, 2c) of A11."""
    if A11 is None:
        A11 = extract_A_matrices(fs)[3]
    c = last_row_constant(fs)
    return ImmutableMatrix([
        [-A11[3, 0] / c, -A11[3, 1] / c],
        [-A11[3, 1] / c, A11[3, 2] / c],
    ])


def _anti_diagonal(fs: FactoredSextic, which: str) -> ImmutableMatrix:
    hp, hq, hr = hat_triple(fs)
    one = Rational(1)
    if which == "p":
        a, b = res(hp, hr), res(hp, hq)
        return ImmutableMatrix([[0, 0, 0, one], [0, 0, a, 0], [0, b, 0, 0], [a * b, 0, 0, 0]])
    if which == "q":
        a, b = res(hq, hr), res(hq, hp)
        return ImmutableMatrix([[0, 0, a, 0], [0, 0, 0, one], [b, 0, 0, 0], [0, b * a, 0, 0]])
    if which == "r":
        a, b = res(hr, hq), res(hr, hp)
        return ImmutableMatrix([[0, a, 0, 0], [b, 0, 0, 0], [0, 0, 0, one], [0, 0, b * a, 0]])
    raise IndexOutOfRange("Symmetry label must be one of p, q, r", {"which": which})


def symmetry_X(fs: FactoredSextic, which: str) -> ImmutableMatrix:
    """Translation by the kernel half-period of `which`, normalized with alpha = 1."""
    return ImmutableMatrix(matrix_C(fs) * _anti_diagonal(fs, which) * matrix_C_inv(fs))


def _u_row(fs: FactoredSextic, s: SignChoice) -> List[Rational]:
    d2 = fs.delta ** 2
    return [d2 * s.delta_q * s.delta_r, d2 * s.delta_r * s.delta_p, d2 * s.delta_p * s.delta_q, Rational(1)]


def hat_hyperplane_row(fs: FactoredSextic, s: SignChoice) -> Hyperplane4:
    """Row fixed by all three symmetries; eigenvalue Delta^2 dq dr under X_p."""
    s.validate(fs)
    row = ImmutableMatrix([_u_row(fs, s)]) * matrix_C_inv(fs)
    return Hyperplane4(tuple(row))


def trope_vector(fs: FactoredSextic, s: SignChoice) -> ImmutableMatrix:
    """D (dp, dq, dr, dp dq dr)^T, the common point of three tropes."""
    s.validate(fs)
    return ImmutableMatrix(matrix_D(fs) * Matrix([s.delta_p, s.delta_q, s.delta_r, s.product]))


def matrices_U_V(fs: FactoredSextic, s: SignChoice) -> Tuple[ImmutableMatrix, ImmutableMatrix]:
    s.validate(fs)
    d2 = fs.delta ** 2
    u1, u2, u3 = d2 * s.delta_q * s.delta_r, d2 * s.delta_p * s.delta_r, d2 * s.delta_p * s.delta_q
    one = Rational(1)
    U = ImmutableMatrix([
        [u1, u2, u3, one],
        [-u1, -u2, u3, one],
        [-u1, u2, -u3, one],
        [u1, -u2, -u3, one],
    ])
    dp, dq, dr = s.delta_p, s.delta_q, s.delta_r
    V = ImmutableMatrix([
        [dp, -dp, -dp, dp],
        [dq, -dq, dq, -dq],
        [dr, dr, -dr, -dr],
        [s.product] * 4,
    ])
    return U, V


def square_map(fs: FactoredSextic, s: SignChoice, a: Sequence) -> ImmutableMatrix:
    """V Sq(U a); equals 4 dp dq dr T(a)."""
    U, V = matrices_U_V(fs, s)
    ua = U * Matrix(list(a))
    return ImmutableMatrix(V * Matrix([v ** 2 for v in ua]))


def first_three_rows_scale(fs: FactoredSextic, s: SignChoice) -> Tuple[Rational, ImmutableMatrix]:
    """
    The scalar c with c*B^-1 - B^^-1 diag(b)^-1 vanishing outside the last row,
    where B^-1 = D V, B^ = U Cinv and b is the last column of B^.
    """
    U, V = matrices_U_V(fs, s)
    B_inv = matrix_D(fs) * V
    B_hat = U * matrix_C_inv(fs)
    b = [B_hat[i, 3] for i in range(4)]
    if any(v == 0 for v in b):
        raise InvalidSigns("Last column of B^ has a zero entry", {"column": b})
    target = B_hat.inv() * diag(*[1 / v for v in b])
    c = None
    for i in range(3):
        for j in range(4):
            if B_inv[i, j] != 0:
                c = target[i, j] / B_inv[i, j]
                break
        if c is not None:
            break
    if c is None:
        raise DegenerateDecomposition("First three rows of D V vanish")
    return c, ImmutableMatrix(c * B_inv - target)


@dataclass(frozen=True)
class RichelotData:
    """Everything derived from one factorization f = pqr."""

    fs: FactoredSextic
    hat_p: Quad
    hat_q: Quad
    hat_r: Quad
    hat_f: Sextic
    C: ImmutableMatrix
    Cinv: ImmutableMatrix
    D: ImmutableMatrix
    A: ImmutableMatrix
    A22: ImmutableMatrix
    A12: ImmutableMatrix
    A11: ImmutableMatrix
    H: ImmutableMatrix

    @property
    def A_family(self) -> Tuple[ImmutableMatrix, ...]:
        return (self.A, self.A22, self.A12, self.A11)

    def to_mp(self) -> Dict[str, mp.matrix]:
        """The matrices lifted to the current mpmath precision."""
        names = ("C", "Cinv", "D", "A", "A22", "A12", "A11", "H")
        return {name: to_mp_matrix(getattr(self, name)) for name in names}

    def to_json(self) -> Dict[str, Any]:
        return {
            "factors": self.fs.to_json(),
            "delta": scalar_to_json(self.fs.delta),
            "hat_p": self.hat_p.to_json(),
            "hat_q": self.hat_q.to_json(),
            "hat_r": self.hat_r.to_json(),
            "hat_f": self.hat_f.to_json(),
            "C": matrix_to_json(self.C),
            "Cinv": matrix_to_json(self.Cinv),
            "D": matrix_to_json(self.D),
            "A": matrix_to_json(self.A),
            "A22": matrix_to_json(self.A22),
            "A12": matrix_to_json(self.A12),
            "A11": matrix_to_json(self.A11),
            "H": matrix_to_json(self.H),
        }


def matrix_to_json(M) -> List[List[str]]:
    return [[scalar_to_json(Rational(M[i, j])) for j in range(M.cols)] for i in range(M.rows)]


def matrix_from_json(rows: Sequence[Sequence[str]]) -> ImmutableMatrix:
    return ImmutableMatrix([[to_scalar(v) for v in row] for row in rows])


def construct(fs: FactoredSextic) -> RichelotData:
    hp, hq, hr = hat_triple(fs)
    A, A22, A12, A11 = extract_A_matrices(fs)
    data = RichelotData(
        fs=fs, hat_p=hp, hat_q=hq, hat_r=hr, hat_f=hat_f(fs),
        C=matrix_C(fs), Cinv=matrix_C_inv(fs), D=matrix_D(fs),
        A=A, A22=A22, A12=A12, A11=A11, H=matrix_H(fs),
    )
    logger.info(f"Constructed Richelot data with Delta = {fs.delta}")
    return data


@dataclass(frozen=True)
class Decomposition:
    """One of the 15 pairings of the six roots into three quadratic factors."""

    pairs: Tuple[Tuple[int, int], ...]
    p: Quad
    q: Quad
    r: Quad
    delta: Rational

    @property
    def degenerate(self) -> bool:
        return self.delta == 0

    @property
    def factored(self) -> Optional[FactoredSextic]:
        if self.degenerate:
            return None
        return FactoredSextic(self.p, self.q, self.r)

    def to_json(self) -> Dict[str, Any]:
        out = {
            "pairs": [list(pair) for pair in self.pairs],
            "p": self.p.to_json(),
            "q": self.q.to_json(),
            "r": self.r.to_json(),
            "delta": scalar_to_json(self.delta),
            "degenerate": self.degenerate,
        }
        if not self.degenerate:
            out["hat_f"] = hat_f(self.factored).to_json()
        return out


def pairings(items: Sequence[int]) -> List[Tuple[Tuple[int, int], ...]]:
    """All partitions of an even-sized list into unordered pairs."""
    items = list(items)
    if not items:
        return [tuple()]
    first = items[0]
    out = []
    for k in range(1, len(items)):
        pair = (first, items[k])
        rest = items[1:k] + items[k + 1:]
        for tail in pairings(rest):
            out.append((pair,) + tail)
    return out


def enumerate_decompositions(f: Sextic, roots: Optional[Sequence] = None) -> List[Decomposition]:
    """The 15 factorizations f = pqr; the leading coefficient is carried by p."""
    if roots is None:
        roots = f.rational_roots()
    if roots is None:
        raise RootsUnavailable("Decompositions need the six roots of f", {"f": f.to_json()})
    roots = list(roots)
    if f.degree() == 5 and len(roots) == 5:
        roots.append(None)
    if len(roots) != 6 or not all(t is None or is_exact(t) for t in roots):
        raise RootsUnavailable("Six exact roots are required", {"roots": roots})
    lead = f[6] if f[6] != 0 else f[5]
    out = []
    for partition in pairings(range(6)):
        quads = [Quad.from_roots(roots[a], roots[b]) for a, b in partition]
        quads[0] = quads[0].scale(lead)
        out.append(Decomposition(partition, quads[0], quads[1], quads[2], delta(*quads)))
    return out
