"""
Genus-2 curve model y^2 = f(x), the xi-functions on pairs of points, and the
node/trope nomenclature of the Kummer surface.

Homogeneous coordinates on CP^3 are always ordered (S : S22 : S12 : S11).
Scalars may be exact (sympy Rationals) or mpmath complex numbers; exact inputs
give exact outputs and exact projective comparisons.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from mpmath import mp
from sympy import Poly, Rational, gcd, symbols

from services.errors import (
    CoincidentX,
    FactorMismatch,
    InfinitePoint,
    RootsUnavailable,
    ZeroVector,
)
from services.quad_algebra import (
    LinFactor,
    is_exact,
    lift_all,
    poly_divmod,
    poly_mul,
    poly_trim,
    scalar_to_json,
    to_mp,
    to_scalar,
)

logger = logging.getLogger(__name__)

X = symbols("x")

DEFAULT_PROJ_TOL = 1e-9


@dataclass(frozen=True)
class Sextic:
    """f = f0 + f1 x + ... + f6 x^6."""

    coeffs: Tuple[Rational, ...]

    def __post_init__(self):
        values = list(self.coeffs)
        if len(values) > 7:
            extra = values[7:]
            if any(to_scalar(c) != 0 for c in extra):
                raise ValueError("Sextic has degree above 6")
            values = values[:7]
        values += [0] * (7 - len(values))
        object.__setattr__(self, "coeffs", tuple(to_scalar(c) for c in values))

    def __getitem__(self, j: int) -> Rational:
        return self.coeffs[j]

    def degree(self) -> int:
        return len(poly_trim(self.coeffs)) - 1

    def __call__(self, x):
        acc = 0
        for c in reversed(lift_all(self.coeffs + (x,))[:7]):
            acc = acc * x + c
        return acc

    def derivative_at(self, x):
        coeffs = lift_all(self.coeffs + (x,))[:7]
        acc = 0
        for j in range(6, 0, -1):
            acc = acc * x + j * coeffs[j]
        return acc

    @classmethod
    def from_factors(cls, *factors: Sequence) -> "Sextic":
        prod: Tuple = (Rational(1),)
        for fac in factors:
            prod = poly_mul(prod, tuple(fac))
        return cls(prod)

    def as_poly(self) -> Poly:
        return Poly(list(reversed(self.coeffs)), X, domain="QQ")

    def rational_roots(self) -> Optional[List[Optional[Rational]]]:
        """
        All roots as exact rationals, with None standing for the root at
        infinity of a quintic; None if f does not split over Q.
        """
        poly = self.as_poly()
        found: List[Optional[Rational]] = []
        for root, mult in poly.ground_roots().items():
            if not root.is_Rational:
                continue
            found.extend([Rational(root)] * mult)
        if len(found) != poly.degree():
            return None
        found.sort()
        if self.degree() == 5:
            found.append(None)
        return found

    @classmethod
    def from_json(cls, data: Sequence) -> "Sextic":
        return cls(tuple(data))

    def to_json(self) -> List[str]:
        return [scalar_to_json(c) for c in self.coeffs]


def is_admissible(f: Sextic) -> bool:
    """Degree 5 or 6 and squarefree."""
    if f.degree() not in (5, 6):
        return False
    poly = f.as_poly()
    return gcd(poly, poly.diff(X)).degree() == 0


def F_pair(f: Sextic, a, b):
    """The symmetric biform F_f(a, b), with F_f(a, a) = 2 f(a)."""
    f = lift_all(f.coeffs + (a, b))[:7]
    s = a + b
    ab = a * b
    return (
        2 * f[0]
        + f[1] * s
        + 2 * f[2] * ab
        + f[3] * ab * s
        + 2 * f[4] * ab * ab
        + f[5] * ab * ab * s
        + 2 * f[6] * ab * ab * ab
    )


@dataclass(frozen=True)
class CurvePoint:
    """
    Affine point (x, y) of y^2 = f(x), or a point at infinity tagged with its
    branch index (0 for a quintic, 0/1 for the two points of a sextic).
    """

    x: Any = None
    y: Any = None
    infinity_branch: Optional[int] = None

    @property
    def is_infinite(self) -> bool:
        return self.infinity_branch is not None

    @classmethod
    def at_infinity(cls, branch: int = 0) -> "CurvePoint":
        return cls(None, None, branch)

    def on_curve(self, f: Sextic, tol: float = 1e-12) -> bool:
        if self.is_infinite:
            return True
        x, y = lift_all([self.x, self.y])
        lhs = y * y
        rhs = f(x)
        if is_exact(x) and is_exact(y):
            return lhs == rhs
        return abs(lhs - rhs) <= tol * max(1, abs(rhs))

    def flipped(self) -> "CurvePoint":
        """Image under the hyperelliptic involution."""
        if self.is_infinite:
            return self
        return CurvePoint(self.x, -self.y)


@dataclass(frozen=True, eq=False)
class DivisorPair:
    """Unordered pair of curve points."""

    first: CurvePoint
    second: CurvePoint

    def __eq__(self, other) -> bool:
        if not isinstance(other, DivisorPair):
            return NotImplemented
        return (self.first, self.second) in (
            (other.first, other.second),
            (other.second, other.first),
        )

    def __hash__(self) -> int:
        return hash(frozenset((self.first, self.second)))

    def __iter__(self):
        return iter((self.first, self.second))


def _projective_equal(a: Sequence, b: Sequence, tol: Optional[float]) -> bool:
    if all(is_exact(v) for v in list(a) + list(b)):
        return all(a[i] * b[j] == a[j] * b[i] for i in range(4) for j in range(4))
    tol = DEFAULT_PROJ_TOL if tol is None else tol
    k = max(range(4), key=lambda i: abs(a[i]))
    if abs(b[k]) == 0:
        return False
    na = [v / a[k] for v in a]
    nb = [v / b[k] for v in b]
    return max(abs(x - y) for x, y in zip(na, nb)) <= tol


def projective_distance(a: Sequence, b: Sequence) -> float:
    """Distance after normalising both vectors by a's largest coordinate."""
    k = max(range(len(a)), key=lambda i: abs(a[i]))
    if abs(b[k]) == 0:
        return float("inf")
    return float(max(abs(x / a[k] - y / b[k]) for x, y in zip(a, b)))


@dataclass(frozen=True, eq=False)
class ProjPoint4:
    """Point of CP^3 in (S : S22 : S12 : S11) order; coordinates kept unscaled."""

    coords: Tuple

    def __post_init__(self):
        coords = tuple(self.coords)
        if len(coords) != 4:
            raise ValueError("ProjPoint4 needs four coordinates")
        if all(c == 0 for c in coords):
            raise ZeroVector("Projective point with all coordinates zero")
        object.__setattr__(self, "coords", coords)

    def __getitem__(self, j):
        return self.coords[j]

    def __iter__(self):
        return iter(self.coords)

    def equals(self, other, tol: Optional[float] = None) -> bool:
        return _projective_equal(self.coords, tuple(other), tol)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProjPoint4):
            return NotImplemented
        return self.equals(other)

    def __hash__(self) -> int:
        return 0

    def normalized(self) -> Tuple:
        """Coordinates divided by the last nonzero one (exact) or the largest one."""
        if all(is_exact(c) for c in self.coords):
            k = max(j for j in range(4) if self.coords[j] != 0)
        else:
            k = max(range(4), key=lambda j: abs(self.coords[j]))
        return tuple(c / self.coords[k] for c in self.coords)

    def to_json(self) -> List[Any]:
        return [_scalar_json(c) for c in self.coords]


@dataclass(frozen=True, eq=False)
class Hyperplane4(ProjPoint4):
    """Row vector of CP^3*; incidence is a vanishing dot product."""

    def dot(self, point: Sequence):
        return sum(h * a for h, a in zip(self.coords, point))

    def contains(self, point: Sequence, tol: Optional[float] = None) -> bool:
        value = self.dot(point)
        if all(is_exact(c) for c in list(self.coords) + list(point)):
            return value == 0
        tol = DEFAULT_PROJ_TOL if tol is None else tol
        scale = max(abs(h) for h in self.coords) * max(abs(a) for a in point)
        return abs(value) <= tol * scale


def _scalar_json(c) -> Any:
    if is_exact(c):
        return scalar_to_json(to_scalar(c))
    c = mp.mpc(c)
    return [mp.nstr(c.real, mp.dps), mp.nstr(c.imag, mp.dps)]


def xi_coords(f: Sextic, D: DivisorPair) -> ProjPoint4:
    """(1 : xi22 : xi12 : xi11) at a generic divisor (x1, y1) + (x2, y2)."""
    p1, p2 = D.first, D.second
    if p1.is_infinite or p2.is_infinite:
        raise InfinitePoint("xi coordinates need affine points", {"divisor": D})
    x1, y1, x2, y2 = lift_all([p1.x, p1.y, p2.x, p2.y])
    if x1 == x2:
        raise CoincidentX("Divisor points share their x-coordinate", {"x": x1})
    xi11 = (F_pair(f, x1, x2) - 2 * y1 * y2) / (4 * (x1 - x2) ** 2)
    return ProjPoint4((1, x1 + x2, -x1 * x2, xi11))


def _check_factorization(target: Sequence, product: Sequence, what: str):
    target = poly_trim(target)
    product = poly_trim(product)
    if not all(is_exact(v) for v in product):
        target = tuple(to_mp(v) for v in target)
    if all(is_exact(v) for v in list(target) + list(product)):
        ok = target == product
    else:
        n = max(len(target), len(product))
        t = list(target) + [0] * (n - len(target))
        q = list(product) + [0] * (n - len(product))
        scale = max([abs(v) for v in t] + [1])
        ok = max(abs(a - b) for a, b in zip(t, q)) <= 1e-12 * scale
    if not ok:
        raise FactorMismatch(f"{what} does not multiply back to f",
                             {"target": target, "product": product})


def node(f: Sextic, p: Sequence, g: Sequence) -> ProjPoint4:
    """
    Node attached to f = p*g, where the roots of p (infinity included when
    deg p = 1) are the x-coordinates of the Weierstrass pair.
    """
    p = list(p) + [0] * (3 - len(p))
    g = list(g) + [0] * (5 - len(g))
    lifted = lift_all(p + g)
    p, g = lifted[:3], lifted[3:]
    _check_factorization(f.coeffs, poly_mul(p, g), "node factor pair")
    p0, p1, p2 = p[0], p[1], p[2]
    fourth = -(p2 * p2 * g[0] + p0 * p2 * g[2] + p0 * p0 * g[4]) / 4
    return ProjPoint4((p2, -p1, -p0, fourth))


def node_zero() -> ProjPoint4:
    return ProjPoint4((Rational(0), Rational(0), Rational(0), Rational(1)))


def trope_single(P: LinFactor) -> Hyperplane4:
    """Trope of the Weierstrass point with x-coordinate the root of alpha x + beta."""
    alpha, beta = P.g1, P.g0
    return Hyperplane4((beta * beta, alpha * beta, -alpha * alpha, Rational(0)))


def trope_triple(g: Sequence, h: Sequence, f: Optional[Sextic] = None) -> Hyperplane4:
    """Trope through the three Weierstrass points whose x-coordinates are the roots of g."""
    g = list(g) + [0] * (4 - len(g))
    h = list(h) + [0] * (4 - len(h))
    lifted = lift_all(g + h)
    g, h = lifted[:4], lifted[4:]
    if f is not None:
        _check_factorization(f.coeffs, poly_mul(g, h), "trope cubic pair")
    return Hyperplane4((
        g[2] * h[0] + g[0] * h[2],
        g[3] * h[0] + g[0] * h[3],
        -(g[3] * h[1] + g[1] * h[3]),
        4,
    ))


def _linear(root) -> Tuple:
    """Ascending coefficients of x - root, or of 1 for the root at infinity."""
    if root is None:
        return (Rational(1), Rational(0))
    return (-root, Rational(1))


def _leading(f: Sextic):
    return f[6] if f[6] != 0 else f[5]


def _product(roots_: Sequence, lead=Rational(1)) -> Tuple:
    acc: Tuple = (lead,) if all(is_exact(t) for t in roots_) else (to_mp(lead),)
    for t in roots_:
        acc = poly_mul(acc, _linear(t))
    return acc


def _resolve_roots(f: Sextic, roots_: Optional[Sequence]) -> List:
    if roots_ is None:
        found = f.rational_roots()
        if found is None:
            raise RootsUnavailable("f does not split over the rationals; supply its roots",
                                   {"f": f.to_json()})
        return found
    roots_ = list(roots_)
    if f.degree() == 5 and len(roots_) == 5:
        roots_.append(None)
    if len(roots_) != 6:
        raise RootsUnavailable("Six roots (infinity as None) are required", {"count": len(roots_)})
    return roots_


@dataclass
class NodeTable:
    """N0 plus the 15 pair nodes, keyed by labels such as "N0" and "N03"."""

    roots: List[Any]
    points: Dict[str, ProjPoint4] = field(default_factory=dict)

    @property
    def labels(self) -> List[str]:
        return list(self.points.keys())

    def __len__(self) -> int:
        return len(self.points)

    def find(self, vector: Sequence, tol: Optional[float] = None) -> Optional[str]:
        for label, point in self.points.items():
            if point.equals(tuple(vector), tol):
                return label
        return None

    def to_json(self) -> Dict[str, Any]:
        return {label: point.to_json() for label, point in self.points.items()}


def node_table(f: Sextic, roots: Optional[Sequence] = None) -> NodeTable:
    """
    All 16 nodes. Roots are exact rationals, mpmath complex numbers, or None
    for the Weierstrass point at infinity of a quintic.
    """
    roots_ = _resolve_roots(f, roots)
    lead = _leading(f)
    table = NodeTable(roots=roots_)
    table.points["N0"] = node_zero()
    for i, j in itertools.combinations(range(6), 2):
        pair = [roots_[i], roots_[j]]
        rest = [roots_[k] for k in range(6) if k not in (i, j)]
        p = _product([t for t in pair if t is not None])
        g = _product([t for t in rest if t is not None], lead)
        table.points[f"N{i}{j}"] = node(f, p, g)
    return table


def trope_table(f: Sextic, roots: Optional[Sequence] = None) -> Dict[str, Hyperplane4]:
    """The 6 single-point tropes T{i} and the 10 triple tropes T{0jk}."""
    roots_ = _resolve_roots(f, roots)
    lead = _leading(f)
    tropes: Dict[str, Hyperplane4] = {}
    for i, t in enumerate(roots_):
        lin = LinFactor(1, 0) if t is None else None
        if lin is None and is_exact(t):
            lin = LinFactor.from_root(t)
        tropes[f"T{i}"] = trope_single(lin) if lin is not None else Hyperplane4((t * t, -t, -1, 0))
    for j, k in itertools.combinations(range(1, 6), 2):
        triple = [0, j, k]
        rest = [m for m in range(6) if m not in triple]
        g = _product([roots_[m] for m in triple if roots_[m] is not None])
        h = _product([roots_[m] for m in rest if roots_[m] is not None], lead)
        tropes[f"T0{j}{k}"] = trope_triple(g, h, f)
    return tropes


def incidence_matrix(nodes: NodeTable, tropes: Dict[str, Hyperplane4],
                     tol: Optional[float] = None) -> List[List[int]]:
    """Rows are tropes, columns are nodes; 1 where the node lies on the trope."""
    return [
        [1 if trope.contains(point.coords, tol) else 0 for point in nodes.points.values()]
        for trope in tropes.values()
    ]


def divisor_from_json(data: Sequence) -> DivisorPair:
    points = []
    for item in data:
        if item in ("inf", None):
            points.append(CurvePoint.at_infinity())
            continue
        points.append(CurvePoint(_parse_value(item[0]), _parse_value(item[1])))
    return DivisorPair(points[0], points[1])


def _parse_value(value):
    if isinstance(value, (list, tuple)):
        return mp.mpc(mp.mpf(str(value[0])), mp.mpf(str(value[1])))
    return to_scalar(value)


def cofactor(f: Sextic, p: Sequence) -> Tuple:
    """The exact quotient f / p; raises FactorMismatch when p does not divide f."""
    quotient, remainder = poly_divmod(f.coeffs, tuple(to_scalar(c) for c in p))
    if any(c != 0 for c in remainder):
        raise FactorMismatch("Polynomial does not divide f", {"p": list(p), "remainder": remainder})
    return quotient
