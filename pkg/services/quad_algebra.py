"""
Exact arithmetic on polynomials of degree at most two.

Coefficients are stored in ascending order (constant term first) as sympy
Rationals. A polynomial of degree below two is still treated as an element
of the space of quadratics: its missing roots are the point at infinity.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, List, Optional, Sequence, Tuple

from mpmath import mp
from sympy import QQ, Poly, Rational, Symbol, integer_nthroot

from services.errors import InvalidMobius, ZeroPolynomial

Scalar = Rational
_X = Symbol("x")


def to_scalar(value: Any) -> Rational:
    """
    Convert an exact value into a canonical Rational.

    Accepts ints, Fractions, sympy Rationals and "num/den" strings. Floats are
    refused so that nothing inexact leaks into the algebraic layer.
    """
    if isinstance(value, Rational):
        return value
    if isinstance(value, bool):
        raise TypeError("Booleans are not scalars")
    if isinstance(value, int):
        return Rational(value)
    if isinstance(value, Fraction):
        return Rational(value.numerator, value.denominator)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, den = text.split("/", 1)
            return Rational(int(num), int(den))
        return Rational(int(text))
    if hasattr(value, "is_Rational") and value.is_Rational:
        return Rational(value)
    raise TypeError(f"Cannot convert {value!r} to an exact scalar")


def scalar_to_json(value: Rational) -> str:
    value = Rational(value)
    return f"{value.p}/{value.q}"


def is_exact(value: Any) -> bool:
    return isinstance(value, (int, Rational, Fraction))


def rational_sqrt(value: Rational) -> Optional[Rational]:
    """Square root of a non-negative rational if it is rational, else None."""
    value = Rational(value)
    if value < 0:
        return None
    num, num_exact = integer_nthroot(int(value.p), 2)
    den, den_exact = integer_nthroot(int(value.q), 2)
    if num_exact and den_exact:
        return Rational(num, den)
    return None


def poly_mul(a: Sequence, b: Sequence) -> Tuple:
    """Product of two ascending coefficient sequences (any ring)."""
    if not a or not b:
        return tuple()
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0:
            continue
        for j, bj in enumerate(b):
            out[i + j] = out[i + j] + ai * bj
    return tuple(out)


def poly_trim(a: Sequence) -> Tuple:
    coeffs = list(a)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    return tuple(coeffs)


def poly_divmod(num: Sequence, den: Sequence) -> Tuple[Tuple, Tuple]:
    """Exact division over QQ of ascending coefficient sequences; den must be nonzero."""
    den = poly_trim(den)
    if not den:
        raise ZeroPolynomial("Division by the zero polynomial")
    n = Poly(list(reversed(poly_trim(num))) or [0], _X, domain=QQ)
    quotient, remainder = n.div(Poly(list(reversed(den)), _X, domain=QQ))
    return tuple(reversed(quotient.all_coeffs())), tuple(reversed(remainder.all_coeffs()))


@dataclass(frozen=True)
class Quad:
    """Element p0 + p1 x + p2 x^2 of the space of quadratics."""

    p0: Rational = Rational(0)
    p1: Rational = Rational(0)
    p2: Rational = Rational(0)

    def __post_init__(self):
        for name in ("p0", "p1", "p2"):
            object.__setattr__(self, name, to_scalar(getattr(self, name)))

    def __getitem__(self, j: int) -> Rational:
        return self.coeffs[j]

    def __iter__(self):
        return iter(self.coeffs)

    def __len__(self) -> int:
        return 3

    @property
    def coeffs(self) -> Tuple[Rational, Rational, Rational]:
        return (self.p0, self.p1, self.p2)

    def is_zero(self) -> bool:
        return self.p0 == 0 and self.p1 == 0 and self.p2 == 0

    def degree(self) -> int:
        if self.p2 != 0:
            return 2
        if self.p1 != 0:
            return 1
        return 0 if self.p0 != 0 else -1

    def __call__(self, x):
        return self.p0 + self.p1 * x + self.p2 * x * x

    def __add__(self, other: "Quad") -> "Quad":
        return Quad(self.p0 + other.p0, self.p1 + other.p1, self.p2 + other.p2)

    def __sub__(self, other: "Quad") -> "Quad":
        return Quad(self.p0 - other.p0, self.p1 - other.p1, self.p2 - other.p2)

    def __neg__(self) -> "Quad":
        return Quad(-self.p0, -self.p1, -self.p2)

    def scale(self, k) -> "Quad":
        k = to_scalar(k)
        return Quad(k * self.p0, k * self.p1, k * self.p2)

    def __mul__(self, other) -> Tuple:
        if isinstance(other, (Quad, LinFactor)):
            return poly_mul(self.coeffs, other.coeffs)
        return self.scale(other)

    @classmethod
    def from_roots(cls, a, b, lead=1) -> "Quad":
        """lead*(x-a)(x-b); a root given as None stands for infinity."""
        lead = to_scalar(lead)
        factors = [LinFactor(1, 0) if t is None else LinFactor(-to_scalar(t), 1) for t in (a, b)]
        c = poly_mul(factors[0].coeffs, factors[1].coeffs)
        return cls(lead * c[0], lead * c[1], lead * c[2])

    @classmethod
    def from_json(cls, data: Sequence) -> "Quad":
        if len(data) > 3:
            raise ValueError(f"Quad takes at most 3 coefficients, got {len(data)}")
        padded = list(data) + [0] * (3 - len(data))
        return cls(*padded)

    def to_json(self) -> List[str]:
        return [scalar_to_json(c) for c in self.coeffs]

    def __repr__(self) -> str:
        return f"Quad({self.p0}, {self.p1}, {self.p2})"


@dataclass(frozen=True)
class LinFactor:
    """Element g0 + g1 x of the space of linear polynomials."""

    g0: Rational
    g1: Rational

    def __post_init__(self):
        object.__setattr__(self, "g0", to_scalar(self.g0))
        object.__setattr__(self, "g1", to_scalar(self.g1))
        if self.g0 == 0 and self.g1 == 0:
            raise ZeroPolynomial("Linear factor must not be zero")

    @property
    def coeffs(self) -> Tuple[Rational, Rational]:
        return (self.g0, self.g1)

    def __getitem__(self, j: int) -> Rational:
        return self.coeffs[j]

    def __mul__(self, other: "LinFactor") -> Quad:
        return Quad(*poly_mul(self.coeffs, other.coeffs))

    def root(self) -> "ProjRoot":
        if self.g1 == 0:
            return ProjRoot.infinity()
        return ProjRoot.finite(-self.g0 / self.g1)

    @classmethod
    def from_root(cls, t) -> "LinFactor":
        if t is None:
            return cls(1, 0)
        return cls(-to_scalar(t), 1)


@dataclass(frozen=True)
class Mobius:
    """x -> (a x + b)/(c x + d) with ad - bc = 1."""

    a: Rational
    b: Rational
    c: Rational
    d: Rational

    def __post_init__(self):
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, to_scalar(getattr(self, name)))
        if self.a * self.d - self.b * self.c != 1:
            raise InvalidMobius(
                "Mobius map must have ad - bc = 1",
                {"a": self.a, "b": self.b, "c": self.c, "d": self.d},
            )

    @classmethod
    def identity(cls) -> "Mobius":
        return cls(1, 0, 0, 1)

    def compose(self, other: "Mobius") -> "Mobius":
        """self after other."""
        return Mobius(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "Mobius":
        return Mobius(self.d, -self.b, -self.c, self.a)


@dataclass(frozen=True)
class ProjRoot:
    """
    A root on the Riemann sphere.

    kind is "finite" (value holds the root), "infinity", or "quadratic" for one
    member of a conjugate pair value +- sqrt(radicand) with sign in {+1, -1}.
    """

    kind: str
    value: Optional[Rational] = None
    radicand: Optional[Rational] = None
    sign: int = 0

    @classmethod
    def finite(cls, value) -> "ProjRoot":
        return cls("finite", to_scalar(value))

    @classmethod
    def infinity(cls) -> "ProjRoot":
        return cls("infinity")

    @property
    def is_infinite(self) -> bool:
        return self.kind == "infinity"

    def to_complex(self):
        """Approximate value at the current mpmath precision, None for infinity."""
        if self.kind == "infinity":
            return None
        center = mp.mpf(int(self.value.p)) / int(self.value.q)
        if self.kind == "finite":
            return mp.mpc(center)
        rad = mp.mpf(int(self.radicand.p)) / int(self.radicand.q)
        return center + self.sign * mp.sqrt(mp.mpc(rad))

    def to_json(self) -> Any:
        if self.kind == "infinity":
            return "inf"
        if self.kind == "finite":
            return scalar_to_json(self.value)
        return {"center": scalar_to_json(self.value),
                "radicand": scalar_to_json(self.radicand),
                "sign": self.sign}


def bracket(p: Quad, q: Quad) -> Quad:
    """[p, q] = p'q - q'p."""
    return Quad(
        p.p1 * q.p0 - p.p0 * q.p1,
        2 * (p.p2 * q.p0 - p.p0 * q.p2),
        p.p2 * q.p1 - p.p1 * q.p2,
    )


def discr(p: Quad) -> Rational:
    return p.p1 ** 2 - 4 * p.p0 * p.p2


def res(p: Quad, q: Quad) -> Rational:
    return (p.p2 * q.p0 - p.p0 * q.p2) ** 2 + (p.p2 * q.p1 - p.p1 * q.p2) * (p.p0 * q.p1 - p.p1 * q.p0)


def res1(g: LinFactor, h: LinFactor) -> Rational:
    """det [[g0, h0], [g1, h1]]."""
    return g.g0 * h.g1 - h.g0 * g.g1


def delta(p: Quad, q: Quad, r: Quad) -> Rational:
    """Determinant of the matrix with columns p, q, r."""
    return (
        p.p0 * (q.p1 * r.p2 - q.p2 * r.p1)
        - q.p0 * (p.p1 * r.p2 - p.p2 * r.p1)
        + r.p0 * (p.p1 * q.p2 - p.p2 * q.p1)
    )


def mobius_act(S: Mobius, p: Quad) -> Quad:
    """Coefficients of (cx + d)^2 p((ax + b)/(cx + d))."""
    a, b, c, d = S.a, S.b, S.c, S.d
    return Quad(
        p.p0 * d * d + p.p1 * b * d + p.p2 * b * b,
        2 * p.p0 * c * d + p.p1 * (a * d + b * c) + 2 * p.p2 * a * b,
        p.p0 * c * c + p.p1 * a * c + p.p2 * a * a,
    )


def roots(p: Quad) -> Tuple[ProjRoot, ProjRoot]:
    """Both roots on the Riemann sphere, with multiplicity."""
    if p.is_zero():
        raise ZeroPolynomial("The zero polynomial has no root pair", {"p": p})
    deg = p.degree()
    if deg == 0:
        return ProjRoot.infinity(), ProjRoot.infinity()
    if deg == 1:
        return ProjRoot.finite(-p.p0 / p.p1), ProjRoot.infinity()
    d = discr(p)
    center = -p.p1 / (2 * p.p2)
    if d == 0:
        return ProjRoot.finite(center), ProjRoot.finite(center)
    s = rational_sqrt(d)
    if s is not None:
        half = s / (2 * p.p2)
        return ProjRoot.finite(center + half), ProjRoot.finite(center - half)
    radicand = d / (4 * p.p2 ** 2)
    return ProjRoot("quadratic", center, radicand, 1), ProjRoot("quadratic", center, radicand, -1)


def are_proportional(p: Quad, q: Quad) -> bool:
    """True iff p and q are linearly dependent (their bracket vanishes)."""
    return bracket(p, q).is_zero()


def share_root(p: Quad, q: Quad) -> bool:
    """Common root test computed from the root lists alone."""
    rp = roots(p)
    rq = roots(q)
    return any(a == b for a in rp for b in rq)


def quads_from_json(items: Iterable[Sequence]) -> List[Quad]:
    return [Quad.from_json(item) for item in items]


def to_mp(value):
    """Lift an exact scalar into the current mpmath context; inexact values pass through."""
    if isinstance(value, bool):
        raise TypeError("Booleans are not scalars")
    if isinstance(value, int):
        return mp.mpf(value)
    if isinstance(value, Fraction):
        return mp.mpf(value.numerator) / value.denominator
    if isinstance(value, Rational):
        return mp.mpf(int(value.p)) / int(value.q)
    return value


def lift_all(values: Sequence) -> List:
    """Exact sequences stay exact; a sequence with any inexact entry is lifted entirely."""
    values = list(values)
    if all(is_exact(v) for v in values):
        return values
    return [to_mp(v) for v in values]
