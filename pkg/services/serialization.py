"""
JSON codecs shared by the CLI and the API.

Exact scalars travel as "num/den" strings, approximate ones as [re, im]
decimal strings; approximate payloads carry the working precision.
"""
import json
from fractions import Fraction
from typing import Any, Dict, Optional

from mpmath import mp, mpc, mpf
from sympy import MatrixBase, Rational

from services.curve_kummer import ProjPoint4, Sextic
from services.quad_algebra import Quad, scalar_to_json, to_scalar
from services.richelot_core import FactoredSextic

STANDARD_FIXTURE = {
    "p": ["0", "-1", "1"],
    "q": ["6", "-5", "1"],
    "r": ["20", "-9", "1"],
}


def to_jsonable(value: Any) -> Any:
    """Recursively convert exact, mpmath and sympy values into JSON-ready data."""
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, Rational, Fraction)):
        return scalar_to_json(to_scalar(value))
    if isinstance(value, float):
        return value
    if isinstance(value, (mpf, mpc, complex)):
        z = mp.mpc(value)
        return [mp.nstr(z.real, mp.dps), mp.nstr(z.imag, mp.dps)]
    if isinstance(value, mp.matrix):
        return [[to_jsonable(value[i, j]) for j in range(value.cols)] for i in range(value.rows)]
    if isinstance(value, MatrixBase):
        return [[to_jsonable(value[i, j]) for j in range(value.cols)] for i in range(value.rows)]
    if isinstance(value, (ProjPoint4, Quad)):
        return value.to_json()
    if hasattr(value, "to_json"):
        return value.to_json()
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return str(value)


def parse_scalar(value: Any):
    """"num/den" or int to an exact scalar, [re, im] to an mpmath complex."""
    if isinstance(value, (list, tuple)):
        return mp.mpc(mp.mpf(str(value[0])), mp.mpf(str(value[1])))
    return to_scalar(value)


def parse_vector(values) -> list:
    return [parse_scalar(v) for v in values]


def parse_roots(values) -> list:
    """Roots of f; "inf" (or null) is the Weierstrass point at infinity."""
    return [None if v in ("inf", None) else parse_scalar(v) for v in values]


def factored_from_json(data: Optional[Dict[str, Any]]) -> FactoredSextic:
    """A factorization {"p", "q", "r"}; the standard fixture when nothing is given."""
    data = data or {}
    if not all(k in data for k in ("p", "q", "r")):
        data = dict(STANDARD_FIXTURE, **data)
    return FactoredSextic.from_json(data)


def sextic_from_json(data: Optional[Dict[str, Any]]) -> Sextic:
    """A curve given as {"f": coefficients} or as a factorization."""
    data = data or {}
    if "f" in data:
        return Sextic.from_json(data["f"])
    return factored_from_json(data).f


def load_json(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    with open(path, "r") as handle:
        return json.load(handle)


def dump_json(payload: Any, path: Optional[str] = None) -> str:
    text = json.dumps(to_jsonable(payload), indent=2, sort_keys=True)
    if path:
        with open(path, "w") as handle:
            handle.write(text + "\n")
    return text
