from typing import Any, Dict, Optional


class RichelotError(Exception):
    """
    Base class for every typed failure raised by the services.

    Args:
        message (str): Human readable description
        details (dict, optional): Offending inputs, echoed into reports
    """

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "success": False,
            "error": str(self),
            "error_type": type(self).__name__,
            "details": {k: str(v) for k, v in self.details.items()},
        }


# Exact layer
class ZeroPolynomial(RichelotError):
    pass


class InvalidMobius(RichelotError):
    pass


class CoincidentX(RichelotError):
    pass


class InfinitePoint(RichelotError):
    pass


class FactorMismatch(RichelotError):
    pass


class NotAdmissible(RichelotError):
    pass


class DegenerateDecomposition(RichelotError):
    pass


class IndexOutOfRange(RichelotError):
    pass


class ZeroVector(RichelotError):
    pass


class InvalidSigns(RichelotError):
    pass


class RootsUnavailable(RichelotError):
    pass


# Numeric layer
class IllConditioned(RichelotError):
    pass


class PathDegeneracy(RichelotError):
    pass


class BasisSearchFailed(RichelotError):
    pass


class NotRiemannMatrix(RichelotError):
    pass


class NormalizationSingular(RichelotError):
    pass


class PrecisionLoss(RichelotError):
    pass
