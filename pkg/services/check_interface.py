import logging
import os
import random
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from services.errors import RichelotError
from services.kleinian_numeric import KleinianService
from services.periods_numeric import PeriodService, mobius_to_json
from services.richelot_core import FactoredSextic, hat_f

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    """Outcome of one verification check; failures carry what is needed to reproduce them."""

    name: str
    category: str
    passed: bool
    residual: Optional[float] = None
    tolerance: Optional[float] = None
    details: Dict[str, Any] = field(default_factory=dict)
    reproduce: Dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0

    def to_json(self, include_timings: bool = True) -> Dict[str, Any]:
        out = {
            "name": self.name,
            "category": self.category,
            "passed": self.passed,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "details": self.details,
            "reproduce": self.reproduce,
        }
        if include_timings:
            out["seconds"] = round(self.seconds, 3)
        return out


class CheckContext:
    """
    Shared inputs of one verification run, with lazily built numeric objects
    so the numeric checks reuse periods and S-bases.

    Args:
        fs (FactoredSextic): The factorization under test
        config (dict, optional): seed, trials, height, tol and numeric settings
    """

    def __init__(self, fs: FactoredSextic, config: Optional[Dict[str, Any]] = None):
        self.fs = fs
        self.config = dict(config or {})
        self.seed = int(self.config.get("seed", os.getenv("RICHELOT_SEED", 20240517)))
        self.trials = int(self.config.get("trials", os.getenv("RICHELOT_TRIALS", 1000)))
        self.height = int(self.config.get("height", os.getenv("RICHELOT_HEIGHT", 100)))
        self.tol = float(self.config.get("tol", os.getenv("RICHELOT_TOL", 1e-6)))
        self.proj_tol = float(self.config.get("proj_tol", os.getenv("RICHELOT_PROJ_TOL", 1e-9)))
        self._cache: Dict[str, Any] = {}

    def rng(self, name: str) -> random.Random:
        """Independent deterministic stream per check."""
        return random.Random(f"{self.seed}:{name}")

    def cached(self, key: str, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def period_service(self):
        return self.cached("period_service", lambda: PeriodService(self.config))

    @property
    def kleinian_service(self):
        return self.cached("kleinian_service", lambda: KleinianService(self.config, self.period_service))

    @property
    def adapted(self):
        return self.cached("adapted", lambda: self.period_service.adapted_bases(self.fs))

    @property
    def model(self) -> FactoredSextic:
        """The factorization the numeric objects belong to (fs, or its finite Mobius model)."""
        return self.adapted.model

    def reproduce(self, **extra) -> Dict[str, Any]:
        out = {"factors": self.fs.to_json()}
        if self.adapted.mobius is not None:
            out["model"] = self.model.to_json()
            out["mobius"] = mobius_to_json(self.adapted.mobius)
        out.update(extra)
        return out

    @property
    def sb_f(self):
        return self.cached("sb_f", lambda: self.kleinian_service.build_S_basis(self.model.f, self.adapted.f_periods))

    @property
    def sb_hat(self):
        return self.cached(
            "sb_hat", lambda: self.kleinian_service.build_S_basis(hat_f(self.model), self.adapted.hat_periods))


class CheckInterface(ABC):
    """
    Abstract interface for verification checks.
    All checks must inherit from this class and set `name` and `category`.
    """

    name = "abstract"
    category = "exact"
    description = ""

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        self.config = config or {}

    @abstractmethod
    def evaluate(self, ctx: CheckContext) -> CheckResult:
        """
        Run the check

        Args:
            ctx (CheckContext): Shared inputs of the run

        Returns:
            CheckResult: Outcome with residuals and reproduction data
        """
        pass

    def result(self, passed: bool, **kwargs) -> CheckResult:
        return CheckResult(self.name, self.category, bool(passed), **kwargs)

    def run(self, ctx: CheckContext) -> CheckResult:
        """Evaluate, turning typed errors into failed results and timing the call."""
        start = time.perf_counter()
        try:
            outcome = self.evaluate(ctx)
        except RichelotError as e:
            logger.error(f"Check {self.name} raised {type(e).__name__}: {e}")
            outcome = self.result(False, details=e.to_dict(), reproduce={"factors": ctx.fs.to_json(), "seed": ctx.seed})
        outcome.seconds = time.perf_counter() - start
        if not outcome.passed:
            logger.error(f"Check {self.name} failed: residual={outcome.residual} reproduce={outcome.reproduce}")
        else:
            logger.info(f"Check {self.name} passed in {outcome.seconds:.2f}s")
        return outcome
