import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import pandas as pd
from mpmath import mp

from services import exact_checks, numeric_checks  # noqa: F401  (registers the checks)
from services.check_factory import CheckFactory
from services.check_interface import CheckContext, CheckResult
from services.curve_kummer import incidence_matrix, node_table, trope_table
from services.errors import RichelotError
from services.periods_numeric import PeriodService
from services.quad_algebra import is_exact
from services.richelot_core import construct, enumerate_decompositions, hat_f, richelot_map
from services.serialization import factored_from_json, parse_roots, parse_vector, sextic_from_json, to_jsonable

logger = logging.getLogger(__name__)

SUITES = ("exact", "numeric", "all")


def failure(e: Exception) -> Dict[str, Any]:
    """Error payload shared by the CLI and the API."""
    if isinstance(e, RichelotError):
        return e.to_dict()
    return {"success": False, "error": str(e), "error_type": type(e).__name__}


@dataclass
class Report:
    """Results of one verification run."""

    results: List[CheckResult] = field(default_factory=list)
    seed: int = 0
    precision: int = 96
    suite: str = "exact"

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failed(self) -> List[str]:
        return [r.name for r in self.results if not r.passed]

    def summary(self) -> pd.DataFrame:
        rows = [{
            "check": r.name,
            "category": r.category,
            "passed": r.passed,
            "residual": r.residual,
            "tolerance": r.tolerance,
            "seconds": round(r.seconds, 2),
        } for r in self.results]
        return pd.DataFrame(rows, columns=["check", "category", "passed", "residual", "tolerance", "seconds"])

    def to_text(self) -> str:
        status = "PASSED" if self.passed else f"FAILED ({', '.join(self.failed)})"
        header = f"suite={self.suite} seed={self.seed} precision={self.precision} bits: {status}"
        if not self.results:
            return header
        return header + "\n" + self.summary().to_string(index=False)

    def to_json(self, include_timings: bool = False) -> Dict[str, Any]:
        """Deterministic payload; wall-clock timings only under a separate key."""
        out = {
            "suite": self.suite,
            "seed": self.seed,
            "precision": self.precision,
            "passed": self.passed,
            "results": [r.to_json(include_timings=False) for r in self.results],
        }
        if include_timings:
            out["timings"] = {r.name: round(r.seconds, 3) for r in self.results}
        return to_jsonable(out)


class VerificationService:
    """
    Unified entry point for the construction, the Kummer-surface tables and
    the verification suites. Every command returns {"success": bool, ...}.

    Args:
        config (dict, optional): precision, tol, seed, trials, height and the
            numeric settings understood by PeriodService and KleinianService.
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        self.config = dict(config or {})
        self.precision = int(self.config.get("precision", os.getenv("RICHELOT_PRECISION", 96)))
        self.config["precision"] = self.precision
        self.period_service = PeriodService(self.config)

    def get_supported_checks(self, category=None):
        return CheckFactory.get_supported_checks(category)

    def construct(self, data: Optional[Dict[str, Any]] = None, numeric: bool = False) -> Dict[str, Any]:
        """
        Richelot data of a factorization

        Args:
            data (dict): {"p", "q", "r"} coefficient lists; the standard fixture if empty
            numeric (bool): also compute the adapted period matrices of f and f^

        Returns:
            dict: Construction result
        """
        try:
            fs = factored_from_json(data)
            result = {"success": True, "richelot": construct(fs).to_json()}
            if numeric:
                result["periods"] = self.period_service.adapted_bases(fs).to_json()
                result["precision"] = self.precision
            return to_jsonable(result)
        except Exception as e:
            logger.error(f"construct failed: {e}")
            return failure(e)

    def map_point(self, data: Dict[str, Any]) -> Dict[str, Any]:
        """
        Apply the Kummer-surface isogeny to a point of K_f^

        Args:
            data (dict): factorization plus "point", four exact or [re, im] coordinates

        Returns:
            dict: The image and the label of the node of K_f it equals, if any
        """
        try:
            fs = factored_from_json(data)
            point = parse_vector(data["point"])
            exact = all(is_exact(v) for v in point)
            with mp.workprec(self.precision):
                image = richelot_map(fs, point)
                values = [image[i] for i in range(4)]
                roots = fs.f.rational_roots()
                label = node_table(fs.f, roots).find(values) if roots is not None else None
                result = {"success": True, "image": values, "exact": exact, "node": label}
                if not exact:
                    result["precision"] = self.precision
                return to_jsonable(result)
        except KeyError as e:
            return {"success": False, "error": f"Missing field {e}", "error_type": "KeyError"}
        except Exception as e:
            logger.error(f"map_point failed: {e}")
            return failure(e)

    def _roots(self, f, data: Dict[str, Any], numeric: bool):
        if "roots" in data:
            return parse_roots(data["roots"])
        roots = f.rational_roots()
        if roots is None and numeric:
            return self.period_service.branch_points(f)
        return roots

    def _curve(self, data: Dict[str, Any]):
        data = data or {}
        if data.get("dual"):
            return hat_f(factored_from_json(data))
        return sextic_from_json(data)

    def nodes(self, data: Optional[Dict[str, Any]] = None, numeric: bool = False) -> Dict[str, Any]:
        """The 16 labelled nodes of K_f (of K_f^ when data["dual"] is set)."""
        try:
            data = data or {}
            f = self._curve(data)
            with mp.workprec(self.precision):
                table = node_table(f, self._roots(f, data, numeric))
                return to_jsonable({"success": True, "f": f.to_json(), "roots": table.roots, "nodes": table.to_json()})
        except Exception as e:
            logger.error(f"nodes failed: {e}")
            return failure(e)

    def tropes(self, data: Optional[Dict[str, Any]] = None, numeric: bool = False) -> Dict[str, Any]:
        """The 16 labelled tropes and the trope-by-node incidence matrix."""
        try:
            data = data or {}
            f = self._curve(data)
            with mp.workprec(self.precision):
                roots = self._roots(f, data, numeric)
                nodes = node_table(f, roots)
                tropes = trope_table(f, roots)
                incidence = pd.DataFrame(incidence_matrix(nodes, tropes), index=list(tropes), columns=nodes.labels)
                return to_jsonable({
                    "success": True,
                    "f": f.to_json(),
                    "tropes": {label: t.to_json() for label, t in tropes.items()},
                    "incidence": incidence.values.tolist(),
                    "trope_labels": list(incidence.index),
                    "node_labels": list(incidence.columns),
                    "nodes_per_trope": incidence.sum(axis=1).tolist(),
                    "tropes_per_node": incidence.sum(axis=0).tolist(),
                })
        except Exception as e:
            logger.error(f"tropes failed: {e}")
            return failure(e)

    def decompose(self, data: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """All 15 factorizations f = pqr with their Delta and, when nondegenerate, f^."""
        try:
            data = data or {}
            f = sextic_from_json(data)
            roots = None
            if "roots" in data:
                roots = parse_roots(data["roots"])
            rows = enumerate_decompositions(f, roots)
            return to_jsonable({"success": True, "f": f.to_json(), "decompositions": [d.to_json() for d in rows]})
        except Exception as e:
            logger.error(f"decompose failed: {e}")
            return failure(e)

    def run_checks(self, data: Optional[Dict[str, Any]] = None, suite: str = "exact",
                   checks: Optional[List[str]] = None) -> Report:
        """Run registered checks sequentially on one factorization and collect a Report."""
        if suite not in SUITES:
            raise ValueError(f"Unknown suite: {suite}. Supported suites: {', '.join(SUITES)}")
        fs = factored_from_json(data)
        ctx = CheckContext(fs, self.config)
        if checks is None:
            category = None if suite == "all" else suite
            checks = CheckFactory.get_supported_checks(category)
        report = Report(seed=ctx.seed, precision=self.precision, suite=suite)
        for name in checks:
            check = CheckFactory.create(name, self.config)
            report.results.append(check.run(ctx))
        logger.info(f"Verification finished: {len(report.results)} checks, failed {report.failed}")
        return report

    def verify(self, data: Optional[Dict[str, Any]] = None, suite: str = "exact",
               checks: Optional[List[str]] = None, include_timings: bool = False) -> Dict[str, Any]:
        """
        Run a verification suite

        Args:
            data (dict): factorization; the standard fixture if empty
            suite (str): "exact", "numeric" or "all"
            checks (list, optional): explicit check names instead of a whole suite
            include_timings (bool): add per-check wall-clock seconds under "timings"

        Returns:
            dict: {"success": True, "report": ...}; success reflects the run, not the checks
        """
        try:
            report = self.run_checks(data, suite, checks)
            return {"success": True, "passed": report.passed, "report": report.to_json(include_timings),
                    "summary": report.to_text()}
        except Exception as e:
            logger.error(f"verify failed: {e}")
            return failure(e)
