import pytest

from services.check_factory import CheckFactory
from services.check_interface import CheckContext, CheckInterface, CheckResult
from services.errors import IllConditioned
import services.exact_checks as exact_checks
from services.exact_checks import TropeIdentityCheck, split_of
from services.richelot_core import FactoredSextic
from services.quad_algebra import Quad
from services.verification_service import Report, VerificationService

EXACT_CHECKS = {
    "bracket_identities", "root_incidence", "hat_identities", "matrix_inverse", "square_identity",
    "last_rows", "kernel_collapse", "node_transport", "trope_configuration", "trope_identity",
    "symmetries", "first_three_rows", "decompositions",
}
NUMERIC_CHECKS = {
    "legendre", "lattice_inclusion", "eta_transform", "theta_properties", "s_basis",
    "main_theorem", "kummer_diagram", "square_relation",
}


class FlakyCheck(CheckInterface):
    name = "flaky"
    category = "numeric"

    def evaluate(self, ctx):
        raise IllConditioned("Branch points too close", {"gap": 1e-30})


def test_registry_by_category():
    VerificationService()
    assert set(CheckFactory.get_supported_checks("exact")) == EXACT_CHECKS
    assert set(CheckFactory.get_supported_checks("numeric")) == NUMERIC_CHECKS
    assert CheckFactory.is_supported("Main_Theorem")
    assert isinstance(CheckFactory.create("symmetries"), CheckInterface)


def test_registry_rejects_unknown_and_foreign_classes():
    with pytest.raises(ValueError, match="Unsupported check"):
        CheckFactory.create("no_such_check")
    with pytest.raises(TypeError):
        CheckFactory.register_check(dict)


def test_typed_errors_become_failed_results(standard_fs):
    outcome = FlakyCheck().run(CheckContext(standard_fs, {"seed": 7}))
    assert not outcome.passed
    assert outcome.details["error_type"] == "IllConditioned"
    assert outcome.reproduce["seed"] == 7
    assert outcome.reproduce["factors"]["p"] == ["0/1", "-1/1", "1/1"]


def test_context_streams_are_deterministic(standard_fs):
    first = CheckContext(standard_fs, {"seed": 3})
    second = CheckContext(standard_fs, {"seed": 3})
    assert first.rng("a").random() == second.rng("a").random()
    assert first.rng("a").random() != first.rng("b").random()
    assert first.cached("k", lambda: [1]) is first.cached("k", lambda: [2])


def test_check_result_json():
    result = CheckResult("x", "exact", True, residual=0.0, seconds=1.23456)
    assert result.to_json()["seconds"] == 1.235
    assert "seconds" not in result.to_json(include_timings=False)


def test_split_of_standard_fixture(standard_fs, standard_lins):
    assert split_of(standard_fs) == standard_lins
    assert split_of(FactoredSextic(Quad(1, 0, 1), Quad(6, -5, 1), Quad(20, -9, 1))) is None


def test_exact_suite_passes(quick_config):
    report = VerificationService(quick_config).run_checks(suite="exact")
    assert {r.name for r in report.results} == EXACT_CHECKS
    assert report.passed, report.to_text()
    assert report.seed == quick_config["seed"]


def test_exact_suite_on_another_factorization(quick_config):
    data = {"p": ["-1", "0", "1"], "q": ["0", "-4", "1"], "r": ["6", "5", "1"]}
    checks = ["kernel_collapse", "node_transport", "trope_configuration", "symmetries", "first_three_rows"]
    report = VerificationService(quick_config).run_checks(data, checks=checks)
    assert report.passed, report.to_text()


def test_report_is_deterministic(quick_config):
    service = VerificationService(quick_config)
    checks = ["bracket_identities", "trope_identity"]
    first = service.verify(checks=checks, include_timings=True)
    second = service.verify(checks=checks)
    assert first["success"] and first["passed"]
    assert "timings" in first["report"] and "timings" not in second["report"]
    first["report"].pop("timings")
    assert first["report"] == second["report"]


def test_report_summary_table():
    report = Report(results=[CheckResult("a", "exact", True), CheckResult("b", "numeric", False, residual=0.5)])
    assert not report.passed
    assert report.failed == ["b"]
    table = report.summary()
    assert list(table["check"]) == ["a", "b"]
    assert "FAILED (b)" in report.to_text()


def test_unknown_suite_is_reported():
    result = VerificationService().verify(suite="fast")
    assert not result["success"]
    assert result["error_type"] == "ValueError"


def test_trope_identity_fourth_trope_misses_the_vector(standard_fs, standard_signs, standard_lins):
    dots = TropeIdentityCheck._incidences(standard_fs, standard_signs, standard_lins)
    assert [dots[k] for k in ("P2Q1R1", "P1Q2R1", "P1Q1R2")] == [0, 0, 0]
    assert dots["P1Q1R1"] != 0


def test_trope_identity_fails_on_a_vector_on_every_trope(monkeypatch, standard_fs):
    monkeypatch.setattr(exact_checks, "trope_vector", lambda fs, s: [0, 0, 0, 0])
    outcome = CheckFactory.create("trope_identity").run(CheckContext(standard_fs, {"seed": 1, "trials": 5}))
    assert not outcome.passed
    assert outcome.details["failures"][0]["dots"]["P1Q1R1"] == 0
