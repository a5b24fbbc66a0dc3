"""
Transcendental verification checks: periods, theta functions, the S-basis and
the analytic form of the isogeny. All of them share the period matrices and
S-bases cached on the CheckContext.
"""
import itertools
import logging

from mpmath import mp

from services.check_factory import CheckFactory
from services.check_interface import CheckContext, CheckInterface, CheckResult
from services.exact_checks import split_of
from services.kleinian_numeric import even_characteristics
from services.richelot_core import SignChoice, hat_f, matrix_H

logger = logging.getLogger(__name__)


class NumericCheck(CheckInterface):
    category = "numeric"

    def seed_for(self, ctx: CheckContext) -> int:
        return ctx.rng(self.name).randrange(2 ** 31)


@CheckFactory.register_check
class LegendreCheck(NumericCheck):
    name = "legendre"
    description = "Legendre relation and symmetry of the eta/omega period products for f and f^"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        adapted = ctx.adapted
        tol = ctx.period_service.legendre_tol
        residuals = {
            "f": adapted.f_periods.legendre_residuals(),
            "hat_f": adapted.hat_periods.legendre_residuals(),
        }
        worst = max(v for table in residuals.values() for v in table.values())
        return self.result(worst <= tol, residual=worst, tolerance=tol, details=residuals,
                           reproduce=ctx.reproduce(precision=ctx.period_service.precision))


@CheckFactory.register_check
class LatticeInclusionCheck(NumericCheck):
    name = "lattice_inclusion"
    description = "2 Per_f in Per_f^ in Per_f, index 4, and exactly the p/q/r pairs double into Per_f^"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        service = ctx.period_service
        adapted = ctx.adapted
        f = ctx.model.f
        with mp.workprec(service.precision):
            L_f = adapted.f_periods.lattice()
            L_h = adapted.hat_periods.lattice()
            hat_in_f = all(L_f.contains(L_h.column(k)) for k in range(4))
            double_f_in_hat = all(L_h.contains([2 * w for w in L_f.column(k)]) for k in range(4))
            ratio = L_h.covolume() / L_f.covolume()
        br = service.branching(f)
        kernel = []
        for i, j in itertools.combinations(range(6), 2):
            z = service.abel_pair(f, service.weierstrass_divisor(f, i, j))
            with mp.workprec(service.precision):
                if L_h.contains([2 * z[0], 2 * z[1]]):
                    kernel.append([i, j])
        expected = sorted(sorted(service._factor_indices(br, quad)) for quad in ctx.model.factors)
        passed = hat_in_f and double_f_in_hat and abs(ratio - 4) <= ctx.tol * 4 and sorted(kernel) == expected
        return self.result(passed, residual=float(abs(ratio - 4)), tolerance=ctx.tol,
                           details={
                               "hat_in_f": hat_in_f,
                               "double_f_in_hat": double_f_in_hat,
                               "covolume_ratio": float(ratio),
                               "kernel_pairs": kernel,
                               "factor_pairs": expected,
                               "kernel_labels": adapted.kernel_labels,
                           },
                           reproduce=ctx.reproduce(precision=service.precision))


@CheckFactory.register_check
class EtaTransformCheck(NumericCheck):
    name = "eta_transform"
    description = "eta^f(w) = 2 eta^f^(w) + H w on the generators of Per_f^"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        adapted = ctx.adapted
        report = ctx.period_service.verify_eta_transform(
            ctx.model, adapted.f_periods, adapted.hat_periods, matrix_H(ctx.model))
        return self.result(report["residual"] <= ctx.tol, residual=report["residual"], tolerance=ctx.tol,
                           details=report, reproduce=ctx.reproduce())


@CheckFactory.register_check
class ThetaPropertiesCheck(NumericCheck):
    name = "theta_properties"
    description = "Even theta constants nonzero, theta quasi-periodicity and the second-order addition formula"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        service = ctx.kleinian_service
        Omega = ctx.adapted.f_periods.Omega
        rng = ctx.rng(self.name)
        with mp.workprec(service.precision):
            constants = service.theta_constants(Omega)
            smallest = min(abs(v) for v in constants.values())
            zs = [[mp.mpc(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)) for _ in range(2)] for _ in range(3)]
        shifts = [((1, 0), (0, 0)), ((0, 1), (1, -1)), ((1, 1), (0, 1))]
        quasi = 0.0
        for ch in even_characteristics()[:4]:
            for m, n in shifts:
                quasi = max(quasi, service.verify_theta_quasi_periodicity(Omega, ch, zs[0], m, n))
        addition = service.verify_addition_formula(Omega, zs)
        worst = max(quasi, addition)
        passed = worst <= ctx.tol and smallest > ctx.tol
        return self.result(passed, residual=worst, tolerance=ctx.tol,
                           details={
                               "smallest_constant": float(smallest),
                               "quasi_periodicity": quasi,
                               "addition_formula": addition,
                           },
                           reproduce=ctx.reproduce(seed=ctx.seed))


@CheckFactory.register_check
class SBasisCheck(NumericCheck):
    name = "s_basis"
    description = "Taylor normalization, quasi-periodicity, evenness, wp = xi and node half-periods of the S-basis"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        service = ctx.kleinian_service
        seed = self.seed_for(ctx)
        details = {}
        for label, sb in (("f", ctx.sb_f), ("hat_f", ctx.sb_hat)):
            z = service.sample_points(sb.periods, 1, seed)[0]
            details[label] = {
                "certificate": sb.certificate,
                "quasi_periodicity": service.verify_quasi_periodicity(sb, z),
                "evenness": service.verify_evenness(sb, z),
            }
        divisors = service.random_divisors(ctx.model.f, 10, seed)
        details["wp_xi"] = service.verify_wp_xi(ctx.model.f, ctx.sb_f, divisors)
        details["node_half_periods"] = service.verify_node_half_periods(ctx.model, ctx.sb_f)
        values = [details["wp_xi"]] + list(details["node_half_periods"].values())
        for label in ("f", "hat_f"):
            entry = details[label]
            values += [entry["certificate"]["finite_difference"], entry["quasi_periodicity"], entry["evenness"]]
        worst = max(values)
        return self.result(worst <= ctx.tol, residual=worst, tolerance=ctx.tol, details=details,
                           reproduce=ctx.reproduce(seed=seed))


@CheckFactory.register_check
class MainTheoremCheck(NumericCheck):
    name = "main_theorem"
    description = "S_f(z) = -exp(z^T H z)/(32 Delta^3) (S_f^^T A_j S_f^)_j at 20 random points"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        service = ctx.kleinian_service
        seed = self.seed_for(ctx)
        zs = service.sample_points(ctx.adapted.f_periods, 20, seed)
        report = service.verify_main_theorem(ctx.model, ctx.sb_f, ctx.sb_hat, zs)
        residual = report["max_residual"]
        return self.result(residual <= ctx.tol, residual=residual, tolerance=ctx.tol,
                           details={"max_projective": report["max_projective"], "samples": report["samples"][:3]},
                           reproduce=ctx.reproduce(seed=seed))


@CheckFactory.register_check
class KummerDiagramCheck(NumericCheck):
    name = "kummer_diagram"
    description = "richelot_map(xi_f^(D)) is proportional to S_f(A_f^(D)) on 10 random divisors"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        service = ctx.kleinian_service
        seed = self.seed_for(ctx)
        divisors = service.random_divisors(hat_f(ctx.model), 10, seed)
        report = service.verify_kummer_diagram(ctx.model, ctx.sb_f, ctx.adapted.hat_periods, divisors)
        residual = report["max_projective"]
        return self.result(residual <= ctx.tol, residual=residual, tolerance=ctx.tol,
                           details={"samples": report["samples"][:3]},
                           reproduce=ctx.reproduce(seed=seed))


@CheckFactory.register_check
class SquareRelationCheck(NumericCheck):
    name = "square_relation"
    description = "B S_f(z) is proportional to Sq(B^ S_f^(z)) when every factor splits over Q"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        lins = split_of(ctx.model)
        if lins is None:
            return self.result(True, details={"skipped": "delta_p, delta_q, delta_r are not rational"})
        s = SignChoice.from_factors(*lins)
        service = ctx.kleinian_service
        seed = self.seed_for(ctx)
        zs = service.sample_points(ctx.adapted.f_periods, 5, seed)
        residual = service.verify_square_relation(ctx.model, s, ctx.sb_f, ctx.sb_hat, zs)
        return self.result(residual <= ctx.tol, residual=residual, tolerance=ctx.tol,
                           details={"signs": [s.delta_p, s.delta_q, s.delta_r]},
                           reproduce=ctx.reproduce(seed=seed))
