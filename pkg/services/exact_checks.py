"""
Exact-arithmetic verification checks and the random fixture generators they use.

Every check compares rationals with ==; nothing here rounds. Trial counts
scale with the context: `trials` identity trials, trials/10 matrix fixtures,
trials/5 trope trials and trials/50 fixtures with rational square roots.
"""
import itertools
import logging
import random
from collections import Counter
from typing import List, Tuple

import numpy as np
from mpmath import mp
from sympy import ImmutableMatrix, Matrix, Rational, expand, eye, symbols

from services.check_factory import CheckFactory
from services.check_interface import CheckContext, CheckInterface, CheckResult
from services.curve_kummer import (
    Sextic,
    incidence_matrix,
    is_admissible,
    node_table,
    trope_table,
    trope_triple,
)
from services.errors import RichelotError
from services.quad_algebra import (
    LinFactor,
    Mobius,
    Quad,
    bracket,
    delta,
    discr,
    mobius_act,
    poly_mul,
    res,
    res1,
    roots,
    share_root,
)
from services.richelot_core import (
    FactoredSextic,
    H_from_A,
    SignChoice,
    enumerate_decompositions,
    extract_A_matrices,
    first_three_rows_scale,
    hat_f,
    hat_hyperplane_row,
    hat_triple,
    last_row_constant,
    map_T,
    matrices_U_V,
    matrix_C,
    matrix_C_inv,
    matrix_D,
    matrix_H,
    richelot_map,
    richelot_map_numeric,
    square_map,
    symmetry_X,
    trope_vector,
)

logger = logging.getLogger(__name__)

A_SYMBOLS = symbols("a1:5")


def random_rational(rng: random.Random, height: int, nonzero: bool = False) -> Rational:
    while True:
        value = Rational(rng.randint(-height, height), rng.randint(1, height))
        if value != 0 or not nonzero:
            return value


def random_quad(rng: random.Random, height: int) -> Quad:
    return Quad(random_rational(rng, height), random_rational(rng, height), random_rational(rng, height, True))


def random_mobius(rng: random.Random, height: int) -> Mobius:
    a = random_rational(rng, height, True)
    b = random_rational(rng, height)
    c = random_rational(rng, height)
    return Mobius(a, b, c, (1 + b * c) / a)


def random_triple(rng: random.Random, height: int) -> Tuple[Quad, Quad, Quad]:
    while True:
        p, q, r = (random_quad(rng, height) for _ in range(3))
        if delta(p, q, r) != 0:
            return p, q, r


def random_factored(rng: random.Random, height: int) -> FactoredSextic:
    while True:
        try:
            return FactoredSextic(*random_triple(rng, height))
        except RichelotError:
            continue


def random_linear(rng: random.Random, height: int) -> LinFactor:
    return LinFactor(random_rational(rng, height), random_rational(rng, height, True))


def random_split(rng: random.Random, height: int) -> Tuple[FactoredSextic, SignChoice, List[LinFactor]]:
    """A factorization into products of rational linear factors, so every delta is rational."""
    while True:
        lins = [random_linear(rng, height) for _ in range(6)]
        try:
            fs = FactoredSextic(lins[0] * lins[1], lins[2] * lins[3], lins[4] * lins[5])
        except RichelotError:
            continue
        return fs, SignChoice.from_factors(*lins), lins


def standard_linear_factors() -> List[LinFactor]:
    """x, x-1, x-2, x-3, x-4, x-5: the split form of the standard fixture."""
    return [LinFactor(-k, 1) for k in range(6)]


def split_of(fs: FactoredSextic):
    """Rational linear factors (p1, p2, q1, q2, r1, r2) when every factor splits over Q, else None."""
    lins = []
    for quad in fs.factors:
        rts = roots(quad)
        if any(t.kind == "quadratic" for t in rts):
            return None
        # smaller root first, infinity last
        rts = sorted(rts, key=lambda t: (t.is_infinite, t.value if not t.is_infinite else 0))
        first = LinFactor(1, 0) if rts[0].is_infinite else LinFactor(-rts[0].value, 1)
        second = LinFactor(1, 0) if rts[1].is_infinite else LinFactor(-rts[1].value, 1)
        lead = quad[2] if quad[2] != 0 else (quad[1] if quad[1] != 0 else quad[0])
        lins += [LinFactor(lead * first.g0, lead * first.g1), second]
    return lins


def _cubic(a: LinFactor, b: LinFactor, c: LinFactor) -> Tuple:
    return poly_mul(poly_mul(a.coeffs, b.coeffs), c.coeffs)


class ExactCheck(CheckInterface):
    category = "exact"


@CheckFactory.register_check
class BracketIdentitiesCheck(ExactCheck):
    name = "bracket_identities"
    description = "Antisymmetry, Jacobi, Discr([p,q]) = 4 Res(p,q), res1^2 = Discr(gh), Mobius equivariance"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        rng = ctx.rng(self.name)
        failures = []
        for trial in range(ctx.trials):
            p, q, r = (random_quad(rng, ctx.height) for _ in range(3))
            g, h = random_linear(rng, ctx.height), random_linear(rng, ctx.height)
            S = random_mobius(rng, ctx.height)
            checks = {
                "antisymmetry": (bracket(p, q) + bracket(q, p)).is_zero(),
                "jacobi": (bracket(p, bracket(q, r)) + bracket(q, bracket(r, p)) + bracket(r, bracket(p, q))).is_zero(),
                "discr_bracket": discr(bracket(p, q)) == 4 * res(p, q),
                "res1_square": res1(g, h) ** 2 == discr(g * h),
                "mobius_equivariance": mobius_act(S, bracket(p, q)) == bracket(mobius_act(S, p), mobius_act(S, q)),
            }
            for label, ok in checks.items():
                if not ok:
                    failures.append({"trial": trial, "identity": label, "p": p, "q": q, "r": r})
        return self.result(not failures, details={"trials": ctx.trials, "failures": failures[:5]},
                           reproduce={"seed": ctx.seed, "height": ctx.height})


@CheckFactory.register_check
class RootIncidenceCheck(ExactCheck):
    name = "root_incidence"
    description = "Res = 0 iff a shared root, Discr = 0 iff a double root, infinity included"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        rng = ctx.rng(self.name)
        failures = []
        pool = [None] + [Rational(k) for k in range(-3, 4)]
        for _ in range(max(1, ctx.trials // 10)):
            a, b, c, d = (rng.choice(pool) for _ in range(4))
            lead_p = random_rational(rng, ctx.height, True)
            lead_q = random_rational(rng, ctx.height, True)
            p = Quad.from_roots(a, b, lead_p)
            q = Quad.from_roots(c, d, lead_q)
            shares = bool({a, b} & {c, d})
            if (res(p, q) == 0) != shares or share_root(p, q) != shares:
                failures.append({"p": p, "q": q, "res": res(p, q)})
            if (discr(p) == 0) != (a == b):
                failures.append({"p": p, "discr": discr(p)})
        return self.result(not failures, details={"failures": failures[:5]}, reproduce={"seed": ctx.seed})


@CheckFactory.register_check
class HatIdentitiesCheck(ExactCheck):
    name = "hat_identities"
    description = "[p^,q^] = -2 Delta r, Delta(p^,q^,r^) = -2 Delta^2, Res(p^,q^) = Delta^2 Discr(r), Mobius invariance of Delta"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        rng = ctx.rng(self.name)
        failures = []
        for trial in range(ctx.trials):
            p, q, r = random_triple(rng, ctx.height)
            d = delta(p, q, r)
            hp, hq, hr = bracket(q, r), bracket(r, p), bracket(p, q)
            S = random_mobius(rng, ctx.height)
            checks = {
                "brackets": bracket(hp, hq) == r.scale(-2 * d)
                and bracket(hq, hr) == p.scale(-2 * d)
                and bracket(hr, hp) == q.scale(-2 * d),
                "delta_hat": delta(hp, hq, hr) == -2 * d ** 2,
                "res_hat": res(hp, hq) == d ** 2 * discr(r)
                and res(hq, hr) == d ** 2 * discr(p)
                and res(hr, hp) == d ** 2 * discr(q),
                "mobius_delta": delta(mobius_act(S, p), mobius_act(S, q), mobius_act(S, r)) == d,
            }
            for label, ok in checks.items():
                if not ok:
                    failures.append({"trial": trial, "identity": label, "p": p, "q": q, "r": r})
        fs = ctx.fs
        hp, hq, hr = hat_triple(fs)
        standard = {
            "delta_hat": delta(hp, hq, hr),
            "res_hat_pq": res(hp, hq),
            "hat_f_admissible": is_admissible(hat_f(fs)),
        }
        if not standard["hat_f_admissible"]:
            failures.append({"identity": "hat_f_admissible", "factors": fs.to_json()})
        return self.result(not failures, details={"trials": ctx.trials, "fixture": standard, "failures": failures[:5]},
                           reproduce={"seed": ctx.seed, "height": ctx.height})


@CheckFactory.register_check
class MatrixInverseCheck(ExactCheck):
    name = "matrix_inverse"
    description = "C Cinv = I from the two closed forms, det D != 0"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        rng = ctx.rng(self.name)
        fixtures = [ctx.fs] + [random_factored(rng, ctx.height) for _ in range(max(1, ctx.trials // 10))]
        failures = []
        for fs in fixtures:
            if matrix_C(fs) * matrix_C_inv(fs) != eye(4):
                failures.append({"factors": fs.to_json(), "identity": "C Cinv"})
            if matrix_D(fs).det() == 0:
                failures.append({"factors": fs.to_json(), "identity": "det D"})
        return self.result(not failures, details={"fixtures": len(fixtures), "failures": failures[:5]},
                           reproduce={"seed": ctx.seed, "height": ctx.height})


@CheckFactory.register_check
class SquareIdentityCheck(ExactCheck):
    name = "square_identity"
    description = "V Sq(U a) = 4 dp dq dr T(a) as a polynomial identity in a"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        rng = ctx.rng(self.name)
        cases = []
        lins = split_of(ctx.fs)
        if lins is not None:
            cases.append((ctx.fs, SignChoice.from_factors(*lins)))
        for _ in range(max(1, ctx.trials // 50)):
            fs, s, _ = random_split(rng, ctx.height)
            cases.append((fs, s))
        failures = []
        for fs, s in cases:
            lhs = square_map(fs, s, A_SYMBOLS)
            rhs = map_T(fs, A_SYMBOLS)
            diff = [expand(lhs[i] - 4 * s.product * rhs[i]) for i in range(4)]
            if any(v != 0 for v in diff):
                failures.append({"factors": fs.to_json(), "difference": [str(v) for v in diff]})
        return self.result(not failures, details={"fixtures": len(cases), "failures": failures[:3]},
                           reproduce={"seed": ctx.seed})


@CheckFactory.register_check
class LastRowsCheck(ExactCheck):
    name = "last_rows"
    description = "Last rows of A, A22, A12, A11 are c e1, c e2, c e3, (-cH11, -cH12, cH22, 2c) with c = -16 Delta^3"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        rng = ctx.rng(self.name)
        fixtures = [ctx.fs] + [random_factored(rng, ctx.height) for _ in range(max(1, ctx.trials // 10))]
        failures = []
        a = Matrix(A_SYMBOLS)
        for index, fs in enumerate(fixtures):
            family = extract_A_matrices(fs)
            c = last_row_constant(fs)
            for k in range(3):
                expected = [c if j == k else 0 for j in range(4)]
                if list(family[k].row(3)) != expected:
                    failures.append({"factors": fs.to_json(), "matrix": k, "row": list(family[k].row(3))})
            H = matrix_H(fs)
            if family[3][3, 3] != 2 * c or H_from_A(fs, family[3]) != H or H != H.T:
                failures.append({"factors": fs.to_json(), "matrix": "A11"})
            if any(A != A.T for A in family):
                failures.append({"factors": fs.to_json(), "identity": "symmetry"})
            if index == 0:
                image = richelot_map(fs, A_SYMBOLS)
                forms = [expand((a.T * A * a)[0, 0] - image[j]) for j, A in enumerate(family)]
                if any(v != 0 for v in forms):
                    failures.append({"factors": fs.to_json(), "identity": "quadratic forms"})
        return self.result(not failures, details={"fixtures": len(fixtures), "failures": failures[:5]},
                           reproduce={"seed": ctx.seed, "height": ctx.height})


@CheckFactory.register_check
class KernelCollapseCheck(ExactCheck):
    name = "kernel_collapse"
    description = "The kernel nodes (columns of C) map to multiples of (0,0,0,1)"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        rng = ctx.rng(self.name)
        fixtures = [ctx.fs] + [random_factored(rng, ctx.height) for _ in range(max(1, ctx.trials // 10))]
        failures = []
        for fs in fixtures:
            C = matrix_C(fs)
            for k in range(4):
                image = richelot_map(fs, list(C.col(k)))
                if any(image[i] != 0 for i in range(3)) or image[3] == 0:
                    failures.append({"factors": fs.to_json(), "column": k, "image": list(image)})
        return self.result(not failures, details={"fixtures": len(fixtures), "failures": failures[:5]},
                           reproduce={"seed": ctx.seed, "height": ctx.height})


@CheckFactory.register_check
class NodeTransportCheck(ExactCheck):
    name = "node_transport"
    description = "All 16 nodes of the dual Kummer surface map onto nodes, 4-to-1"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        fs = ctx.fs
        with mp.workprec(int(ctx.config.get("precision", 96))):
            hat_roots = [t.to_complex() for quad in hat_triple(fs) for t in roots(quad)]
            if any(t is None for t in hat_roots):
                return self.result(True, details={"skipped": "dual curve has a root at infinity"})
            hat_nodes = node_table(hat_f(fs), hat_roots)
            target = node_table(fs.f, fs.f.rational_roots())
            assignment = {}
            for label, point in hat_nodes.points.items():
                image = richelot_map_numeric(fs, list(point.coords))
                assignment[label] = target.find([image[i] for i in range(4)], ctx.proj_tol)
        counts = Counter(assignment.values())
        passed = None not in counts and len(counts) == 4 and set(counts.values()) == {4}
        return self.result(passed, tolerance=ctx.proj_tol,
                           details={"assignment": assignment, "fibres": dict(counts)},
                           reproduce={"factors": fs.to_json()})


@CheckFactory.register_check
class TropeConfigurationCheck(ExactCheck):
    name = "trope_configuration"
    description = "(16,6) configuration: six nodes on each trope, six tropes through each node"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        f = ctx.fs.f
        if f.rational_roots() is None:
            return self.result(True, details={"skipped": "f does not split over Q"})
        nodes = node_table(f)
        tropes = trope_table(f)
        incidence = np.array(incidence_matrix(nodes, tropes), dtype=int)
        row_sums = incidence.sum(axis=1).tolist()
        col_sums = incidence.sum(axis=0).tolist()
        distinct = all(not a.equals(b) for a, b in itertools.combinations(nodes.points.values(), 2))
        passed = incidence.shape == (16, 16) and set(row_sums) == {6} and set(col_sums) == {6} and distinct
        return self.result(passed, details={"trope_counts": row_sums, "node_counts": col_sums, "distinct": distinct},
                           reproduce={"factors": ctx.fs.to_json()})


@CheckFactory.register_check
class TropeIdentityCheck(ExactCheck):
    name = "trope_identity"
    description = "D (dp, dq, dr, dp dq dr) lies on the tropes P1Q1R2, P1Q2R1, P2Q1R1 and not on P1Q1R1"

    @staticmethod
    def _incidences(fs: FactoredSextic, s: SignChoice, lins: List[LinFactor]) -> dict:
        p1, p2, q1, q2, r1, r2 = lins
        vector = list(trope_vector(fs, s))
        triples = {
            "P2Q1R1": ((p2, q1, r1), (p1, q2, r2)),
            "P1Q2R1": ((p1, q2, r1), (p2, q1, r2)),
            "P1Q1R2": ((p1, q1, r2), (p2, q2, r1)),
            "P1Q1R1": ((p1, q1, r1), (p2, q2, r2)),
        }
        return {label: trope_triple(_cubic(*g), _cubic(*h), fs.f).dot(vector) for label, (g, h) in triples.items()}

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        rng = ctx.rng(self.name)
        cases = []
        lins = split_of(ctx.fs)
        if lins is not None:
            cases.append((ctx.fs, SignChoice.from_factors(*lins), lins))
        for _ in range(max(1, ctx.trials // 5)):
            cases.append(random_split(rng, ctx.height))
        failures = []
        fixture = None
        for fs, s, lins in cases:
            dots = self._incidences(fs, s, lins)
            if fixture is None:
                fixture = {"vector": list(trope_vector(fs, s)), "dots": dots}
            if any(dots[k] != 0 for k in ("P2Q1R1", "P1Q2R1", "P1Q1R2")) or dots["P1Q1R1"] == 0:
                failures.append({"factors": fs.to_json(), "dots": dots})
        return self.result(not failures, details={"trials": len(cases), "fixture": fixture, "failures": failures[:5]},
                           reproduce={"seed": ctx.seed, "height": ctx.height})


@CheckFactory.register_check
class SymmetryCheck(ExactCheck):
    name = "symmetries"
    description = "X^2 = Res Res I, X_p X_q = Res(p^,q^) X_r, invariant rows with eigenvalues Delta^2 dq dr"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        fs = ctx.fs
        hp, hq, hr = hat_triple(fs)
        X = {w: symmetry_X(fs, w) for w in "pqr"}
        failures = []
        squares = {"p": res(hp, hr) * res(hp, hq), "q": res(hq, hr) * res(hq, hp), "r": res(hr, hq) * res(hr, hp)}
        for w, M in X.items():
            if M * M != squares[w] * eye(4):
                failures.append({"identity": f"X_{w}^2"})
        if X["p"] * X["q"] != res(hp, hq) * X["r"]:
            failures.append({"identity": "X_p X_q"})
        lins = split_of(fs)
        rows = []
        if lins is not None:
            base = SignChoice.from_factors(*lins)
            d2 = fs.delta ** 2
            for s in (base, base.flipped("p"), base.flipped("q"), base.flipped("r")):
                row = ImmutableMatrix([list(hat_hyperplane_row(fs, s).coords)])
                rows.append(list(row))
                eigen = {"p": d2 * s.delta_q * s.delta_r, "q": d2 * s.delta_r * s.delta_p, "r": d2 * s.delta_p * s.delta_q}
                for w, M in X.items():
                    if row * M != eigen[w] * row:
                        failures.append({"identity": f"row X_{w}", "signs": [s.delta_p, s.delta_q, s.delta_r]})
            if Matrix(rows).rank() != 4:
                failures.append({"identity": "row rank"})
        return self.result(not failures, details={"squares": squares, "rows": rows, "failures": failures},
                           reproduce={"factors": fs.to_json()})


@CheckFactory.register_check
class FirstThreeRowsCheck(ExactCheck):
    name = "first_three_rows"
    description = "c (D V) - (U Cinv)^-1 diag(b)^-1 vanishes outside the last row, c = -1/(64 Delta^3 dp dq dr)"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        rng = ctx.rng(self.name)
        cases = []
        lins = split_of(ctx.fs)
        if lins is not None:
            cases.append((ctx.fs, SignChoice.from_factors(*lins)))
        for _ in range(max(1, ctx.trials // 50)):
            fs, s, _ = random_split(rng, ctx.height)
            cases.append((fs, s))
        failures = []
        scales = []
        for fs, s in cases:
            c, residual = first_three_rows_scale(fs, s)
            U, _ = matrices_U_V(fs, s)
            column = list((U * matrix_C_inv(fs)).col(3))
            scales.append(c)
            ok = (
                all(residual[i, j] == 0 for i in range(3) for j in range(4))
                and c == -1 / (64 * fs.delta ** 3 * s.product)
                and column == [-16 * fs.delta] * 4
            )
            if not ok:
                failures.append({"factors": fs.to_json(), "c": c, "column": column})
        return self.result(not failures, details={"fixtures": len(cases), "scales": scales[:3], "failures": failures[:3]},
                           reproduce={"seed": ctx.seed, "height": ctx.height})


EVEN_FIXTURE = Sextic.from_factors((-1, 0, 1), (-4, 0, 1), (-9, 0, 1))


@CheckFactory.register_check
class DecompositionCheck(ExactCheck):
    name = "decompositions"
    description = "15 pairings per curve, degenerate ones flagged, every other dual curve admissible"

    def evaluate(self, ctx: CheckContext) -> CheckResult:
        details = {}
        failures = []
        curves = {"even": EVEN_FIXTURE}
        if ctx.fs.f.rational_roots() is not None:
            curves["input"] = ctx.fs.f
        for label, f in curves.items():
            rows = enumerate_decompositions(f)
            degenerate = [list(map(list, d.pairs)) for d in rows if d.degenerate]
            details[label] = {"count": len(rows), "degenerate": degenerate}
            if len(rows) != 15:
                failures.append({"curve": label, "count": len(rows)})
            for d in rows:
                if not d.degenerate and not is_admissible(hat_f(d.factored)):
                    failures.append({"curve": label, "pairs": d.pairs})
        if not details["even"]["degenerate"]:
            failures.append({"curve": "even", "reason": "no degenerate pairing"})
        return self.result(not failures, details=dict(details, failures=failures))
