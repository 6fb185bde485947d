"""
Verification suites - the checks behind each CLI subcommand.

Checks register themselves per suite with `@check(suite, name)` and return
an `Outcome`. The runner wraps every call: a GktwistError raised inside a
check becomes a failed CheckResult carrying the message, and the remaining
checks still run.

Pass/fail thresholds come from the resolved tolerances of the run
(Settings defaults, config `tolerances`, `--tol-override`).
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from gktwist.core.config import get_settings
from gktwist.core.errors import PositivityError
from gktwist.models.algebra import PAIRING, Hyper3
from gktwist.models.geometry import Chart, TwistorChart, TwistorPoint
from gktwist.models.models import NijenhuisBlock, Sheet, SuiteName, TwistorStructure
from gktwist.schemas.config import RunConfig, WitnessBlock
from gktwist.services import jets
from gktwist.services.connection import (
    ConnectionSpec,
    bianchi_residual,
    curvature,
    flatness_scan,
    max_torsion,
    sheet_report,
    sheet_scan,
    trace_condition,
)
from gktwist.services.expressions import Constant, parse_expression
from gktwist.services.fields import (
    Form,
    Section,
    StructureField,
    VectorField,
    add_forms,
    b_transform_field,
    courant_bracket,
    exterior_derivative,
    interior_product,
    lie_derivative_form,
    nijenhuis_field,
    nijenhuis_tensor,
    structure_from_complex,
    structure_from_symplectic,
    tensoriality_check,
)
from gktwist.services.gcalg import (
    F2,
    MINUS_BASIS,
    PHASE_PAIRING,
    PLUS_BASIS,
    b_transform,
    beta_transform,
    fiber_geometry,
    from_complex,
    from_symplectic,
    gks_fiber_pair,
    hyper_coordinates,
    kaehler_pair,
    orientation_class,
    positivity,
    positivity_gram,
    s_matrix,
    structure,
    structure_minus,
    structure_plus,
)
from gktwist.services.twistor import (
    BigStructure,
    adapted_nijenhuis,
    big_structures,
    bracket_identity,
    closed_form_gap,
    db_norm,
    frame_invariance,
    gamma_identity,
    horizontal_lift,
    jpm_nijenhuis,
    bihermitian_data,
    non_kahler_witness,
    twistor_verdict,
)

logger = logging.getLogger(__name__)

# Value of 3 d omega(d_u^h, d_v^h, W) at the default witness over a flat base
FLAT_WITNESS = -1.0 / (2.0 + math.sqrt(3.0))
CLOSED_FORM_POINTS = 5


@dataclass
class Outcome:
    ok: bool
    residuals: dict[str, float] = field(default_factory=dict)
    witness: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)


@dataclass
class SuiteContext:
    """Per-suite state: the parsed config, resolved tolerances and the suite's own PRNG."""

    config: RunConfig
    spec: ConnectionSpec
    tolerances: dict[str, float]
    rng: np.random.Generator

    @cached_property
    def twistor_chart(self) -> TwistorChart:
        return self.config.build_twistor_chart()

    @cached_property
    def big(self) -> BigStructure:
        return big_structures(self.spec, self.twistor_chart)

    @cached_property
    def flat(self) -> bool:
        return flatness_scan(self.spec, self.count("grid_size")).max_norm < self.tol("flatness")

    def tol(self, key: str) -> float:
        return self.tolerances[key]

    def count(self, key: str) -> int:
        override = getattr(self.config.samples, key)
        return override if override is not None else getattr(get_settings(), key)

    def twistor_points(self, n: int | None = None) -> list[TwistorPoint]:
        return self.twistor_chart.sample(self.rng, n or self.count("twistor_points"))

    def base_points(self, n: int) -> list[tuple[float, ...]]:
        return self.spec.chart.sample(self.rng, n)


CheckFn = Callable[[SuiteContext], Outcome]

SUITES: dict[SuiteName, list[tuple[str, CheckFn]]] = {suite: [] for suite in SuiteName}


def check(suite: SuiteName, name: str):
    def register(fn: CheckFn) -> CheckFn:
        SUITES[suite].append((name, fn))
        return fn

    return register


def plain(obj):
    """numpy scalars and arrays to JSON-ready Python values."""
    if isinstance(obj, dict):
        return {str(k.value if hasattr(k, "value") else k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _hyper(rng: np.random.Generator, sign: int = 1) -> Hyper3:
    a2, a3 = rng.uniform(-2.0, 2.0, size=2)
    return Hyper3.from_chart(float(a2), float(a3), sign)


def _sign(rng: np.random.Generator) -> int:
    return 1 if rng.random() < 0.5 else -1


def _structure_residuals(m: np.ndarray, pairing: np.ndarray) -> tuple[float, float]:
    eye = np.eye(m.shape[0])
    return float(np.max(np.abs(m @ m + eye))), float(np.max(np.abs(m.T @ pairing + pairing @ m)))


# --- fiber-algebra ---

@check(SuiteName.FIBER_ALGEBRA, "sheet-structures")
def _sheet_structures(ctx: SuiteContext) -> Outcome:
    n = ctx.count("fiber_samples")
    worst = {"square": 0.0, "skew": 0.0, "coordinates": 0.0}
    witness = {}
    misclassified = 0
    for sheet in Sheet:
        for _ in range(n):
            point = _hyper(ctx.rng, _sign(ctx.rng))
            j = structure(point, sheet)
            recovered = hyper_coordinates(j, sheet)
            measured = {
                "square": j.square_residual(),
                "skew": j.skew_residual(),
                "coordinates": float(np.max(np.abs(recovered.array - point.array))),
            }
            for key, value in measured.items():
                if value > worst[key]:
                    worst[key] = value
                    witness[key] = {"sheet": sheet.value, "x": point.array.tolist()}
            if orientation_class(j) != sheet:
                misclassified += 1
    tol = ctx.tol("structure")
    ok = (
        worst["square"] <= tol
        and worst["skew"] <= tol
        and worst["coordinates"] <= ctx.tol("algebraic")
        and misclassified == 0
    )
    return Outcome(ok, {**worst, "misclassified": float(misclassified)}, witness, {"samples_per_sheet": n})


@check(SuiteName.FIBER_ALGEBRA, "positivity-criterion")
def _positivity_criterion(ctx: SuiteContext) -> Outcome:
    n = ctx.count("fiber_samples")
    mismatches = 0
    smallest = math.inf
    witness = {}
    for _ in range(n):
        x, y = _hyper(ctx.rng, _sign(ctx.rng)), _hyper(ctx.rng, _sign(ctx.rng))
        i_struct, j_struct = structure_plus(x), structure_minus(y)
        expected = x.x1 * y.x1 > 0
        if positivity(i_struct, j_struct) != expected:
            mismatches += 1
            witness.setdefault("first_mismatch", {"x": x.array.tolist(), "y": y.array.tolist()})
        if expected:
            smallest = min(smallest, float(np.linalg.eigvalsh(positivity_gram(i_struct, j_struct))[0]))
    return Outcome(
        mismatches == 0,
        {"mismatches": float(mismatches), "min_positive_eigenvalue": smallest},
        witness,
        {"samples": n},
    )


@check(SuiteName.FIBER_ALGEBRA, "examples")
def _examples(ctx: SuiteContext) -> Outcome:
    tol = ctx.tol("algebraic")
    complex_point = hyper_coordinates(from_complex(F2), Sheet.PLUS)
    coordinates = float(np.max(np.abs(complex_point.array - np.array([1.0, 0.0, 0.0]))))
    classes_ok = orientation_class(from_complex(F2)) == Sheet.PLUS
    for w in (0.5, 1.0, 2.0):
        j = from_symplectic(w)
        expected = np.array([(w + 1.0 / w) / 2.0, 0.0, (1.0 / w - w) / 2.0])
        coordinates = max(coordinates, float(np.max(np.abs(hyper_coordinates(j, Sheet.MINUS).array - expected))))
        classes_ok = classes_ok and orientation_class(j) == Sheet.MINUS

    s = s_matrix
    plus = (s(1, 2) - s(3, 4), s(1, 3) - s(2, 4), s(1, 4) + s(2, 3))
    minus = (s(1, 2) + s(3, 4), s(1, 3) + s(2, 4), s(1, 4) - s(2, 3))
    tables = max(
        float(np.max(np.abs(built - table)))
        for built, table in zip(plus + minus, PLUS_BASIS + MINUS_BASIS)
    )

    i_struct, j_struct = kaehler_pair(F2, 1.0)
    commutator = float(np.max(np.abs(i_struct.m @ j_struct.m - j_struct.m @ i_struct.m)))
    try:
        kaehler_pair(F2, -1.0)
        untamed_rejected = False
    except PositivityError:
        untamed_rejected = True

    ok = coordinates <= tol and tables <= tol and commutator <= tol and classes_ok and untamed_rejected
    return Outcome(
        ok,
        {"coordinates": coordinates, "basis_tables": tables, "kaehler_commutator": commutator},
        details={"orientation_classes": classes_ok, "untamed_form_rejected": untamed_rejected},
    )


@check(SuiteName.FIBER_ALGEBRA, "transforms")
def _transforms(ctx: SuiteContext) -> Outcome:
    n = ctx.count("gks_samples")
    worst = 0.0
    class_changes = 0
    for _ in range(n):
        sheet = Sheet.PLUS if ctx.rng.random() < 0.5 else Sheet.MINUS
        j = structure(_hyper(ctx.rng, _sign(ctx.rng)), sheet)
        b, c = ctx.rng.uniform(-2.0, 2.0, size=2)
        for moved in (b_transform(j, float(b)), beta_transform(j, float(c))):
            worst = max(worst, moved.square_residual(), moved.skew_residual())
            if orientation_class(moved) != sheet:
                class_changes += 1
    ok = worst <= ctx.tol("algebraic") and class_changes == 0
    return Outcome(ok, {"structure": worst, "class_changes": float(class_changes)}, details={"samples": n})


@check(SuiteName.FIBER_ALGEBRA, "fiber-pair")
def _fiber_pair(ctx: SuiteContext) -> Outcome:
    n = ctx.count("gks_samples")
    worst = {"square_i": 0.0, "square_j": 0.0, "skew_i": 0.0, "skew_j": 0.0, "commutator": 0.0, "identity": 0.0}
    smallest = math.inf
    for _ in range(n):
        sign = _sign(ctx.rng)
        x, y = _hyper(ctx.rng, sign), _hyper(ctx.rng, sign)
        pair = gks_fiber_pair(structure_plus(x), structure_minus(y))
        sq_i, sk_i = _structure_residuals(pair.cal_i, PHASE_PAIRING)
        sq_j, sk_j = _structure_residuals(pair.cal_j, PHASE_PAIRING)
        measured = {
            "square_i": sq_i,
            "square_j": sq_j,
            "skew_i": sk_i,
            "skew_j": sk_j,
            "commutator": float(np.max(np.abs(pair.cal_i @ pair.cal_j - pair.cal_j @ pair.cal_i))),
        }
        w = ctx.rng.normal(size=8)
        form = pair.positivity_form(w)
        measured["identity"] = abs(form - 0.5 * pair.norms(w)) / max(1.0, abs(form))
        smallest = min(smallest, form / float(w @ w))
        for key, value in measured.items():
            worst[key] = max(worst[key], value)
    ok = max(worst.values()) <= ctx.tol("algebraic") and smallest > 0
    return Outcome(ok, {**worst, "min_positivity_ratio": smallest}, details={"samples": n})


@check(SuiteName.FIBER_ALGEBRA, "fiber-geometry")
def _fiber_geometry(ctx: SuiteContext) -> Outcome:
    n = ctx.count("gks_samples")
    worst = {"anticommutator": 0.0, "k_square": 0.0, "k_isometry": 0.0, "coordinates": 0.0}
    smallest_h = math.inf
    for _ in range(n):
        sheet = Sheet.PLUS if ctx.rng.random() < 0.5 else Sheet.MINUS
        geometry = fiber_geometry(structure(_hyper(ctx.rng, _sign(ctx.rng)), sheet))
        coords = ctx.rng.normal(size=2)
        k, h = geometry.kmat, geometry.h
        measured = {
            "anticommutator": geometry.fiber_tangent(coords).anticommutator_residual(),
            "k_square": float(np.max(np.abs(k @ k + np.eye(2)))),
            "k_isometry": float(np.max(np.abs(k.T @ h @ k - h))),
            "coordinates": float(np.max(np.abs(geometry.coordinates(geometry.tangent(coords)) - coords))),
        }
        for key, value in measured.items():
            worst[key] = max(worst[key], value)
        smallest_h = min(smallest_h, float(np.linalg.eigvalsh(h)[0]))
    ok = max(worst.values()) <= ctx.tol("algebraic") and smallest_h > ctx.tol("definite")
    return Outcome(ok, {**worst, "h_min_eigenvalue": smallest_h}, details={"samples": n})


# --- courant ---

PLANE = Chart(("u", "v"), ((0.5, 1.5), (0.5, 1.5)))
SPACE = Chart(("x", "y", "z"), ((0.5, 1.5), (0.5, 1.5), (0.5, 1.5)))
FOUR = Chart(("u1", "u2", "u3", "u4"), ((0.5, 1.5),) * 4)


def _symplectic_four(first: str) -> StructureField:
    return structure_from_symplectic(Form.of(FOUR, 2, {("u1", "u2"): first, ("u3", "u4"): "1"}))


def _constant_structure(chart: Chart, m: np.ndarray, label: str) -> StructureField:
    return StructureField.of(chart, [[Constant(float(x)) for x in row] for row in m], label)


def _max_form_gap(a: Form, b: Form, points) -> float:
    gap = add_forms(a, b, signs=[1, -1])
    return max((max((abs(v) for v in gap.evaluate(p).values()), default=0.0) for p in points), default=0.0)


@check(SuiteName.COURANT, "lie-calculus")
def _lie_calculus(ctx: SuiteContext) -> Outcome:
    points = SPACE.sample(ctx.rng, ctx.count("identity_vectors"))
    x = VectorField.of(SPACE, ["y*z", "x^2", "sin(x) + z"])
    one = Form.of(SPACE, 1, {"x": "y*z^2", "y": "exp(x)", "z": "x*y"})
    two = Form.of(SPACE, 2, {("x", "y"): "z^2", ("y", "z"): "x*y", ("x", "z"): "cos(y)"})
    cartan = 0.0
    for omega in (one, two):
        rhs = add_forms(interior_product(x, exterior_derivative(omega)), exterior_derivative(interior_product(x, omega)))
        cartan = max(cartan, _max_form_gap(lie_derivative_form(x, omega), rhs, points))
    dd = max(
        _max_form_gap(exterior_derivative(exterior_derivative(one)), Form(SPACE, 3, {}), points),
        _max_form_gap(exterior_derivative(exterior_derivative(Form.of(SPACE, 0, {(): "x*y^2*sin(z)"}))), Form(SPACE, 2, {}), points),
    )

    plane_points = PLANE.sample(ctx.rng, ctx.count("identity_vectors"))
    bracket = courant_bracket(Section.of(PLANE, vector=["0", "u"]), Section.of(PLANE, covector=["0", "1"]))
    expected = np.array([0.0, 0.0, 0.5, 0.0])
    example = max(float(np.max(np.abs(bracket.evaluate(p) - expected))) for p in plane_points)
    a = Section.of(PLANE, vector=["u*v", "v^2"], covector=["sin(u)", "u*v^3"])
    b = Section.of(PLANE, vector=["exp(v)", "u"], covector=["v", "u^2"])
    ab, ba = courant_bracket(a, b), courant_bracket(b, a)
    antisymmetry = max(float(np.max(np.abs(ab.evaluate(p) + ba.evaluate(p)))) for p in plane_points)

    tol = ctx.tol("algebraic")
    residuals = {"cartan": cartan, "d_squared": dd, "u_dv_bracket": example, "antisymmetry": antisymmetry}
    return Outcome(max(residuals.values()) <= tol, residuals)


@check(SuiteName.COURANT, "ad-vs-fd")
def _ad_vs_fd(ctx: SuiteContext) -> Outcome:
    step = get_settings().fd_step
    expressions = ["sin(u)*exp(v) + u^3*v", "sqrt(1 + u^2 + v^2) / (2 + cos(u*v))"]
    worst_grad, worst_hess = 0.0, 0.0
    for text in expressions:
        expr = parse_expression(text, PLANE.names)
        for point in PLANE.sample(ctx.rng, ctx.count("identity_vectors")):
            exact = expr.jet(PLANE.names, point, order=2)
            grad, hess = jets.gradient(exact, 2), jets.hessian(exact, 2)
            for m in range(2):
                plus, minus = list(point), list(point)
                plus[m] += step
                minus[m] -= step
                up = expr.jet(PLANE.names, tuple(plus))
                down = expr.jet(PLANE.names, tuple(minus))
                fd_grad = (jets.value(up) - jets.value(down)) / (2 * step)
                fd_row = (jets.gradient(up, 2) - jets.gradient(down, 2)) / (2 * step)
                worst_grad = max(worst_grad, abs(fd_grad - grad[m]) / max(1.0, abs(grad[m])))
                worst_hess = max(worst_hess, float(np.max(np.abs(fd_row - hess[m]))) / max(1.0, float(np.max(np.abs(hess[m])))))
    residuals = {"gradient": worst_grad, "hessian": worst_hess}
    return Outcome(max(residuals.values()) <= ctx.tol("fd"), residuals, details={"step": step})


@check(SuiteName.COURANT, "integrability-examples")
def _integrability_examples(ctx: SuiteContext) -> Outcome:
    flat_tol = ctx.tol("flat_nijenhuis")
    integrable = {
        "constant_complex": (structure_from_complex(PLANE, [["0", "-1"], ["1", "0"]]), PLANE),
        "varying_complex": (structure_from_complex(PLANE, [["u", "-(1 + u^2)"], ["1", "-u"]]), PLANE),
        "closed_symplectic": (_symplectic_four("1 + u1^2"), FOUR),
        "closed_b_transform": (
            b_transform_field(structure_from_complex(PLANE, [["0", "-1"], ["1", "0"]]), Form.of(PLANE, 2, {("u", "v"): "u^2 + v"})),
            PLANE,
        ),
    }
    residuals = {}
    witness = {}
    for key, (j, chart) in integrable.items():
        worst = 0.0
        for point in chart.sample(ctx.rng, 3):
            value = float(np.max(np.abs(nijenhuis_tensor(j, point))))
            if value >= worst:
                worst = value
                witness[key] = list(point)
        residuals[key] = worst

    open_form = _symplectic_four("u3")
    point = FOUR.center()
    residuals["non_closed_symplectic"] = float(np.max(np.abs(nijenhuis_tensor(open_form, point))))
    witness["non_closed_symplectic"] = list(point)

    ok = all(residuals[key] < flat_tol for key in integrable) and residuals["non_closed_symplectic"] > ctx.tol("nonflat_floor")
    return Outcome(ok, residuals, witness)


@check(SuiteName.COURANT, "closed-b-pair")
def _closed_b_pair(ctx: SuiteContext) -> Outcome:
    b = Form.of(PLANE, 2, {("u", "v"): "u*v + sin(v)"})
    i_struct, j_struct = kaehler_pair(F2, 1.0)
    pair = [
        b_transform_field(_constant_structure(PLANE, i_struct.m, "I"), b),
        b_transform_field(_constant_structure(PLANE, j_struct.m, "J"), b),
    ]
    worst_n, worst_commutator = 0.0, 0.0
    for point in PLANE.sample(ctx.rng, 3):
        (mi, _), (mj, _) = pair[0].jet(point), pair[1].jet(point)
        worst_commutator = max(worst_commutator, float(np.max(np.abs(mi @ mj - mj @ mi))))
        for j in pair:
            worst_n = max(worst_n, float(np.max(np.abs(nijenhuis_tensor(j, point)))))
    residuals = {"nijenhuis": worst_n, "commutator": worst_commutator}
    return Outcome(worst_n < ctx.tol("flat_nijenhuis") and worst_commutator <= ctx.tol("algebraic"), residuals)


@check(SuiteName.COURANT, "tensoriality")
def _tensoriality(ctx: SuiteContext) -> Outcome:
    fields_under_test = {
        "non_closed_symplectic": (_symplectic_four("u3"), FOUR),
        "varying_complex": (structure_from_complex(PLANE, [["u", "-(1 + u^2)"], ["1", "-u"]]), PLANE),
    }
    residuals = {}
    for key, (j, chart) in fields_under_test.items():
        residuals[key] = max(tensoriality_check(j, p) for p in chart.sample(ctx.rng, 2))
    return Outcome(max(residuals.values()) <= ctx.tol("tensoriality"), residuals)


@check(SuiteName.COURANT, "nijenhuis-identities")
def _nijenhuis_identities(ctx: SuiteContext) -> Outcome:
    j = _symplectic_four("u3")
    worst = {"antisymmetry": 0.0, "j_first": 0.0, "j_second": 0.0}
    sections = [
        Section.of(FOUR, vector=["u2", "1", "0", "u1*u3"], covector=["0", "u4", "1", "0"]),
        Section.of(FOUR, vector=["0", "u3^2", "1", "0"], covector=["u1", "0", "0", "u2"]),
    ]
    for point in FOUR.sample(ctx.rng, 2):
        forward = nijenhuis_field(j, sections[0], sections[1], point)
        backward = nijenhuis_field(j, sections[1], sections[0], point)
        worst["antisymmetry"] = max(worst["antisymmetry"], float(np.max(np.abs(forward + backward))))
        m = j.value(point)
        tensor = nijenhuis_tensor(j, point)
        first = np.einsum("kcb,ca->kab", tensor, m)
        second = np.einsum("kac,cb->kab", tensor, m)
        rotated = -np.einsum("km,mab->kab", m, tensor)
        worst["j_first"] = max(worst["j_first"], float(np.max(np.abs(first - rotated))))
        worst["j_second"] = max(worst["j_second"], float(np.max(np.abs(second - rotated))))
    return Outcome(max(worst.values()) <= ctx.tol("algebraic"), worst)


# --- connection ---

@check(SuiteName.CONNECTION, "torsion")
def _torsion(ctx: SuiteContext) -> Outcome:
    worst = max_torsion(ctx.spec, ctx.count("grid_size"))
    return Outcome(worst <= ctx.tol("algebraic"), {"max_torsion": worst}, details={"connection": ctx.spec.label})


@check(SuiteName.CONNECTION, "curvature-symmetries")
def _curvature_symmetries(ctx: SuiteContext) -> Outcome:
    worst = {"antisymmetry": 0.0, "hat_skew": 0.0}
    for point in ctx.base_points(ctx.count("identity_vectors")):
        x, y = ctx.rng.normal(size=2), ctx.rng.normal(size=2)
        forward, backward = curvature(ctx.spec, x, y, point), curvature(ctx.spec, y, x, point)
        worst["antisymmetry"] = max(worst["antisymmetry"], float(np.max(np.abs(forward.rho + backward.rho))))
        hat = forward.rho_hat
        worst["hat_skew"] = max(worst["hat_skew"], float(np.max(np.abs(hat.T @ PAIRING + PAIRING @ hat))))
    return Outcome(max(worst.values()) <= ctx.tol("algebraic"), worst)


@check(SuiteName.CONNECTION, "bianchi")
def _bianchi(ctx: SuiteContext) -> Outcome:
    worst = 0.0
    for point in ctx.base_points(ctx.count("identity_vectors")):
        triples = [tuple(ctx.rng.normal(size=2) for _ in range(3)) for _ in range(3)]
        worst = max(worst, bianchi_residual(ctx.spec, point, triples))
    return Outcome(worst <= ctx.tol("algebraic"), {"bianchi": worst})


@check(SuiteName.CONNECTION, "flatness")
def _flatness(ctx: SuiteContext) -> Outcome:
    report = flatness_scan(ctx.spec, ctx.count("grid_size"))
    return Outcome(
        True,
        {"max_curvature": report.max_norm},
        {"argmax": list(report.argmax)},
        {"flat": report.max_norm < ctx.tol("flatness"), "grid_points": report.points},
    )


@check(SuiteName.CONNECTION, "trace-condition")
def _trace_condition(ctx: SuiteContext) -> Outcome:
    tol = ctx.tol("algebraic")
    inconsistent = 0
    max_trace = 0.0
    trace_free_everywhere = True
    witness = {}
    for point in ctx.base_points(ctx.count("identity_vectors")):
        report = sheet_report(ctx.spec, point, ctx.rng, samples=20)
        trace_free = trace_condition(ctx.spec, point, tol)
        max_trace = max(max_trace, abs(report["trace"]))
        trace_free_everywhere = trace_free_everywhere and trace_free
        if trace_free != report["annihilates_minus"]:
            inconsistent += 1
            witness.setdefault("first_inconsistency", {"point": list(point), "report": report})
    return Outcome(
        inconsistent == 0,
        {"max_trace": max_trace, "inconsistent": float(inconsistent)},
        witness,
        {"trace_free": trace_free_everywhere},
    )


@check(SuiteName.CONNECTION, "sheet-scans")
def _sheet_scans(ctx: SuiteContext) -> Outcome:
    n = ctx.count("plus_sheet_scan")
    plus = sheet_scan(ctx.rng, Sheet.PLUS, n)
    minus = sheet_scan(ctx.rng, Sheet.MINUS, n)
    ok = (
        plus["kernel_dim"] == 1
        and plus["kernel_is_scalar"]
        and minus["kernel_dim"] == 3
        and minus["kernel_is_trace_free"]
    )
    return Outcome(ok, details={"plus": plus, "minus": minus})


# --- theorem ---

@check(SuiteName.THEOREM, "structure-invariants")
def _structure_invariants(ctx: SuiteContext) -> Outcome:
    worst = {"square_i": 0.0, "square_j": 0.0, "skew_i": 0.0, "skew_j": 0.0, "commutator": 0.0, "positivity_identity": 0.0}
    smallest = math.inf
    for point in ctx.twistor_points(ctx.count("invariant_points")):
        measured = ctx.big.invariants(point)
        smallest = min(smallest, measured.pop("positivity_min_eigenvalue"))
        measured["positivity_identity"] = ctx.big.positivity_identity(point, ctx.rng.normal(size=12))
        for key, value in measured.items():
            worst[key] = max(worst[key], value)
    ok = max(worst.values()) <= ctx.tol("algebraic") and smallest > ctx.tol("definite")
    return Outcome(ok, {**worst, "positivity_min_eigenvalue": smallest})


@check(SuiteName.THEOREM, "bracket-identity")
def _bracket_identity(ctx: SuiteContext) -> Outcome:
    worst = 0.0
    witness = {}
    for point in ctx.twistor_points():
        result = bracket_identity(ctx.big, point)
        if result["residual"] >= worst:
            worst = result["residual"]
            witness = {"point": list(point.coords), **result}
    return Outcome(worst <= ctx.tol("bracket_identity"), {"bracket_identity": worst}, witness)


@check(SuiteName.THEOREM, "integrability")
def _integrability(ctx: SuiteContext) -> Outcome:
    flat_tol, floor = ctx.tol("flat_nijenhuis"), ctx.tol("nonflat_floor")
    points = ctx.twistor_points()
    verdict = twistor_verdict(ctx.big, points)
    vanishing = verdict.vanishing(flat_tol, floor)
    trace_free = all(trace_condition(ctx.spec, p.base, ctx.tol("algebraic")) for p in points)
    vertical_ok = all(vanishing[f"{which.value}.{NijenhuisBlock.VV.value}"] for which in TwistorStructure)
    if ctx.flat:
        ok = verdict.max_residual < flat_tol
    else:
        ok = verdict.max_residual > floor
        if trace_free:
            ok = ok and vanishing["I.HxH"] is True and vanishing["I.HxV"] is True
            ok = ok and verdict.blocks["J.HxV"] > floor
        else:
            ok = ok and verdict.blocks["J.HxH"] > floor
    nonzero = sorted(key for key, value in vanishing.items() if value is False)
    return Outcome(
        ok and vertical_ok,
        dict(verdict.blocks),
        details={
            "flat": ctx.flat,
            "trace_free": trace_free,
            "verdict": "integrable" if verdict.max_residual < flat_tol else "not integrable",
            "nonzero_blocks": nonzero,
            "points": verdict.points,
        },
    )


@check(SuiteName.THEOREM, "closed-form")
def _closed_form(ctx: SuiteContext) -> Outcome:
    worst_i, worst_j = 0.0, 0.0
    witness = {}
    pairs = max(1, ctx.count("identity_vectors") // CLOSED_FORM_POINTS)
    for point in ctx.twistor_points(min(CLOSED_FORM_POINTS, ctx.count("twistor_points"))):
        tensors = {which: adapted_nijenhuis(ctx.big, which, point) for which in TwistorStructure}
        for _ in range(pairs):
            a, b = ctx.rng.normal(size=4), ctx.rng.normal(size=4)
            gap_i = closed_form_gap(ctx.big, TwistorStructure.CAL_I, a, b, point, tensors[TwistorStructure.CAL_I])
            gap_j = closed_form_gap(ctx.big, TwistorStructure.CAL_J, a, b, point, tensors[TwistorStructure.CAL_J])
            if gap_i >= worst_i:
                worst_i = gap_i
                witness = {"point": list(point.coords), "a": a.tolist(), "b": b.tolist()}
            worst_j = max(worst_j, gap_j)
    tol = ctx.tol("closed_form")
    return Outcome(worst_i <= tol and worst_j <= tol, {"closed_form_i": worst_i, "closed_form_j_gap": worst_j}, witness)


@check(SuiteName.THEOREM, "gamma-identity")
def _gamma_identity(ctx: SuiteContext) -> Outcome:
    tol = ctx.tol("closed_form")
    worst = {"residual": 0.0, "rhs": 0.0, "rhs_j_form": 0.0, "gamma": 0.0}
    trace_free = True
    per_point = max(1, ctx.count("identity_vectors") // CLOSED_FORM_POINTS)
    for point in ctx.twistor_points(min(CLOSED_FORM_POINTS, ctx.count("twistor_points"))):
        tensor = adapted_nijenhuis(ctx.big, TwistorStructure.CAL_I, point)
        trace_free = trace_free and trace_condition(ctx.spec, point.base, ctx.tol("algebraic"))
        for _ in range(per_point):
            result = gamma_identity(ctx.big, ctx.rng.normal(size=4), ctx.rng.normal(size=4), point, tensor)
            worst["residual"] = max(worst["residual"], result["residual"])
            worst["rhs"] = max(worst["rhs"], result["rhs_max"])
            worst["rhs_j_form"] = max(worst["rhs_j_form"], result["rhs_j_max"])
            worst["gamma"] = max(worst["gamma"], float(np.max(np.abs(np.concatenate([result["gamma_a"], result["gamma_ia"]])))))
    # gamma vanishes exactly when the curvature annihilates the minus sheet
    gamma_ok = worst["gamma"] <= tol if trace_free else worst["gamma"] > ctx.tol("nonflat_floor")
    ok = worst["residual"] <= tol and worst["rhs"] <= tol and gamma_ok
    return Outcome(ok, worst, details={"trace_free": trace_free})


@check(SuiteName.THEOREM, "frame-invariance")
def _frame_invariance(ctx: SuiteContext) -> Outcome:
    samples = max(3, ctx.count("twistor_points") // 3)
    result = frame_invariance(ctx.spec, ctx.rng, samples, ctx.twistor_chart, ctx.tol("flat_nijenhuis"))
    residuals = {f"original.{k}": v for k, v in result["original"].items()}
    residuals.update({f"sheared.{k}": v for k, v in result["sheared"].items()})
    return Outcome(bool(result["agree"]), residuals, details={"samples": samples})


# --- bihermitian ---

@check(SuiteName.BIHERMITIAN, "invariants")
def _bihermitian_invariants(ctx: SuiteContext) -> Outcome:
    tol = ctx.tol("bihermitian")
    worst: dict[str, float] = {}
    smallest, distinct = math.inf, math.inf
    for point in ctx.twistor_points(ctx.count("invariant_points")):
        data = bihermitian_data(ctx.big, point)
        residuals = data.residuals()
        scale = max(1.0, float(np.max(np.abs(data.g))))
        smallest = min(smallest, residuals.pop("g_min_eigenvalue"))
        distinct = min(distinct, residuals.pop("j_distinct"))
        for key, value in residuals.items():
            worst[key] = max(worst.get(key, 0.0), value / scale)

    base = ctx.config.twistor.witness.base or ctx.spec.chart.center()
    origin = ctx.twistor_chart.point((*base, 0.0, 0.0, 0.0, 0.0))
    data = bihermitian_data(ctx.big, origin)
    lift_u = horizontal_lift(ctx.big, (1.0, 0.0), origin)
    lift_v = horizontal_lift(ctx.big, (0.0, 1.0), origin)
    example = {
        "g_lift_u_unit": abs(float(lift_u @ data.g @ lift_u) - 1.0),
        "b_at_zero_b2": float(np.max(np.abs(data.b))),
        "b_lift_pair": abs(float(lift_u @ data.b @ lift_v)),
    }
    ok = max(worst.values()) <= tol and max(example.values()) <= tol and smallest > 0 and distinct > tol
    return Outcome(ok, {**worst, **example, "g_min_eigenvalue": smallest, "j_distinct": distinct})


@check(SuiteName.BIHERMITIAN, "jpm-nijenhuis")
def _jpm_nijenhuis(ctx: SuiteContext) -> Outcome:
    worst = {"j_plus": 0.0, "j_minus": 0.0}
    for point in ctx.twistor_points(min(CLOSED_FORM_POINTS, ctx.count("twistor_points"))):
        for key, value in jpm_nijenhuis(ctx.big, point).items():
            worst[key] = max(worst[key], value)
    return Outcome(max(worst.values()) <= ctx.tol("jpm_nijenhuis"), worst, details={"flat": ctx.flat})


def _witness_point(ctx: SuiteContext) -> TwistorPoint:
    witness = ctx.config.twistor.witness
    base = witness.base or ctx.spec.chart.center()
    return ctx.twistor_chart.point((*base, *witness.a, *witness.b))


@check(SuiteName.BIHERMITIAN, "witness")
def _witness(ctx: SuiteContext) -> Outcome:
    block = ctx.config.twistor.witness
    point = _witness_point(ctx)
    results = {sign: non_kahler_witness(ctx.big, point, block.x, block.y, block.w, sign) for sign in (1, -1)}
    residuals = {}
    for sign, tag in ((1, "plus"), (-1, "minus")):
        residuals[f"d_omega_{tag}"] = results[sign]["numeric"]
        residuals[f"gap_{tag}"] = results[sign]["gap"] / max(1.0, abs(results[sign]["numeric"]))
    ok = max(residuals["gap_plus"], residuals["gap_minus"]) <= ctx.tol("closed_form")
    details = {"flat": ctx.flat, "closed_form": {tag: results[s]["closed_form"] for s, tag in ((1, "plus"), (-1, "minus"))}}
    if ctx.flat:
        nonzero = min(abs(residuals["d_omega_plus"]), abs(residuals["d_omega_minus"]))
        ok = ok and nonzero > ctx.tol("witness_floor")
        details["not_kaehler"] = nonzero > ctx.tol("witness_floor")
        if block == WitnessBlock() and ctx.twistor_chart.sign == 1:
            reference = max(abs(results[s]["closed_form"] - FLAT_WITNESS) for s in (1, -1))
            residuals["reference_gap"] = reference
            ok = ok and reference <= ctx.tol("closed_form")
    return Outcome(ok, residuals, {"point": list(point.coords), "x": list(block.x), "y": list(block.y), "w": list(block.w)}, details)


@check(SuiteName.BIHERMITIAN, "witness-sampled")
def _witness_sampled(ctx: SuiteContext) -> Outcome:
    worst = 0.0
    witness = {}
    for point in ctx.twistor_points(min(CLOSED_FORM_POINTS, ctx.count("twistor_points"))):
        x, y, w = ctx.rng.normal(size=2), ctx.rng.normal(size=2), ctx.rng.normal(size=4)
        for sign in (1, -1):
            result = non_kahler_witness(ctx.big, point, x, y, w, sign)
            gap = result["gap"] / max(1.0, abs(result["numeric"]))
            if gap >= worst:
                worst = gap
                witness = {"point": list(point.coords), "sign": sign}
    return Outcome(worst <= ctx.tol("closed_form"), {"gap": worst}, witness)


@check(SuiteName.BIHERMITIAN, "db")
def _db(ctx: SuiteContext) -> Outcome:
    worst = 0.0
    for point in ctx.twistor_points(min(CLOSED_FORM_POINTS, ctx.count("twistor_points"))):
        worst = max(worst, db_norm(ctx.big, point))
    return Outcome(True, {"max_db": worst}, details={"asserted": False})
