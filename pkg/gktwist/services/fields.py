"""
Fields - tensor calculus on coordinate charts with exact derivatives.

Symbolic layer (FieldExpr components):
    VectorField, Form (degree <= 3), Section of T + T*, StructureField
    lie_bracket, exterior_derivative, interior_product, lie_derivative_form,
    courant_bracket

Numeric layer (values and Jacobians at one point):
    SectionJet, courant_at, nijenhuis_at, nijenhuis_field, nijenhuis_tensor,
    tensoriality_check, classical_nijenhuis_at, exterior_derivative_2form_at

The Courant bracket is the skew one,
    [X+xi, Y+eta] = [X, Y] + L_X eta - L_Y xi - 1/2 d(i_X eta - i_Y xi),
and the Nijenhuis tensor of a structure J is
    N(A, B) = -[A, B] - J[A, JB] - J[JA, B] + [JA, JB].
"""

import itertools
import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np

from gktwist.core.config import get_settings
from gktwist.core.errors import ChartMismatchError, DomainError, StructureError
from gktwist.models.geometry import Chart
from gktwist.services import jets
from gktwist.services.expressions import (
    ONE,
    ZERO,
    Constant,
    FieldExpr,
    Synthetic,
    add,
    as_expr,
    mul,
    neg,
    parse_expression,
    sub,
    var,
)

logger = logging.getLogger(__name__)


def _same_chart(*charts: Chart) -> Chart:
    first = charts[0]
    for other in charts[1:]:
        if other != first:
            raise ChartMismatchError(f"operands live on different charts: {first.names} vs {other.names}")
    return first


def _parse_all(chart: Chart, items) -> tuple[FieldExpr, ...]:
    return tuple(item if isinstance(item, FieldExpr) else parse_expression(str(item), chart.names) for item in items)


def _sum(terms) -> FieldExpr:
    total = ZERO
    for term in terms:
        total = add(total, term)
    return total


# --- symbolic objects ---

@dataclass(frozen=True)
class VectorField:
    chart: Chart
    components: tuple[FieldExpr, ...]

    @classmethod
    def of(cls, chart: Chart, components) -> "VectorField":
        comps = _parse_all(chart, components)
        if len(comps) != chart.dim:
            raise DomainError(f"vector field needs {chart.dim} components, got {len(comps)}")
        return cls(chart, comps)

    @classmethod
    def coordinate(cls, chart: Chart, index: int) -> "VectorField":
        return cls(chart, tuple(ONE if i == index else ZERO for i in range(chart.dim)))

    def apply(self, f: FieldExpr) -> FieldExpr:
        """X(f) = X^j d_j f."""
        return _sum(mul(x, f.diff(name)) for x, name in zip(self.components, self.chart.names))


@dataclass(frozen=True, eq=False)
class Form:
    """k-form stored by strictly increasing index tuples."""

    chart: Chart
    degree: int
    coefficients: Mapping[tuple[int, ...], FieldExpr] = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.degree <= 3:
            raise DomainError(f"forms of degree {self.degree} are not supported (k <= 3)")
        clean = {}
        for idx, expr in self.coefficients.items():
            idx = tuple(idx)
            if len(idx) != self.degree or list(idx) != sorted(set(idx)):
                raise DomainError(f"form index {idx} must be strictly increasing of length {self.degree}")
            if not as_expr(expr).is_zero:
                clean[idx] = as_expr(expr)
        object.__setattr__(self, "coefficients", clean)

    @classmethod
    def of(cls, chart: Chart, degree: int, terms: Mapping[tuple[str, ...], object]) -> "Form":
        """Build from {("u", "v"): "u^2 + v", ...}; unordered names are sorted with sign."""
        coefficients: dict[tuple[int, ...], FieldExpr] = {}
        for names, raw in terms.items():
            if isinstance(names, str):
                names = (names,)
            idx = [chart.names.index(n) for n in names]
            sign = _permutation_sign(idx)
            key = tuple(sorted(idx))
            (expr,) = _parse_all(chart, [raw])
            term = expr if sign > 0 else neg(expr)
            coefficients[key] = add(coefficients.get(key, ZERO), term)
        return cls(chart, degree, coefficients)

    def component(self, idx) -> FieldExpr:
        """Coefficient for an arbitrary index tuple (antisymmetric)."""
        if len(set(idx)) < len(idx):
            return ZERO
        expr = self.coefficients.get(tuple(sorted(idx)), ZERO)
        return expr if _permutation_sign(list(idx)) > 0 else neg(expr)

    def matrix(self) -> list[list[FieldExpr]]:
        """2-forms only: [[omega_ij]]."""
        if self.degree != 2:
            raise DomainError("matrix() is defined for 2-forms")
        d = self.chart.dim
        return [[self.component((i, j)) for j in range(d)] for i in range(d)]

    def evaluate(self, point) -> dict[tuple[int, ...], float]:
        env = dict(zip(self.chart.names, self.chart.check(point)))
        return {idx: jets.value(expr.evaluate(env)) for idx, expr in self.coefficients.items()}


def _permutation_sign(idx: list[int]) -> int:
    sign = 1
    idx = list(idx)
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign


@dataclass(frozen=True)
class Section:
    """Section X + xi of T + T*; components ordered (vector..., covector...)."""

    chart: Chart
    vector: tuple[FieldExpr, ...]
    covector: tuple[FieldExpr, ...]

    @classmethod
    def of(cls, chart: Chart, vector=None, covector=None) -> "Section":
        d = chart.dim
        vec = _parse_all(chart, vector) if vector is not None else (ZERO,) * d
        cov = _parse_all(chart, covector) if covector is not None else (ZERO,) * d
        if len(vec) != d or len(cov) != d:
            raise DomainError(f"section needs {d} vector and {d} covector components")
        return cls(chart, vec, cov)

    @classmethod
    def frame(cls, chart: Chart, index: int) -> "Section":
        """Constant section e_index of the coordinate frame (d_1..d_d, dx_1..dx_d)."""
        comps = [ONE if i == index else ZERO for i in range(2 * chart.dim)]
        return cls(chart, tuple(comps[: chart.dim]), tuple(comps[chart.dim:]))

    @property
    def components(self) -> tuple[FieldExpr, ...]:
        return self.vector + self.covector

    def vector_field(self) -> VectorField:
        return VectorField(self.chart, self.vector)

    def form(self) -> Form:
        return Form(self.chart, 1, {(i,): c for i, c in enumerate(self.covector)})

    def scaled(self, f: FieldExpr) -> "Section":
        return Section(self.chart, tuple(mul(f, c) for c in self.vector), tuple(mul(f, c) for c in self.covector))

    def jet(self, point) -> "SectionJet":
        point = self.chart.check(point)
        n = self.chart.dim
        vals = [c.jet(self.chart.names, point) for c in self.components]
        return SectionJet(
            np.array([jets.value(v) for v in vals]),
            np.array([jets.gradient(v, n) for v in vals]),
        )

    def evaluate(self, point) -> np.ndarray:
        return self.jet(point).value


# --- symbolic calculus ---

def lie_bracket(x: VectorField, y: VectorField) -> VectorField:
    chart = _same_chart(x.chart, y.chart)
    return VectorField(chart, tuple(sub(x.apply(yk), y.apply(xk)) for xk, yk in zip(x.components, y.components)))


def exterior_derivative(omega: Form) -> Form:
    """(d omega)_{i0..ik} = sum_a (-1)^a d_{i_a} omega_{i0..^i_a..ik}; degree k <= 2."""
    if omega.degree > 2:
        raise DomainError("exterior derivative of a 3-form is not stored (k <= 3)")
    chart = omega.chart
    out: dict[tuple[int, ...], FieldExpr] = {}
    for idx in itertools.combinations(range(chart.dim), omega.degree + 1):
        terms = []
        for a, i in enumerate(idx):
            rest = idx[:a] + idx[a + 1:]
            partial = omega.component(rest).diff(chart.names[i])
            terms.append(partial if a % 2 == 0 else neg(partial))
        out[idx] = _sum(terms)
    return Form(chart, omega.degree + 1, out)


def function_differential(f: FieldExpr, chart: Chart) -> Form:
    return exterior_derivative(Form(chart, 0, {(): f}))


def interior_product(x: VectorField, omega: Form) -> Form:
    """(i_X omega)_{i2..ik} = X^j omega_{j i2..ik}."""
    chart = _same_chart(x.chart, omega.chart)
    if omega.degree == 0:
        return Form(chart, 0, {})
    out = {}
    for idx in itertools.combinations(range(chart.dim), omega.degree - 1):
        out[idx] = _sum(mul(xj, omega.component((j,) + idx)) for j, xj in enumerate(x.components))
    return Form(chart, omega.degree - 1, out)


def lie_derivative_form(x: VectorField, omega: Form) -> Form:
    """(L_X omega)_I = X(omega_I) + sum_a omega_{..j..} d_{i_a} X^j (coordinate formula)."""
    chart = _same_chart(x.chart, omega.chart)
    out = {}
    for idx in itertools.combinations(range(chart.dim), omega.degree):
        terms = [x.apply(omega.component(idx))]
        for a, i in enumerate(idx):
            for j, xj in enumerate(x.components):
                swapped = idx[:a] + (j,) + idx[a + 1:]
                terms.append(mul(omega.component(swapped), xj.diff(chart.names[i])))
        out[idx] = _sum(terms)
    return Form(chart, omega.degree, out)


def add_forms(*forms: Form, signs=None) -> Form:
    chart = _same_chart(*(f.chart for f in forms))
    degree = forms[0].degree
    signs = signs or [1] * len(forms)
    out: dict[tuple[int, ...], FieldExpr] = {}
    for form, sign in zip(forms, signs):
        if form.degree != degree:
            raise DomainError("cannot add forms of different degree")
        for idx, expr in form.coefficients.items():
            out[idx] = add(out.get(idx, ZERO), mul(Constant(float(sign)), expr))
    return Form(chart, degree, out)


def courant_bracket(a: Section, b: Section) -> Section:
    chart = _same_chart(a.chart, b.chart)
    x, y = a.vector_field(), b.vector_field()
    xi, eta = a.form(), b.form()
    vector = lie_bracket(x, y).components
    iota = sub(interior_product(x, eta).component(()), interior_product(y, xi).component(()))
    half_d = function_differential(mul(Constant(0.5), iota), chart)
    cov = add_forms(lie_derivative_form(x, eta), lie_derivative_form(y, xi), half_d, signs=[1, -1, -1])
    return Section(chart, vector, tuple(cov.component((i,)) for i in range(chart.dim)))


# --- structure fields ---

@dataclass(frozen=True, eq=False)
class StructureField:
    """(2d)x(2d) matrix of FieldExprs acting on section components.

    `evaluator`, when present, computes the whole matrix from a Jet
    environment in one pass; entries are then Synthetic views of it.
    """

    chart: Chart
    matrix: tuple[tuple[FieldExpr, ...], ...]
    evaluator: Callable[[Mapping[str, jets.Scalar]], np.ndarray] | None = None
    label: str = "J"

    @classmethod
    def of(cls, chart: Chart, rows, label: str = "J") -> "StructureField":
        parsed = tuple(_parse_all(chart, row) for row in rows)
        size = 2 * chart.dim
        if len(parsed) != size or any(len(r) != size for r in parsed):
            raise DomainError(f"structure field on a {chart.dim}-chart must be {size}x{size}")
        return cls(chart, parsed, label=label)

    @classmethod
    def from_evaluator(cls, chart: Chart, evaluator, label: str) -> "StructureField":
        size = 2 * chart.dim

        def entry(i, j):
            return Synthetic(lambda env: evaluator(env)[i, j], chart.names, f"{label}[{i},{j}]")

        rows = tuple(tuple(entry(i, j) for j in range(size)) for i in range(size))
        return cls(chart, rows, evaluator, label)

    @property
    def size(self) -> int:
        return 2 * self.chart.dim

    def jet(self, point) -> tuple[np.ndarray, np.ndarray]:
        """(M, dM) with dM[k, j, m] = d_m M[k, j]."""
        point = self.chart.check(point)
        env = dict(zip(self.chart.names, jets.variables(list(point), order=1)))
        if self.evaluator is not None:
            m = self.evaluator(env)
        else:
            m = np.empty((self.size, self.size), dtype=object)
            for i, row in enumerate(self.matrix):
                for j, expr in enumerate(row):
                    m[i, j] = expr.evaluate(env)
        return jets.values_of(m), jets.gradients_of(m, self.chart.dim)

    def value(self, point) -> np.ndarray:
        return self.jet(point)[0]

    def apply(self, section: Section) -> Section:
        """Symbolic J(A); only for expression-matrix fields."""
        _same_chart(self.chart, section.chart)
        comps = section.components
        out = tuple(_sum(mul(entry, c) for entry, c in zip(row, comps)) for row in self.matrix)
        d = self.chart.dim
        return Section(self.chart, out[:d], out[d:])

    def residuals(self, point) -> dict[str, float]:
        m = self.value(point)
        g = pairing_matrix(self.chart.dim)
        return {
            "square": float(np.max(np.abs(m @ m + np.eye(self.size)))),
            "skew": float(np.max(np.abs(m.T @ g + g @ m))),
        }

    def require_structure(self, point, tol: float | None = None) -> None:
        tol = get_settings().tol_algebraic if tol is None else tol
        res = self.residuals(point)
        if max(res.values()) > tol:
            raise StructureError(f"{self.label} is not a generalized almost complex structure at {point}: {res}")


def pairing_matrix(d: int) -> np.ndarray:
    zero, eye = np.zeros((d, d)), np.eye(d)
    return 0.5 * np.block([[zero, eye], [eye, zero]])


def _expr_block(top_left, top_right, bottom_left, bottom_right):
    return tuple(tuple(a) + tuple(b) for a, b in zip(top_left, top_right)) + tuple(
        tuple(a) + tuple(b) for a, b in zip(bottom_left, bottom_right)
    )


def _expr_matmul(a, b):
    n, m = len(a), len(b[0])
    return tuple(tuple(_sum(mul(a[i][k], b[k][j]) for k in range(len(b))) for j in range(m)) for i in range(n))


def structure_from_complex(chart: Chart, k_rows) -> StructureField:
    """J = K on T and -K^T on T*."""
    d = chart.dim
    k = tuple(_parse_all(chart, row) for row in k_rows)
    zero = tuple(tuple(ZERO for _ in range(d)) for _ in range(d))
    minus_kt = tuple(tuple(neg(k[j][i]) for j in range(d)) for i in range(d))
    return StructureField(chart, _expr_block(k, zero, zero, minus_kt), label="J_K")


def structure_from_symplectic(omega: Form) -> StructureField:
    """X -> i_X omega on T, -(i omega)^-1 on T*."""
    if omega.degree != 2:
        raise DomainError("symplectic structure needs a 2-form")
    chart = omega.chart
    d = chart.dim
    lower = tuple(tuple(omega.component((j, i)) for j in range(d)) for i in range(d))  # (i_X omega)_i = X^j omega_ji

    def evaluator(env):
        low = np.empty((d, d), dtype=object)
        for i in range(d):
            for j in range(d):
                low[i, j] = lower[i][j].evaluate(env)
        m = jets.obj_zeros(2 * d)
        m[d:, :d] = low
        m[:d, d:] = -jets.inverse(low)
        return m

    return StructureField.from_evaluator(chart, evaluator, "J_omega")


def b_transform_field(j: StructureField, b: Form) -> StructureField:
    """e^B J e^-B with e^B (X + xi) = X + xi + i_X B."""
    chart = _same_chart(j.chart, b.chart)
    if b.degree != 2:
        raise DomainError("B-transform needs a 2-form")
    d = chart.dim
    eye = tuple(tuple(ONE if i == k else ZERO for k in range(d)) for i in range(d))
    zero = tuple(tuple(ZERO for _ in range(d)) for _ in range(d))
    shear = tuple(tuple(b.component((k, i)) for k in range(d)) for i in range(d))
    shear_neg = tuple(tuple(neg(e) for e in row) for row in shear)
    forward = _expr_block(eye, zero, shear, eye)
    backward = _expr_block(eye, zero, shear_neg, eye)
    if j.evaluator is not None:
        raise DomainError("B-transform is defined for expression-matrix structure fields")
    return StructureField(chart, _expr_matmul(_expr_matmul(forward, j.matrix), backward), label=f"e^B {j.label}")


# --- numeric layer ---

@dataclass(frozen=True, eq=False)
class SectionJet:
    value: np.ndarray  # (2d,)
    jac: np.ndarray  # (2d, d): jac[k, m] = d_m A^k

    @classmethod
    def constant(cls, vec, d: int) -> "SectionJet":
        vec = np.asarray(vec, dtype=float)
        return cls(vec, np.zeros((vec.shape[0], d)))

    def scaled(self, f_val: float, f_grad: np.ndarray) -> "SectionJet":
        return SectionJet(f_val * self.value, f_val * self.jac + np.outer(self.value, f_grad))


def apply_at(m: np.ndarray, dm: np.ndarray, a: SectionJet) -> SectionJet:
    """Jet of J(A) from the jets of J and A."""
    return SectionJet(m @ a.value, np.einsum("kjm,j->km", dm, a.value) + m @ a.jac)


def courant_at(a: SectionJet, b: SectionJet, d: int) -> np.ndarray:
    x, xi = a.value[:d], a.value[d:]
    y, eta = b.value[:d], b.value[d:]
    dx, dxi = a.jac[:d], a.jac[d:]
    dy, deta = b.jac[:d], b.jac[d:]
    vector = dy @ x - dx @ y
    lie_x_eta = deta @ x + dx.T @ eta
    lie_y_xi = dxi @ y + dy.T @ xi
    d_iota_x_eta = dx.T @ eta + deta.T @ x
    d_iota_y_xi = dy.T @ xi + dxi.T @ y
    covector = lie_x_eta - lie_y_xi - 0.5 * (d_iota_x_eta - d_iota_y_xi)
    return np.concatenate([vector, covector])


def nijenhuis_at(m: np.ndarray, dm: np.ndarray, a: SectionJet, b: SectionJet) -> np.ndarray:
    d = dm.shape[2]
    ja, jb = apply_at(m, dm, a), apply_at(m, dm, b)
    return (
        -courant_at(a, b, d)
        - m @ courant_at(a, jb, d)
        - m @ courant_at(ja, b, d)
        + courant_at(ja, jb, d)
    )


def nijenhuis_field(j: StructureField, a: Section, b: Section, point) -> np.ndarray:
    """N(A, B) at `point` for the structure field J."""
    _same_chart(j.chart, a.chart, b.chart)
    m, dm = j.jet(point)
    _check_matrix_structure(j, m, point)
    return nijenhuis_at(m, dm, a.jet(point), b.jet(point))


def _check_matrix_structure(j: StructureField, m: np.ndarray, point) -> None:
    tol = get_settings().tol_algebraic
    g = pairing_matrix(j.chart.dim)
    square = float(np.max(np.abs(m @ m + np.eye(m.shape[0]))))
    skew = float(np.max(np.abs(m.T @ g + g @ m)))
    if max(square, skew) > tol:
        raise StructureError(
            f"{j.label} violates the structure invariant at {point} (square {square:.3e}, skew {skew:.3e})"
        )


def nijenhuis_tensor_at(m: np.ndarray, dm: np.ndarray) -> np.ndarray:
    """N[:, a, b] = N(e_a, e_b) on the coordinate frame; antisymmetric in (a, b)."""
    size, d = m.shape[0], dm.shape[2]
    eye = np.eye(size)
    frame = [SectionJet.constant(eye[i], d) for i in range(size)]
    out = np.zeros((size, size, size))
    for a, b in itertools.combinations(range(size), 2):
        value = nijenhuis_at(m, dm, frame[a], frame[b])
        out[:, a, b] = value
        out[:, b, a] = -value
    return out


def nijenhuis_tensor(j: StructureField, point) -> np.ndarray:
    m, dm = j.jet(point)
    _check_matrix_structure(j, m, point)
    return nijenhuis_tensor_at(m, dm)


def tensoriality_check(j: StructureField, point, f: FieldExpr | None = None) -> float:
    """max over frame pairs of |N(fA, B) - N(A, B)| at p for f(p) = 1.

    The default f is 1 + (x_1 - x_1(p)) in the first chart coordinate.
    """
    chart = j.chart
    point = chart.check(point)
    if f is None:
        f = add(ONE, sub(var(chart.names[0]), Constant(point[0])))
    f_jet = f.jet(chart.names, point)
    f_val, f_grad = jets.value(f_jet), jets.gradient(f_jet, chart.dim)
    if abs(f_val - 1.0) > 1e-12:
        raise DomainError(f"tensoriality check needs f(p) = 1, got {f_val}")
    m, dm = j.jet(point)
    eye = np.eye(j.size)
    worst = 0.0
    for a, b in itertools.product(range(j.size), repeat=2):
        sa = SectionJet.constant(eye[a], chart.dim)
        sb = SectionJet.constant(eye[b], chart.dim)
        plain = nijenhuis_at(m, dm, sa, sb)
        scaled = nijenhuis_at(m, dm, sa.scaled(f_val, f_grad), sb)
        worst = max(worst, float(np.max(np.abs(scaled - plain))))
    return worst


def classical_nijenhuis_at(j: np.ndarray, dj: np.ndarray) -> np.ndarray:
    """N^k_ij = J^m_i d_m J^k_j - J^m_j d_m J^k_i - J^k_m (d_i J^m_j - d_j J^m_i)."""
    first = np.einsum("mi,kjm->kij", j, dj)
    second = first.transpose(0, 2, 1)
    third = np.einsum("km,mji->kij", j, dj) - np.einsum("km,mij->kij", j, dj)
    return first - second - third


def exterior_derivative_2form_at(d_omega: np.ndarray) -> np.ndarray:
    """Cyclic sum (d omega)_ijk = d_i omega_jk + d_j omega_ki + d_k omega_ij from d_omega[j, k, i] = d_i omega_jk."""
    return (
        np.einsum("jki->ijk", d_omega)
        + np.einsum("kij->ijk", d_omega)
        + np.einsum("ijk->ijk", d_omega)
    )
