"""
Connection - affine connections on a 2-dimensional chart.

Gamma[k][i][j] is the coefficient in nabla_{d_i} d_j = Gamma^k_ij d_k.
Curvature uses R(X, Y) = nabla_[X,Y] - [nabla_X, nabla_Y], the negative of
the usual convention; on coordinate fields

    rho(d_u, d_v) = -(d_u G_v - d_v G_u + [G_u, G_v]),   (G_i)_kl = Gamma^k_il.

The induced action on T + T* is rho on vectors and -rho^T on covectors,
and on endomorphisms s of T + T* it is s -> [rho_hat, s].
"""

import logging
from dataclasses import dataclass

import numpy as np

from gktwist.core.config import get_settings
from gktwist.core.errors import DomainError
from gktwist.models.algebra import Hyper3
from gktwist.models.geometry import Chart, CurvatureValue
from gktwist.models.models import Sheet
from gktwist.services import jets
from gktwist.services.expressions import (
    ZERO,
    Constant,
    FieldExpr,
    add,
    div,
    mul,
    parse_expression,
    sub,
    var,
)
from gktwist.services.gcalg import plus_kernel, minus_kernel

logger = logging.getLogger(__name__)

Gamma = tuple[tuple[tuple[FieldExpr, FieldExpr], tuple[FieldExpr, FieldExpr]], ...]


def _sum(terms) -> FieldExpr:
    total = ZERO
    for term in terms:
        total = add(total, term)
    return total


def _half(e: FieldExpr) -> FieldExpr:
    return mul(Constant(0.5), e)


@dataclass(frozen=True, eq=False)
class ConnectionSpec:
    chart: Chart
    gamma: Gamma
    label: str = "custom"

    def __post_init__(self):
        if self.chart.dim != 2:
            raise DomainError(f"connections are defined on 2-dimensional charts, got {self.chart.dim}")
        if len(self.gamma) != 2 or any(len(row) != 2 or any(len(c) != 2 for c in row) for row in self.gamma):
            raise DomainError("Gamma must be a 2x2x2 array")

    # --- constructors ---

    @classmethod
    def from_gamma(cls, chart: Chart, gamma, label: str = "gamma") -> "ConnectionSpec":
        """gamma[k][i][j] given as expression strings or FieldExprs."""
        parsed = tuple(
            tuple(
                tuple(g if isinstance(g, FieldExpr) else parse_expression(str(g), chart.names) for g in row)
                for row in block
            )
            for block in gamma
        )
        return cls(chart, parsed, label)

    @classmethod
    def flat(cls, chart: Chart) -> "ConnectionSpec":
        zero = ((ZERO, ZERO), (ZERO, ZERO))
        return cls(chart, (zero, zero), "flat")

    @classmethod
    def from_metric(cls, chart: Chart, e, f, g, label: str = "levi-civita") -> "ConnectionSpec":
        """Levi-Civita connection of E du^2 + 2F du dv + G dv^2."""
        metric_e, metric_f, metric_g = (
            x if isinstance(x, FieldExpr) else parse_expression(str(x), chart.names) for x in (e, f, g)
        )
        metric = ((metric_e, metric_f), (metric_f, metric_g))
        det = sub(mul(metric_e, metric_g), mul(metric_f, metric_f))
        inverse = (
            (div(metric_g, det), div(mul(Constant(-1.0), metric_f), det)),
            (div(mul(Constant(-1.0), metric_f), det), div(metric_e, det)),
        )
        names = chart.names

        def christoffel(k, i, j):
            terms = []
            for l in range(2):
                bracket = sub(
                    add(metric[l][j].diff(names[i]), metric[l][i].diff(names[j])),
                    metric[i][j].diff(names[l]),
                )
                terms.append(mul(inverse[k][l], bracket))
            return _half(_sum(terms))

        gamma = tuple(tuple(tuple(christoffel(k, i, j) for j in range(2)) for i in range(2)) for k in range(2))
        return cls(chart, gamma, label)

    @classmethod
    def from_chart_map(cls, chart: Chart, mapping, label: str = "pullback") -> "ConnectionSpec":
        """Flat connection of the target pulled back by `mapping` (two expressions in the chart names)."""
        return cls.flat(chart).pullback(mapping, chart, label)

    def pullback(self, mapping, chart: Chart, label: str | None = None) -> "ConnectionSpec":
        """Gamma'^k_ij = (Dphi^-1)^k_m [d_i d_j phi^m + Gamma^m_ab(phi) d_i phi^a d_j phi^b].

        `mapping` expresses this spec's coordinates through the coordinates of `chart`.
        """
        phi = tuple(m if isinstance(m, FieldExpr) else parse_expression(str(m), chart.names) for m in mapping)
        if len(phi) != 2:
            raise DomainError("chart map needs two component expressions")
        names = chart.names
        substitution = dict(zip(self.chart.names, phi))
        moved = [[[g.substitute(substitution) for g in row] for row in block] for block in self.gamma]
        jac = [[phi[m].diff(names[i]) for i in range(2)] for m in range(2)]
        det = sub(mul(jac[0][0], jac[1][1]), mul(jac[0][1], jac[1][0]))
        inv = (
            (div(jac[1][1], det), div(mul(Constant(-1.0), jac[0][1]), det)),
            (div(mul(Constant(-1.0), jac[1][0]), det), div(jac[0][0], det)),
        )

        def second(m, i, j):
            direct = phi[m].diff(names[i]).diff(names[j])
            carried = _sum(
                mul(moved[m][a][b], mul(jac[a][i], jac[b][j])) for a in range(2) for b in range(2)
            )
            return add(direct, carried)

        gamma = tuple(
            tuple(tuple(_sum(mul(inv[k][m], second(m, i, j)) for m in range(2)) for j in range(2)) for i in range(2))
            for k in range(2)
        )
        return ConnectionSpec(chart, gamma, label or f"{self.label}-pullback")

    def sheared(self) -> "ConnectionSpec":
        """Re-coordinatize by (u, v) -> (u + v^2, v) on the largest chart mapped inside this one."""
        (lo_u, hi_u), (lo_v, hi_v) = self.chart.bounds
        squares = [lo_v**2, hi_v**2] + ([0.0] if lo_v < 0 < hi_v else [])
        new_u = (lo_u - min(squares), hi_u - max(squares))
        if new_u[1] <= new_u[0]:
            raise DomainError(f"the chart {self.chart.bounds} has no sheared sub-chart")
        chart = Chart(self.chart.names, (new_u, (lo_v, hi_v)))
        u, v = (var(n) for n in chart.names)
        return self.pullback((add(u, mul(v, v)), v), chart, f"{self.label}-sheared")

    # --- evaluation ---

    def gamma_env(self, env) -> np.ndarray:
        """Object array [k, i, j] evaluated on floats or Jets."""
        out = np.empty((2, 2, 2), dtype=object)
        for k in range(2):
            for i in range(2):
                for j in range(2):
                    out[k, i, j] = self.gamma[k][i][j].evaluate(env)
        return out

    def gamma_at(self, point) -> tuple[np.ndarray, np.ndarray]:
        """(Gamma[k, i, j], dGamma[k, i, j, m]) at a chart point."""
        point = self.chart.check(point)
        env = dict(zip(self.chart.names, jets.variables(list(point), order=1)))
        values = self.gamma_env(env)
        return jets.values_of(values), jets.gradients_of(values, 2)

    def connection_matrix(self, x, point) -> np.ndarray:
        """omega(X)_kj = X^i Gamma^k_ij."""
        gam, _ = self.gamma_at(point)
        return np.einsum("i,kij->kj", np.asarray(x, dtype=float), gam)


# --- torsion and curvature ---

def torsion(spec: ConnectionSpec, point) -> np.ndarray:
    """T^k_ij = Gamma^k_ij - Gamma^k_ji."""
    gam, _ = spec.gamma_at(point)
    return gam - gam.transpose(0, 2, 1)


def max_torsion(spec: ConnectionSpec, grid_size: int | None = None) -> float:
    n = grid_size or get_settings().grid_size
    return max(float(np.max(np.abs(torsion(spec, p)))) for p in spec.chart.grid(n))


def curvature_uv(spec: ConnectionSpec, point) -> np.ndarray:
    gam, dgam = spec.gamma_at(point)
    g_u, g_v = gam[:, 0, :], gam[:, 1, :]
    return -(dgam[:, 1, :, 0] - dgam[:, 0, :, 1] + g_u @ g_v - g_v @ g_u)


def curvature(spec: ConnectionSpec, x, y, point) -> CurvatureValue:
    """rho(X, Y) at `point`; bilinear and antisymmetric, so rho(X, Y) = det[X, Y] rho(d_u, d_v)."""
    point = spec.chart.check(point)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    area = x[0] * y[1] - x[1] * y[0]
    return CurvatureValue(point, area * curvature_uv(spec, point))


def curvature_action(value: CurvatureValue, s: np.ndarray) -> np.ndarray:
    """R(X, Y) s = [rho_hat, s] for an endomorphism s of T + T*."""
    hat = value.rho_hat
    return hat @ s - s @ hat


def bianchi_residual(spec: ConnectionSpec, point, vectors) -> float:
    """max |rho(X,Y)Z + rho(Y,Z)X + rho(Z,X)Y| over the given triples."""
    worst = 0.0
    for x, y, z in vectors:
        total = (
            curvature(spec, x, y, point).rho @ z
            + curvature(spec, y, z, point).rho @ x
            + curvature(spec, z, x, point).rho @ y
        )
        worst = max(worst, float(np.max(np.abs(total))))
    return worst


def trace_condition(spec: ConnectionSpec, point, tol: float | None = None) -> bool:
    """True iff rho is trace-free at `point`, i.e. R(X, Y) J = 0 on the minus sheet."""
    tol = get_settings().tol_algebraic if tol is None else tol
    return abs(float(np.trace(curvature_uv(spec, point)))) <= tol


# --- sheet characterization ---

def _sheet_samples(rng: np.random.Generator, n: int, sheet: Sheet) -> list[np.ndarray]:
    out = []
    for a2, a3 in rng.uniform(-2.0, 2.0, size=(n, 2)):
        x = Hyper3.from_chart(float(a2), float(a3))
        kernel = plus_kernel if sheet == Sheet.PLUS else minus_kernel
        out.append(jets.values_of(kernel(x.x1, x.x2, x.x3)))
    return out


def sheet_report(spec: ConnectionSpec, point, rng: np.random.Generator, samples: int = 50) -> dict:
    """How R(d_u, d_v) acts on sampled structures of both sheets at `point`."""
    value = curvature(spec, (1.0, 0.0), (0.0, 1.0), point)
    tol = get_settings().tol_algebraic
    worst = {}
    for sheet in (Sheet.PLUS, Sheet.MINUS):
        worst[sheet] = max(
            float(np.max(np.abs(curvature_action(value, s)))) for s in _sheet_samples(rng, samples, sheet)
        )
    return {
        "trace": value.trace,
        "trace_free": abs(value.trace) <= tol,
        "plus_max_commutator": worst[Sheet.PLUS],
        "minus_max_commutator": worst[Sheet.MINUS],
        "annihilates_plus": worst[Sheet.PLUS] <= tol,
        "annihilates_minus": worst[Sheet.MINUS] <= tol,
    }


def sheet_scan(rng: np.random.Generator, sheet: Sheet = Sheet.PLUS, samples: int | None = None) -> dict:
    """Kernel of rho -> ([rho_hat, S])_S over sampled structures S of one sheet.

    The map is linear in rho in gl(2); the kernel is read off a singular
    value decomposition of the stacked commutators.
    """
    samples = samples or get_settings().plus_sheet_scan
    structures = _sheet_samples(rng, samples, sheet)
    columns = []
    basis = []
    for a in range(2):
        for b in range(2):
            rho = np.zeros((2, 2))
            rho[a, b] = 1.0
            basis.append(rho)
            value = CurvatureValue((0.0, 0.0), rho)
            columns.append(np.concatenate([curvature_action(value, s).ravel() for s in structures]))
    matrix = np.column_stack(columns)
    _, singular, vt = np.linalg.svd(matrix, full_matrices=False)
    cutoff = get_settings().tol_algebraic * max(1.0, float(singular[0]))
    kernel = [np.einsum("r,rab->ab", vt[i], np.array(basis)) for i in range(len(singular)) if singular[i] <= cutoff]
    logger.debug(f"{sheet.value}-sheet scan over {samples} structures: singular values {singular}")
    return {
        "sheet": sheet.value,
        "samples": samples,
        "rank": int(np.sum(singular > cutoff)),
        "kernel_dim": len(kernel),
        "kernel": [k.tolist() for k in kernel],
        "kernel_is_scalar": all(abs(k[0, 1]) <= cutoff and abs(k[1, 0]) <= cutoff and abs(k[0, 0] - k[1, 1]) <= cutoff for k in kernel),
        "kernel_is_trace_free": all(abs(np.trace(k)) <= cutoff for k in kernel),
    }


@dataclass(frozen=True)
class FlatnessReport:
    max_norm: float
    argmax: tuple[float, ...]
    points: int
    flat: bool


def flatness_scan(spec: ConnectionSpec, grid=None) -> FlatnessReport:
    """max over the grid of |rho(d_u, d_v)|; `grid` is a point list or a per-axis count."""
    settings = get_settings()
    if grid is None:
        grid = settings.grid_size
    points = spec.chart.grid(grid) if isinstance(grid, int) else [spec.chart.check(p) for p in grid]
    if not points:
        raise DomainError("empty grid")
    norms = [float(np.max(np.abs(curvature_uv(spec, p)))) for p in points]
    idx = int(np.argmax(norms))
    report = FlatnessReport(norms[idx], points[idx], len(points), norms[idx] < settings.tol_flatness)
    logger.info(f"flatness scan of {spec.label}: max |rho| = {report.max_norm:.3e} over {report.points} points")
    return report
