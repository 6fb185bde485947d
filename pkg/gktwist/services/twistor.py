"""
Twistor - the bundle P of positive pairs (I, J) over a 2-chart.

Coordinates on P are (u, v, a2, a3, b2, b3): the base point and the sheet
charts of I in G+ and J in G-. Sections of TP + T*P are ordered

    (d_u, d_v, d_a2, d_a3, d_b2, d_b3, du, dv, da2, da3, db2, db3).

The connection splits TP into horizontal lifts H and the vertical fibers
V. In the adapted frame (H, V, H*, V*) the structures are block diagonal:
I (resp. J) on H + H*, and the fiber pair operators on V + V*. The
change of frame E = diag(P, P^-T) with P = [[1, 0], [L, 1]] carries them
to coordinates, where L holds the fiber velocities of the lifts.

Every matrix is assembled by `twistor_kernel`, which runs on floats or
Jets, so brute-force Nijenhuis evaluation differentiates the same code
that builds the structures.
"""

import logging
from dataclasses import dataclass, fields, replace
from functools import cached_property

import numpy as np

from gktwist.core.config import get_settings
from gktwist.core.errors import DomainError, TorsionError
from gktwist.models.geometry import FIBER_NAMES, BiHermitianData, TwistorChart, TwistorPoint
from gktwist.models.models import NijenhuisBlock, Sheet, TwistorStructure
from gktwist.services import jets
from gktwist.services.connection import ConnectionSpec, curvature, curvature_action, curvature_uv, max_torsion
from gktwist.services.fields import (
    Section,
    StructureField,
    classical_nijenhuis_at,
    exterior_derivative_2form_at,
    nijenhuis_field,
    nijenhuis_tensor_at,
    pairing_matrix,
)
from gktwist.services.gcalg import (
    fiber_kernel,
    gks_kernel,
    minus_kernel,
    plus_kernel,
    tangent_coordinates_kernel,
)

logger = logging.getLogger(__name__)

H_IDX = [0, 1, 6, 7]
V_IDX = [2, 3, 4, 5, 8, 9, 10, 11]


@dataclass(frozen=True, eq=False)
class TwistorFrame:
    """Everything the structures need at one point; arrays hold floats or Jets."""

    x: tuple
    y: tuple
    i4: np.ndarray
    j4: np.ndarray
    plus_basis: tuple
    minus_basis: tuple
    hp: np.ndarray
    kp: np.ndarray
    hm: np.ndarray
    km: np.ndarray
    cal_i: np.ndarray
    cal_j: np.ndarray
    lift: np.ndarray  # 4x2: fiber velocities of d_u^h, d_v^h
    e: np.ndarray
    e_inv: np.ndarray
    big_i: np.ndarray
    big_j: np.ndarray

    def evaluated(self) -> "TwistorFrame":
        changes = {}
        for f in fields(self):
            item = getattr(self, f.name)
            if isinstance(item, np.ndarray):
                changes[f.name] = jets.values_of(item)
            elif f.name in ("x", "y"):
                changes[f.name] = tuple(jets.value(c) for c in item)
            else:
                changes[f.name] = tuple(jets.values_of(c) for c in item)
        return replace(self, **changes)

    def structure(self, which: TwistorStructure) -> np.ndarray:
        return self.big_i if which == TwistorStructure.CAL_I else self.big_j


def _adapted(horizontal: np.ndarray, vertical: np.ndarray) -> np.ndarray:
    m = jets.obj_zeros(12)
    m[np.ix_(H_IDX, H_IDX)] = horizontal
    m[np.ix_(V_IDX, V_IDX)] = vertical
    return m


def _connection_hat(gam: np.ndarray, i: int) -> np.ndarray:
    omega = gam[:, i, :]
    out = jets.obj_zeros(4)
    out[0:2, 0:2] = omega
    out[2:4, 2:4] = -omega.T
    return out


def twistor_kernel(spec: ConnectionSpec, env, sign: int) -> TwistorFrame:
    a2, a3, b2, b3 = (env[n] for n in FIBER_NAMES)
    x = (sign * jets.sqrt(1.0 + a2 * a2 + a3 * a3), a2, a3)
    y = (sign * jets.sqrt(1.0 + b2 * b2 + b3 * b3), b2, b3)
    i4, j4 = plus_kernel(*x), minus_kernel(*y)
    plus_basis, hp, kp = fiber_kernel(*x, Sheet.PLUS)
    minus_basis, hm, km = fiber_kernel(*y, Sheet.MINUS)
    cal_i, cal_j = gks_kernel(kp, hp, km, hm)

    gam = spec.gamma_env(env)
    lift = jets.obj_zeros(4, 2)
    for i in range(2):
        hat = _connection_hat(gam, i)
        lift[0:2, i] = tangent_coordinates_kernel(-(hat @ i4 - i4 @ hat), Sheet.PLUS)
        lift[2:4, i] = tangent_coordinates_kernel(-(hat @ j4 - j4 @ hat), Sheet.MINUS)

    p, p_inv_t, p_inv, p_t = (jets.obj_eye(6) for _ in range(4))
    p[2:6, 0:2] = lift
    p_inv[2:6, 0:2] = -lift
    p_t[0:2, 2:6] = lift.T
    p_inv_t[0:2, 2:6] = -lift.T
    e, e_inv = jets.obj_zeros(12), jets.obj_zeros(12)
    e[0:6, 0:6], e[6:12, 6:12] = p, p_inv_t
    e_inv[0:6, 0:6], e_inv[6:12, 6:12] = p_inv, p_t

    big_i = e @ _adapted(i4, cal_i) @ e_inv
    big_j = e @ _adapted(j4, cal_j) @ e_inv
    return TwistorFrame(x, y, i4, j4, plus_basis, minus_basis, hp, kp, hm, km, cal_i, cal_j, lift, e, e_inv, big_i, big_j)


def require_torsion_free(spec: ConnectionSpec) -> None:
    worst = max_torsion(spec)
    if worst > get_settings().tol_algebraic:
        raise TorsionError(f"connection {spec.label!r} has torsion (max |T| = {worst:.3e}); the twistor structures need a torsion-free connection")


@dataclass(frozen=True, eq=False)
class BigStructure:
    """The pair (cal I, cal J) on a twistor chart for a torsion-free connection."""

    spec: ConnectionSpec
    chart: TwistorChart

    def _env(self, point: TwistorPoint, order: int):
        coords = self.chart.full.check(point.validate().coords)
        if order == 0:
            return dict(zip(self.chart.names, coords))
        return dict(zip(self.chart.names, jets.variables(list(coords), order)))

    def frame(self, point: TwistorPoint) -> TwistorFrame:
        return twistor_kernel(self.spec, self._env(point, 0), self.chart.sign).evaluated()

    def frame_jet(self, point: TwistorPoint) -> TwistorFrame:
        return twistor_kernel(self.spec, self._env(point, 1), self.chart.sign)

    def jet(self, which: TwistorStructure, point: TwistorPoint) -> tuple[np.ndarray, np.ndarray]:
        m = self.frame_jet(point).structure(which)
        return jets.values_of(m), jets.gradients_of(m, 6)

    @cached_property
    def cal_i(self) -> StructureField:
        return self.field(TwistorStructure.CAL_I)

    @cached_property
    def cal_j(self) -> StructureField:
        return self.field(TwistorStructure.CAL_J)

    def field(self, which: TwistorStructure) -> StructureField:
        spec, sign = self.spec, self.chart.sign
        return StructureField.from_evaluator(
            self.chart.full,
            lambda env: twistor_kernel(spec, env, sign).structure(which),
            f"cal {which.value}",
        )

    def invariants(self, point: TwistorPoint) -> dict[str, float]:
        f = self.frame(point)
        g = pairing_matrix(6)
        eye = np.eye(12)
        gram = f.big_i.T @ g @ f.big_j
        return {
            "square_i": float(np.max(np.abs(f.big_i @ f.big_i + eye))),
            "square_j": float(np.max(np.abs(f.big_j @ f.big_j + eye))),
            "skew_i": float(np.max(np.abs(f.big_i.T @ g + g @ f.big_i))),
            "skew_j": float(np.max(np.abs(f.big_j.T @ g + g @ f.big_j))),
            "commutator": float(np.max(np.abs(f.big_i @ f.big_j - f.big_j @ f.big_i))),
            "positivity_min_eigenvalue": float(np.linalg.eigvalsh(0.5 * (gram + gram.T))[0]),
        }

    def positivity_identity(self, point: TwistorPoint, adapted: np.ndarray) -> float:
        """|<I w, J w> - (<IA, JA> + 1/2 (|U|^2 + |V|^2 + |phi|^2 + |psi|^2))| for w = A^h + W + Theta.

        The pairing is <X + xi, Y + eta> = 1/2 (xi(Y) + eta(X)) on every
        T + T*, the fiber one included, so the fiber norms |.|_h carry that
        factor 1/2. With the unhalved pairing on the fiber the identity
        reads <IA, JA> + |U|^2 + |V|^2 + |phi|^2 + |psi|^2.
        """
        f = self.frame(point)
        w = f.e @ adapted
        g = pairing_matrix(6)
        lhs = float((f.big_i @ w) @ g @ (f.big_j @ w))
        a = adapted[H_IDX]
        fiber = adapted[V_IDX]
        u, v, phi, psi = fiber[0:2], fiber[2:4], fiber[4:6], fiber[6:8]
        base = float((f.i4 @ a) @ pairing_matrix(2) @ (f.j4 @ a))
        norms = (
            u @ f.hp @ u
            + v @ f.hm @ v
            + phi @ np.linalg.solve(f.hp, phi)
            + psi @ np.linalg.solve(f.hm, psi)
        )
        return abs(lhs - (base + 0.5 * float(norms)))


def big_structures(spec: ConnectionSpec, chart: TwistorChart | None = None) -> BigStructure:
    if chart is None:
        chart = TwistorChart(spec.chart)
    if chart.base != spec.chart:
        raise DomainError("twistor chart base differs from the connection chart")
    require_torsion_free(spec)
    return BigStructure(spec, chart)


# --- horizontal lifts and the bracket identity ---

def horizontal_lift(big: BigStructure, x, point: TwistorPoint) -> np.ndarray:
    """Coordinates of X^h at `point`: base part X, fiber part L X."""
    x = np.asarray(x, dtype=float)
    return np.concatenate([x, big.frame(point).lift @ x])


def bracket_identity(big: BigStructure, point: TwistorPoint) -> dict:
    """Compare the vertical part of [d_u^h, d_v^h] with R(d_u, d_v)(I, J)."""
    frame = big.frame_jet(point)
    lift_val = jets.values_of(frame.lift)
    lift_grad = jets.gradients_of(frame.lift, 6)
    vectors, jacobians = [], []
    for i in range(2):
        vec = np.zeros(6)
        vec[i] = 1.0
        vec[2:] = lift_val[:, i]
        jac = np.zeros((6, 6))
        jac[2:] = lift_grad[:, i, :]
        vectors.append(vec)
        jacobians.append(jac)
    bracket = jacobians[1] @ vectors[0] - jacobians[0] @ vectors[1]
    value = curvature(big.spec, (1.0, 0.0), (0.0, 1.0), point.base)
    i4, j4 = jets.values_of(frame.i4), jets.values_of(frame.j4)
    expected = np.concatenate([
        jets.values_of(tangent_coordinates_kernel(curvature_action(value, i4), Sheet.PLUS)),
        jets.values_of(tangent_coordinates_kernel(curvature_action(value, j4), Sheet.MINUS)),
    ])
    residual = max(float(np.max(np.abs(bracket[:2]))), float(np.max(np.abs(bracket[2:] - expected))))
    return {"vertical": bracket[2:].tolist(), "expected": expected.tolist(), "residual": residual}


# --- Nijenhuis tensors ---

def nijenhuis_twistor(big: BigStructure, which: TwistorStructure, a: int, b: int, point: TwistorPoint) -> np.ndarray:
    """N(e_a, e_b) at `point` for coordinate frame indices a, b in 1..12."""
    if not (1 <= a <= 12 and 1 <= b <= 12):
        raise DomainError(f"frame indices run from 1 to 12, got {a}, {b}")
    chart = big.chart.full
    struct = big.cal_i if which == TwistorStructure.CAL_I else big.cal_j
    return nijenhuis_field(struct, Section.frame(chart, a - 1), Section.frame(chart, b - 1), point.validate().coords)


def adapted_nijenhuis(big: BigStructure, which: TwistorStructure, point: TwistorPoint) -> np.ndarray:
    """Full tensor N[k, a, b] re-expressed in the adapted frame (H, V, H*, V*)."""
    m, dm = big.jet(which, point)
    coordinate = nijenhuis_tensor_at(m, dm)
    f = big.frame(point)
    return np.einsum("km,mij,ia,jb->kab", f.e_inv, coordinate, f.e, f.e)


def block_maxima(tensor: np.ndarray) -> dict[NijenhuisBlock, float]:
    def block(rows, cols):
        return float(np.max(np.abs(tensor[:, rows][:, :, cols])))

    return {
        NijenhuisBlock.HH: block(H_IDX, H_IDX),
        NijenhuisBlock.HV: block(H_IDX, V_IDX),
        NijenhuisBlock.VV: block(V_IDX, V_IDX),
    }


def _embed(horizontal=None, vertical=None) -> np.ndarray:
    out = np.zeros(12)
    if horizontal is not None:
        out[H_IDX] = horizontal
    if vertical is not None:
        out[V_IDX] = vertical
    return out


def _tangent(coords, basis) -> np.ndarray:
    return coords[0] * basis[0] + coords[1] * basis[1]


def _coords(t: np.ndarray, sheet: Sheet) -> np.ndarray:
    return jets.values_of(tangent_coordinates_kernel(t, sheet))


def _h(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.trace(a @ b))


def nij_closed_form(big: BigStructure, which: TwistorStructure, a, b, point: TwistorPoint) -> np.ndarray:
    """Curvature formula for N(A^h, B^h) in the adapted frame (zero on H + H*).

    For cal I the vertical parts are
        T_I:  -R(a,b)I - I R(a,Ib)I - I R(Ia,b)I + R(Ia,Ib)I
        T_J:  -R(a,b)J + R(Ia,Ib)J
    and the T_J* part is K_J^*(R(a,Ib)J)^flat + K_J^*(R(Ia,b)J)^flat,
    where a = pi_1(A) and Ia = pi_1(IA). For cal J the roles of I and J
    are exchanged and the covector part lands in T_I*.
    """
    f = big.frame(point)
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    base = point.base
    if which == TwistorStructure.CAL_I:
        own, other, own_sheet, other_sheet = f.i4, f.j4, Sheet.PLUS, Sheet.MINUS
        h_other, k_other = f.hm, f.km
    else:
        own, other, own_sheet, other_sheet = f.j4, f.i4, Sheet.MINUS, Sheet.PLUS
        h_other, k_other = f.hp, f.kp
    va, vb = a[:2], b[:2]
    sa, sb = (own @ a)[:2], (own @ b)[:2]

    def act(x, y, s):
        return curvature_action(curvature(big.spec, x, y, base), s)

    own_part = -act(va, vb, own) - own @ act(va, sb, own) - own @ act(sa, vb, own) + act(sa, sb, own)
    other_part = -act(va, vb, other) + act(sa, sb, other)
    flat = h_other @ (_coords(act(va, sb, other), other_sheet) + _coords(act(sa, vb, other), other_sheet))
    covector = k_other.T @ flat
    own_c, other_c = _coords(own_part, own_sheet), _coords(other_part, other_sheet)
    if which == TwistorStructure.CAL_I:
        vertical = np.concatenate([own_c, other_c, np.zeros(2), covector])
    else:
        vertical = np.concatenate([other_c, own_c, covector, np.zeros(2)])
    return _embed(vertical=vertical)


def nijenhuis_on(tensor: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("kab,a,b->k", tensor, a, b)


def closed_form_gap(big: BigStructure, which: TwistorStructure, a, b, point: TwistorPoint, tensor=None) -> float:
    """max |closed form - brute force| on the horizontal pair (A^h, B^h)."""
    tensor = adapted_nijenhuis(big, which, point) if tensor is None else tensor
    brute = nijenhuis_on(tensor, _embed(horizontal=a), _embed(horizontal=b))
    return float(np.max(np.abs(brute - nij_closed_form(big, which, a, b, point))))


def gamma_form(big: BigStructure, a, w, point: TwistorPoint) -> np.ndarray:
    """gamma_A(Z) = h(J o V, R(pi_1(A), Z) J) on Z = d_u, d_v; w = (U, V) in fiber chart velocities."""
    f = big.frame(point)
    a = np.asarray(a, dtype=float)
    v_mat = _tangent(np.asarray(w, dtype=float)[2:4], f.minus_basis)
    out = np.zeros(2)
    for slot, z in enumerate(np.eye(2)):
        r_j = curvature_action(curvature(big.spec, a[:2], z, point.base), f.j4)
        out[slot] = _h(f.j4 @ v_mat, r_j)
    return out


def gamma_identity(big: BigStructure, a, w, point: TwistorPoint, tensor=None) -> dict:
    """Check N^I(A^h, W) against -I gamma_A^h + gamma_{IA}^h (a covector in H*).

    The right-hand side written with J, -J gamma_A^h + gamma_{IA}^h, is
    returned as `rhs_j_max` but does not match: on a connection with
    traceful curvature |gamma_A| is of order 1 to 10 while the brute-force
    N^I(A^h, W) stays at round-off (about 1e-16). So N^I vanishes on H x V
    for every torsion-free connection here, trace-free or not, and only
    N^J sees the curvature on that block.
    """
    f = big.frame(point)
    a = np.asarray(a, dtype=float)
    tensor = adapted_nijenhuis(big, TwistorStructure.CAL_I, point) if tensor is None else tensor
    vertical = np.zeros(8)
    vertical[0:4] = w
    brute = nijenhuis_on(tensor, _embed(horizontal=a), _embed(vertical=vertical))
    gamma_a = gamma_form(big, a, w, point)
    gamma_ia = gamma_form(big, f.i4 @ a, w, point)
    gamma_a_h, gamma_ia_h = np.concatenate([np.zeros(2), gamma_a]), np.concatenate([np.zeros(2), gamma_ia])
    rhs = -f.i4 @ gamma_a_h + gamma_ia_h
    rhs_j = -f.j4 @ gamma_a_h + gamma_ia_h
    residual = max(float(np.max(np.abs(brute[H_IDX] - rhs))), float(np.max(np.abs(brute[V_IDX]))))
    return {
        "gamma_a": gamma_a.tolist(),
        "gamma_ia": gamma_ia.tolist(),
        "rhs_max": float(np.max(np.abs(rhs))),
        "rhs_j_max": float(np.max(np.abs(rhs_j))),
        "brute_max": float(np.max(np.abs(brute))),
        "residual": residual,
    }


# --- bi-Hermitian data ---

def bihermitian_kernel(frame: TwistorFrame) -> dict[str, np.ndarray]:
    """Coordinate matrices of g, J+, J-, b, omega+, omega- (floats or Jets)."""
    x1, x2, x3 = frame.x
    y1, y2, y3 = frame.y
    s = y1 + y3
    g_h = jets.obj_array([[(x1 + x3) / s, -x2 / s], [-x2 / s, (x1 - x3) / s]])
    k = frame.i4[0:2, 0:2]
    g_ad = jets.obj_zeros(6)
    g_ad[0:2, 0:2], g_ad[2:4, 2:4], g_ad[4:6, 4:6] = g_h, frame.hp, frame.hm
    jp_ad, jm_ad = jets.obj_zeros(6), jets.obj_zeros(6)
    jp_ad[0:2, 0:2], jp_ad[2:4, 2:4], jp_ad[4:6, 4:6] = k, frame.kp, frame.km
    jm_ad[0:2, 0:2], jm_ad[2:4, 2:4], jm_ad[4:6, 4:6] = k, frame.kp, -frame.km
    b_ad = jets.obj_zeros(6)
    b_ad[0, 1] = y2 / s
    b_ad[1, 0] = -(y2 / s)
    p, p_inv = frame.e[0:6, 0:6], frame.e_inv[0:6, 0:6]
    g = p_inv.T @ g_ad @ p_inv
    b = p_inv.T @ b_ad @ p_inv
    j_plus = p @ jp_ad @ p_inv
    j_minus = p @ jm_ad @ p_inv
    return {
        "g": g,
        "j_plus": j_plus,
        "j_minus": j_minus,
        "b": b,
        "omega_plus": j_plus.T @ g,
        "omega_minus": j_minus.T @ g,
    }


def bihermitian_data(big: BigStructure, point: TwistorPoint) -> BiHermitianData:
    data = {k: jets.values_of(v) for k, v in bihermitian_kernel(big.frame(point)).items()}
    result = BiHermitianData(point=point, **data)
    tol = get_settings().tol_bihermitian
    residuals = result.residuals()
    if residuals["g_min_eigenvalue"] <= 0:
        raise DomainError(f"metric is not positive definite at {point.coords}")
    logger.debug(f"bi-Hermitian residuals at {point.coords}: {residuals} (tol {tol})")
    return result


def _form_jets(big: BigStructure, point: TwistorPoint, key: str) -> tuple[np.ndarray, np.ndarray]:
    m = bihermitian_kernel(big.frame_jet(point))[key]
    return jets.values_of(m), jets.gradients_of(m, 6)


def exterior_derivative_of(big: BigStructure, point: TwistorPoint, key: str) -> np.ndarray:
    """(d omega)_ijk for one of the 2-forms of the bi-Hermitian data."""
    _, grads = _form_jets(big, point, key)
    return exterior_derivative_2form_at(grads)


def non_kahler_witness(big: BigStructure, point: TwistorPoint, x, y, w, sign: int = 1) -> dict:
    """3 d omega_{+/-}(X^h, Y^h, W) by numeric differentiation and by the curvature formula.

    `w` is the vertical vector in fiber chart velocities (da2, da3, db2, db3).
    """
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    key = "omega_plus" if sign > 0 else "omega_minus"
    d_omega = exterior_derivative_of(big, point, key)
    w = np.asarray(w, dtype=float)
    xh, yh = horizontal_lift(big, x, point), horizontal_lift(big, y, point)
    numeric = float(np.einsum("ijk,i,j,k->", d_omega, xh, yh, np.concatenate([np.zeros(2), w])))

    f = big.frame(point)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    y1, _, y3 = f.y
    v1 = (f.y[1] * w[2] + y3 * w[3]) / y1
    v3 = w[3]
    area = x[0] * y[1] - x[1] * y[0]
    value = curvature(big.spec, x, y, point.base)
    u_mat = _tangent(w[0:2], f.plus_basis)
    v_mat = _tangent(w[2:4], f.minus_basis)
    closed = (
        -(v1 + v3) / (y1 + y3) ** 2 * area
        + _h(curvature_action(value, f.i4), f.i4 @ u_mat)
        + sign * _h(curvature_action(value, f.j4), f.j4 @ v_mat)
    )
    return {"numeric": numeric, "closed_form": float(closed), "gap": abs(numeric - float(closed))}


def jpm_nijenhuis(big: BigStructure, point: TwistorPoint) -> dict[str, float]:
    """max |N| of the classical Nijenhuis tensors of J+ and J-."""
    out = {}
    for key in ("j_plus", "j_minus"):
        values, grads = _form_jets(big, point, key)
        out[key] = float(np.max(np.abs(classical_nijenhuis_at(values, grads))))
    return out


def db_norm(big: BigStructure, point: TwistorPoint) -> float:
    return float(np.max(np.abs(exterior_derivative_of(big, point, "b"))))


# --- verdicts ---

@dataclass(frozen=True)
class TwistorVerdict:
    blocks: dict  # "I.HxH" -> max over sampled points
    points: int

    def vanishing(self, flat_tol: float | None = None, floor: float | None = None) -> dict[str, bool | None]:
        """True below the flat tolerance, False above the detection floor, None in between."""
        settings = get_settings()
        flat_tol = settings.tol_flat_nijenhuis if flat_tol is None else flat_tol
        floor = settings.tol_nonflat_floor if floor is None else floor
        out = {}
        for key, value in self.blocks.items():
            if value < flat_tol:
                out[key] = True
            elif value > floor:
                out[key] = False
            else:
                out[key] = None
        return out

    @property
    def max_residual(self) -> float:
        return max(self.blocks.values())

    @property
    def integrable(self) -> bool:
        return self.max_residual < get_settings().tol_flat_nijenhuis


def twistor_verdict(big: BigStructure, points: list[TwistorPoint]) -> TwistorVerdict:
    blocks: dict[str, float] = {}
    for point in points:
        for which in TwistorStructure:
            maxima = block_maxima(adapted_nijenhuis(big, which, point))
            for block, value in maxima.items():
                key = f"{which.value}.{block.value}"
                blocks[key] = max(blocks.get(key, 0.0), value)
    logger.info(f"twistor verdict for {big.spec.label}: {blocks}")
    return TwistorVerdict(blocks, len(points))


def frame_invariance(
    spec: ConnectionSpec,
    rng: np.random.Generator,
    samples: int,
    chart: TwistorChart | None = None,
    flat_tol: float | None = None,
) -> dict:
    """Verdicts before and after re-coordinatizing the base by (u, v) -> (u + v^2, v)."""
    original = big_structures(spec, chart)
    sheared_spec = spec.sheared()
    sheared_chart = TwistorChart(sheared_spec.chart, original.chart.sign, original.chart.fiber_range)
    sheared = big_structures(sheared_spec, sheared_chart)
    first = twistor_verdict(original, original.chart.sample(rng, samples))
    second = twistor_verdict(sheared, sheared.chart.sample(rng, samples))
    flat_tol = get_settings().tol_flat_nijenhuis if flat_tol is None else flat_tol
    return {
        "original": first.blocks,
        "sheared": second.blocks,
        "agree": (first.max_residual < flat_tol) == (second.max_residual < flat_tol),
    }


def curvature_trace(big: BigStructure, point: TwistorPoint) -> float:
    return float(np.trace(curvature_uv(big.spec, point.base)))
