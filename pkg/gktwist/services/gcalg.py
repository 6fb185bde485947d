"""
Fiber algebra - generalized complex linear algebra on V + V*, dim V = 2.

Everything is expressed in the frame (e1, e2, eta1, eta2). The two sheets
of structures are parametrized by hyperboloid points:

    G+(V):  I = sum x_r I_r   (I preserves V, acts as K on V and -K^T on V*)
    G-(V):  J = sum y_r J_r   (J swaps V and V*, up to the diagonal y2 part)

The "kernel" functions at the bottom accept floats or Jets and return
object arrays, so the twistor module can differentiate the very same
formulas that the float API below checks pointwise.
"""

import logging
from dataclasses import dataclass

import numpy as np

from gktwist.core.config import get_settings
from gktwist.core.errors import DomainError, PositivityError, StructureError
from gktwist.models.algebra import PAIRING, FiberTangent, GEndo, GVec, Hyper3, QBasis
from gktwist.models.models import Sheet
from gktwist.services import jets
from gktwist.services.jets import Scalar

logger = logging.getLogger(__name__)

F2 = np.array([[0.0, -1.0], [1.0, 0.0]])  # rotation by +90 degrees
Z2 = np.array([[1.0, 0.0], [0.0, -1.0]])
X2 = np.array([[0.0, 1.0], [1.0, 0.0]])
I2 = np.eye(2)
O2 = np.zeros((2, 2))

PLUS_BASIS = (
    np.block([[F2, O2], [O2, F2]]),
    np.block([[Z2, O2], [O2, -Z2]]),
    np.block([[X2, O2], [O2, -X2]]),
)
MINUS_BASIS = (
    np.block([[O2, F2], [F2, O2]]),
    np.block([[I2, O2], [O2, -I2]]),
    np.block([[O2, F2], [-F2, O2]]),
)
BASIS_NORMS = (-4.0, 4.0, 4.0)  # Tr(B_r^2) for either sheet

PHASE_PAIRING = 0.5 * np.block([[np.zeros((4, 4)), np.eye(4)], [np.eye(4), np.zeros((4, 4))]])


def sheet_basis(sheet: Sheet) -> tuple[np.ndarray, ...]:
    return PLUS_BASIS if sheet == Sheet.PLUS else MINUS_BASIS


# --- pairing and the Q-basis ---

def neutral_pairing(a: GVec, b: GVec) -> float:
    """<X+xi, Y+eta> = (xi(Y) + eta(X)) / 2."""
    return 0.5 * (float(a.covector @ b.vector) + float(b.covector @ a.vector))


def q_basis() -> QBasis:
    return QBasis()


def s_matrix(i: int, j: int) -> np.ndarray:
    """S_ij Q_k = eps_k (delta_ik Q_j - delta_kj Q_i), indices 1..4, in the standard frame."""
    qb = q_basis()
    q = qb.matrix
    s_q = np.zeros((4, 4))
    for k in range(4):
        eps = qb.signs[k]
        if k == i - 1:
            s_q[j - 1, k] += eps
        if k == j - 1:
            s_q[i - 1, k] -= eps
    return q @ s_q @ np.linalg.inv(q)


# --- structures on the two sheets ---

def _check_hyper(x: Hyper3, what: str) -> None:
    tol = get_settings().tol_hyperboloid
    residual = x.constraint_residual()
    if residual > tol:
        raise DomainError(f"{what}: {x} is off the hyperboloid x1^2 - x2^2 - x3^2 = 1 (residual {residual:.3e})")


def structure_plus(x: Hyper3) -> GEndo:
    _check_hyper(x, "structure_plus")
    return GEndo(jets.values_of(plus_kernel(x.x1, x.x2, x.x3)))


def structure_minus(y: Hyper3) -> GEndo:
    _check_hyper(y, "structure_minus")
    return GEndo(jets.values_of(minus_kernel(y.x1, y.x2, y.x3)))


def structure(point: Hyper3, sheet: Sheet) -> GEndo:
    return structure_plus(point) if sheet == Sheet.PLUS else structure_minus(point)


def hyper_coordinates(j: GEndo, sheet: Sheet) -> Hyper3:
    """Recover the sheet point of a structure: x_r = Tr(J B_r) / Tr(B_r^2)."""
    basis = sheet_basis(sheet)
    coords = [float(np.trace(j.m @ b)) / n for b, n in zip(basis, BASIS_NORMS)]
    return Hyper3(*coords)


def require_structure(j: GEndo, what: str = "input") -> None:
    tol = get_settings().tol_algebraic
    if not j.is_structure(tol):
        raise StructureError(
            f"{what} is not a generalized complex structure "
            f"(|J^2 + Id| = {j.square_residual():.3e}, skew residual {j.skew_residual():.3e})"
        )


# --- complex and symplectic structures ---

def from_complex(k) -> GEndo:
    """J = K on V and -K* on V*."""
    k = np.asarray(k, dtype=float)
    if k.shape != (2, 2):
        raise StructureError(f"complex structure must be 2x2, got {k.shape}")
    if np.max(np.abs(k @ k + I2)) > get_settings().tol_algebraic:
        raise StructureError("invalid complex structure: K^2 != -Id")
    return GEndo(np.block([[k, O2], [O2, -k.T]]))


def from_symplectic(w: float) -> GEndo:
    """Structure of omega = w eta1^eta2: X -> iota_X omega on V, -omega^-1 on V*."""
    if w == 0:
        raise DomainError("degenerate form: w = 0")
    omega = w * F2  # matrix of X -> iota_X omega
    return GEndo(np.block([[O2, -np.linalg.inv(omega)], [omega, O2]]))


def kaehler_pair(k, w: float) -> tuple[GEndo, GEndo]:
    """Fiber pair of a complex structure and a symplectic form."""
    i_struct = from_complex(k)
    j_struct = from_symplectic(w)
    if not positivity(i_struct, j_struct):
        raise PositivityError(f"omega = {w} eta1^eta2 does not tame K: <I., J.> is not positive")
    return i_struct, j_struct


def b_transform(j: GEndo, b: float) -> GEndo:
    """e^B J e^-B for B = b eta1^eta2, where e^B (X + xi) = X + xi + iota_X B."""
    require_structure(j, "b_transform input")
    shear = np.block([[I2, O2], [b * F2, I2]])
    inverse = np.block([[I2, O2], [-b * F2, I2]])
    return GEndo(shear @ j.m @ inverse)


def beta_transform(j: GEndo, c: float) -> GEndo:
    """e^beta J e^-beta for beta = c e1^e2, where e^beta (X + xi) = X + iota_xi beta + xi."""
    require_structure(j, "beta_transform input")
    shear = np.block([[I2, c * F2], [O2, I2]])
    inverse = np.block([[I2, -c * F2], [O2, I2]])
    return GEndo(shear @ j.m @ inverse)


# --- orientation ---

def orientation_class(j: GEndo) -> Sheet:
    """Sign of det[a, Ja, b, Jb] for an adapted orthonormal basis."""
    require_structure(j, "orientation_class input")
    vectors = [q.array for q in q_basis().vectors]
    a = vectors[0]
    ja = j.m @ a
    for candidate in vectors[2:] + vectors[1:2]:
        b = candidate - _pair(candidate, a) * a - _pair(candidate, ja) * ja
        norm = _pair(b, b)
        if norm < -1e-6:
            b = b / np.sqrt(-norm)
            break
    else:  # pragma: no cover - the complement of span{a, Ja} is negative definite
        raise StructureError("could not complete an adapted orthonormal basis")
    det = np.linalg.det(np.column_stack([a, ja, b, j.m @ b]))
    return Sheet.PLUS if det > 0 else Sheet.MINUS


def _pair(a: np.ndarray, b: np.ndarray) -> float:
    return float(a @ PAIRING @ b)


# --- fiber Kaehler geometry ---

@dataclass(frozen=True)
class FiberGeometry:
    """Tangent space of the sheet through J in the chart basis D_a = dJ/da_a, a = 2, 3."""

    sheet: Sheet
    point: Hyper3
    basis: tuple[np.ndarray, np.ndarray]
    h: np.ndarray  # Gram matrix of h = -g, g(A, B) = -Tr(AB) / 2
    kmat: np.ndarray  # matrix of K(U) = J o U

    def tangent(self, coords) -> np.ndarray:
        return coords[0] * self.basis[0] + coords[1] * self.basis[1]

    def coordinates(self, t: np.ndarray) -> np.ndarray:
        return jets.values_of(tangent_coordinates_kernel(t, self.sheet))

    def complex_structure(self, coords) -> np.ndarray:
        return self.kmat @ np.asarray(coords, dtype=float)

    def flat(self, coords) -> np.ndarray:
        """U -> h(U, .)."""
        return self.h @ np.asarray(coords, dtype=float)

    def sharp(self, covector) -> np.ndarray:
        return np.linalg.solve(self.h, np.asarray(covector, dtype=float))

    def fiber_tangent(self, coords) -> FiberTangent:
        structure_m = self.point_structure()
        return FiberTangent(GEndo(structure_m), GEndo(self.tangent(coords)))

    def point_structure(self) -> np.ndarray:
        if self.sheet == Sheet.PLUS:
            return jets.values_of(plus_kernel(*self.point.array))
        return jets.values_of(minus_kernel(*self.point.array))


def fiber_geometry(j: GEndo) -> FiberGeometry:
    sheet = orientation_class(j)
    point = hyper_coordinates(j, sheet)
    basis, h, kmat = fiber_kernel(point.x1, point.x2, point.x3, sheet)
    return FiberGeometry(
        sheet=sheet,
        point=point,
        basis=(jets.values_of(basis[0]), jets.values_of(basis[1])),
        h=jets.values_of(h),
        kmat=jets.values_of(kmat),
    )


# --- positivity and the fiber pair ---

def positivity_gram(i_struct: GEndo, j_struct: GEndo) -> np.ndarray:
    """Symmetrized Gram matrix of A -> <IA, JA>."""
    m = i_struct.m.T @ PAIRING @ j_struct.m
    return 0.5 * (m + m.T)


def positivity(i_struct: GEndo, j_struct: GEndo) -> bool:
    """True iff A -> <IA, JA> is positive definite on V + V*.

    Raises:
        StructureError: if I is not in G+(V) or J is not in G-(V).
    """
    if orientation_class(i_struct) != Sheet.PLUS:
        raise StructureError("positivity: first structure must lie in G+(V)")
    if orientation_class(j_struct) != Sheet.MINUS:
        raise StructureError("positivity: second structure must lie in G-(V)")
    smallest = float(np.linalg.eigvalsh(positivity_gram(i_struct, j_struct))[0])
    return smallest > get_settings().tol_definite


@dataclass(frozen=True)
class GksFiberPair:
    """Action of the pair on (T_I + T_J) + (T_I* + T_J*) ordered (U, V, phi, psi)."""

    plus: FiberGeometry
    minus: FiberGeometry
    cal_i: np.ndarray
    cal_j: np.ndarray

    @property
    def pairing(self) -> np.ndarray:
        return PHASE_PAIRING

    def norms(self, w: np.ndarray) -> float:
        """||U||^2 + ||V||^2 + ||phi||^2 + ||psi||^2 with h and its dual."""
        u, v, phi, psi = w[0:2], w[2:4], w[4:6], w[6:8]
        return float(
            u @ self.plus.h @ u
            + v @ self.minus.h @ v
            + phi @ np.linalg.solve(self.plus.h, phi)
            + psi @ np.linalg.solve(self.minus.h, psi)
        )

    def positivity_form(self, w: np.ndarray) -> float:
        return float((self.cal_i @ w) @ PHASE_PAIRING @ (self.cal_j @ w))


def gks_fiber_pair(i_struct: GEndo, j_struct: GEndo) -> GksFiberPair:
    if not positivity(i_struct, j_struct):
        raise PositivityError("gks_fiber_pair: <I., J.> is not positive definite")
    plus = fiber_geometry(i_struct)
    minus = fiber_geometry(j_struct)
    cal_i, cal_j = gks_kernel(plus.kmat, plus.h, minus.kmat, minus.h)
    return GksFiberPair(plus=plus, minus=minus, cal_i=jets.values_of(cal_i), cal_j=jets.values_of(cal_j))


# --- kernels (floats or Jets) ---

def plus_kernel(x1: Scalar, x2: Scalar, x3: Scalar) -> np.ndarray:
    k = jets.obj_array([[x2, -(x1 - x3)], [x1 + x3, -x2]])
    m = jets.obj_zeros(4)
    m[0:2, 0:2] = k
    m[2:4, 2:4] = -k.T
    return m


def minus_kernel(y1: Scalar, y2: Scalar, y3: Scalar) -> np.ndarray:
    upper, lower = y1 + y3, y1 - y3
    return jets.obj_array([
        [y2, 0.0, 0.0, -upper],
        [0.0, y2, upper, 0.0],
        [0.0, -lower, -y2, 0.0],
        [lower, 0.0, 0.0, -y2],
    ])


def sheet_kernel(x1: Scalar, x2: Scalar, x3: Scalar, sheet: Sheet) -> np.ndarray:
    return plus_kernel(x1, x2, x3) if sheet == Sheet.PLUS else minus_kernel(x1, x2, x3)


def tangent_coordinates_kernel(t: np.ndarray, sheet: Sheet) -> np.ndarray:
    """Chart velocities (da2, da3) of a tangent matrix: Tr(T B_a) / 4."""
    basis = sheet_basis(sheet)
    out = np.empty(2, dtype=object)
    for slot, b in enumerate(basis[1:]):
        out[slot] = jets.trace(t @ b) * 0.25
    return out


def fiber_kernel(x1: Scalar, x2: Scalar, x3: Scalar, sheet: Sheet):
    """(D_2, D_3), h Gram matrix and the matrix of U -> S o U at the sheet point x."""
    basis = sheet_basis(sheet)
    c2, c3 = x2 / x1, x3 / x1
    d2 = basis[1] + c2 * basis[0]
    d3 = basis[2] + c3 * basis[0]
    h = jets.obj_array([
        [2.0 * (1.0 - c2 * c2), -2.0 * c2 * c3],
        [-2.0 * c2 * c3, 2.0 * (1.0 - c3 * c3)],
    ])
    s = sheet_kernel(x1, x2, x3, sheet)
    kmat = jets.obj_zeros(2)
    for col, d in enumerate((d2, d3)):
        kmat[:, col] = tangent_coordinates_kernel(s @ d, sheet)
    return (d2, d3), h, kmat


def gks_kernel(kp, hp, km, hm) -> tuple[np.ndarray, np.ndarray]:
    """8x8 matrices of the fiber pair in the order (U, V, phi, psi)."""
    hp_inv, hm_inv = jets.inverse2(hp), jets.inverse2(hm)
    cal_i = jets.obj_zeros(8)
    cal_i[0:2, 0:2] = kp
    cal_i[2:4, 6:8] = km @ hm_inv
    cal_i[4:6, 4:6] = -kp.T
    cal_i[6:8, 2:4] = -(km.T @ hm)
    cal_j = jets.obj_zeros(8)
    cal_j[0:2, 4:6] = kp @ hp_inv
    cal_j[2:4, 2:4] = km
    cal_j[4:6, 0:2] = -(kp.T @ hp)
    cal_j[6:8, 6:8] = -km.T
    return cal_i, cal_j
