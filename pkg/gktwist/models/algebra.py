"""Pointwise value types of the fiber algebra on V + V* with dim V = 2."""

import math
from dataclasses import dataclass, field

import numpy as np


# Gram matrix of the neutral pairing <X+xi, Y+eta> = (xi(Y) + eta(X)) / 2 in the frame (e1, e2, eta1, eta2)
PAIRING = 0.5 * np.block([[np.zeros((2, 2)), np.eye(2)], [np.eye(2), np.zeros((2, 2))]])


@dataclass(frozen=True)
class GVec:
    x1: float
    x2: float
    xi1: float
    xi2: float

    @classmethod
    def from_array(cls, a) -> "GVec":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    @property
    def array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.xi1, self.xi2])

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.x1, self.x2])

    @property
    def covector(self) -> np.ndarray:
        return np.array([self.xi1, self.xi2])


@dataclass(frozen=True, eq=False)
class GEndo:
    """Endomorphism of V + V* as a 4x4 matrix in the frame (e1, e2, eta1, eta2)."""

    m: np.ndarray

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.shape != (4, 4):
            raise ValueError(f"GEndo needs a 4x4 matrix, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    def __matmul__(self, other):
        if isinstance(other, GEndo):
            return GEndo(self.m @ other.m)
        if isinstance(other, GVec):
            return GVec.from_array(self.m @ other.array)
        return self.m @ np.asarray(other)

    def skew_residual(self) -> float:
        """max |m^T G + G m|: zero iff <mA, B> + <A, mB> = 0 for all A, B."""
        return float(np.max(np.abs(self.m.T @ PAIRING + PAIRING @ self.m)))

    def square_residual(self) -> float:
        return float(np.max(np.abs(self.m @ self.m + np.eye(4))))

    def is_skew(self, tol: float = 1e-12) -> bool:
        return self.skew_residual() <= tol

    def is_structure(self, tol: float = 1e-12) -> bool:
        return self.square_residual() <= tol and self.skew_residual() <= tol

    def allclose(self, other: "GEndo", tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.m - other.m)) <= tol)


@dataclass(frozen=True)
class Hyper3:
    """Point of x1^2 - x2^2 - x3^2 = 1; the sign of x1 picks the sheet."""

    x1: float
    x2: float
    x3: float

    @classmethod
    def from_chart(cls, a2: float, a3: float, sign: int = 1) -> "Hyper3":
        return cls(sign * math.sqrt(1.0 + a2 * a2 + a3 * a3), a2, a3)

    @property
    def sheet_sign(self) -> int:
        return 1 if self.x1 > 0 else -1

    @property
    def array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3])

    def constraint_residual(self) -> float:
        return abs(self.x1**2 - self.x2**2 - self.x3**2 - 1.0)

    def mirrored(self) -> "Hyper3":
        return Hyper3(-self.x1, self.x2, self.x3)


@dataclass(frozen=True)
class FiberTangent:
    base: GEndo
    q: GEndo

    def anticommutator_residual(self) -> float:
        return float(np.max(np.abs(self.q.m @ self.base.m + self.base.m @ self.q.m)))


@dataclass(frozen=True)
class QBasis:
    """Q1 = e1+eta1, Q2 = e2+eta2, Q3 = e1-eta1, Q4 = e2-eta2 with norms eps = (1, 1, -1, -1)."""

    vectors: tuple[GVec, ...] = field(
        default=(GVec(1, 0, 1, 0), GVec(0, 1, 0, 1), GVec(1, 0, -1, 0), GVec(0, 1, 0, -1))
    )
    signs: tuple[int, ...] = (1, 1, -1, -1)

    @property
    def matrix(self) -> np.ndarray:
        """Columns are Q1..Q4 in the frame (e1, e2, eta1, eta2)."""
        return np.column_stack([q.array for q in self.vectors])
