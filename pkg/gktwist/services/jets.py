"""
Jets - forward-mode exact derivatives.

A Jet carries a value together with its gradient (and optionally its Hessian)
with respect to a fixed list of chart coordinates. Arithmetic and the
elementary functions propagate both by the chain rule, so any expression
evaluated on seeded Jets yields exact first and second partials.

Plain floats act as constants: mixing them with Jets is allowed everywhere,
and multiplying by an exact 0.0 short-circuits to 0.0 so sparse structure
matrices stay cheap.
"""

import math
from typing import Union

import numpy as np

from gktwist.core.errors import DomainError

Scalar = Union[float, "Jet"]


class Jet:
    __slots__ = ("val", "grad", "hess")
    __array_ufunc__ = None  # keep numpy from broadcasting over Jets

    def __init__(self, val: float, grad: np.ndarray, hess: np.ndarray | None = None):
        self.val = float(val)
        self.grad = grad
        self.hess = hess

    @property
    def size(self) -> int:
        return self.grad.shape[0]

    def __repr__(self) -> str:
        return f"Jet({self.val!r}, grad={self.grad.tolist()})"

    # --- chain rule ---

    def _unary(self, f0: float, f1: float, f2: float) -> "Jet":
        grad = f1 * self.grad
        hess = None
        if self.hess is not None:
            hess = f1 * self.hess + f2 * np.outer(self.grad, self.grad)
        return Jet(f0, grad, hess)

    # --- arithmetic ---

    def _over(self, other: np.ndarray, op) -> np.ndarray:
        out = np.empty(other.shape, dtype=object)
        for idx in np.ndindex(*other.shape):
            out[idx] = op(self, other[idx])
        return out

    def __neg__(self) -> "Jet":
        return Jet(-self.val, -self.grad, None if self.hess is None else -self.hess)

    def __pos__(self) -> "Jet":
        return self

    def __add__(self, other: Scalar) -> Scalar:
        if isinstance(other, np.ndarray):
            return self._over(other, lambda a, b: a + b)
        if isinstance(other, Jet):
            hess = None
            if self.hess is not None and other.hess is not None:
                hess = self.hess + other.hess
            return Jet(self.val + other.val, self.grad + other.grad, hess)
        if other == 0:
            return self
        return Jet(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other: Scalar) -> Scalar:
        if isinstance(other, np.ndarray):
            return self._over(other, lambda a, b: a - b)
        return self + (-other)

    def __rsub__(self, other: Scalar) -> Scalar:
        if isinstance(other, np.ndarray):
            return self._over(other, lambda a, b: b - a)
        return (-self) + other

    def __mul__(self, other: Scalar) -> Scalar:
        if isinstance(other, np.ndarray):
            return self._over(other, lambda a, b: a * b)
        if isinstance(other, Jet):
            hess = None
            if self.hess is not None and other.hess is not None:
                cross = np.outer(self.grad, other.grad)
                hess = self.val * other.hess + other.val * self.hess + cross + cross.T
            return Jet(self.val * other.val, self.val * other.grad + other.val * self.grad, hess)
        if other == 0:
            return 0.0
        if other == 1:
            return self
        return Jet(self.val * other, self.grad * other, None if self.hess is None else self.hess * other)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        if self.val == 0.0:
            raise DomainError("division by a quantity that vanishes at the evaluation point")
        v = self.val
        return self._unary(1.0 / v, -1.0 / v**2, 2.0 / v**3)

    def __truediv__(self, other: Scalar) -> Scalar:
        if isinstance(other, np.ndarray):
            return self._over(other, lambda a, b: a / b)
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if other == 0:
            raise DomainError("division by zero")
        return self * (1.0 / other)

    def __rtruediv__(self, other: Scalar) -> Scalar:
        if isinstance(other, np.ndarray):
            return self._over(other, lambda a, b: b / a)
        if other == 0:
            return 0.0
        return self.reciprocal() * other

    def __pow__(self, n: int) -> Scalar:
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise DomainError(f"only non-negative integer powers are supported, got {n!r}")
        n = int(n)
        if n == 0:
            return 1.0
        if n == 1:
            return self
        v = self.val
        return self._unary(v**n, n * v ** (n - 1), n * (n - 1) * v ** (n - 2))


def variables(values: list[float], order: int = 1) -> list[Jet]:
    """Seed one Jet per coordinate: unit gradient, zero Hessian when order is 2."""
    n = len(values)
    eye = np.eye(n)
    jets = []
    for i, value in enumerate(values):
        hess = np.zeros((n, n)) if order >= 2 else None
        jets.append(Jet(value, eye[i].copy(), hess))
    return jets


# --- elementary functions (accept floats or Jets) ---

def sin(x: Scalar) -> Scalar:
    if isinstance(x, Jet):
        s, c = math.sin(x.val), math.cos(x.val)
        return x._unary(s, c, -s)
    return math.sin(x)


def cos(x: Scalar) -> Scalar:
    if isinstance(x, Jet):
        s, c = math.sin(x.val), math.cos(x.val)
        return x._unary(c, -s, -c)
    return math.cos(x)


def exp(x: Scalar) -> Scalar:
    if isinstance(x, Jet):
        e = math.exp(x.val)
        return x._unary(e, e, e)
    return math.exp(x)


def sqrt(x: Scalar) -> Scalar:
    v = x.val if isinstance(x, Jet) else x
    if v < 0:
        raise DomainError(f"sqrt of negative value {v}")
    if isinstance(x, Jet):
        if v == 0.0:
            raise DomainError("sqrt is not differentiable at 0")
        r = math.sqrt(v)
        return x._unary(r, 0.5 / r, -0.25 / (r * v))
    return math.sqrt(v)


FUNCTIONS = {"sin": sin, "cos": cos, "exp": exp, "sqrt": sqrt}


# --- extraction ---

def value(x: Scalar) -> float:
    return x.val if isinstance(x, Jet) else float(x)


def gradient(x: Scalar, n: int) -> np.ndarray:
    return x.grad if isinstance(x, Jet) else np.zeros(n)


def hessian(x: Scalar, n: int) -> np.ndarray:
    if isinstance(x, Jet):
        if x.hess is None:
            raise ValueError("jet was evaluated without second derivatives")
        return x.hess
    return np.zeros((n, n))


def values_of(m: np.ndarray) -> np.ndarray:
    """Float array of the values of an object array of Jets/floats."""
    flat = [value(x) for x in m.flat]
    return np.array(flat, dtype=float).reshape(m.shape)


def gradients_of(m: np.ndarray, n: int) -> np.ndarray:
    """Array of shape m.shape + (n,) holding d m / d coordinate."""
    out = np.zeros(m.shape + (n,))
    for idx in np.ndindex(*m.shape):
        out[idx] = gradient(m[idx], n)
    return out


# --- object-matrix helpers ---

def obj_array(rows) -> np.ndarray:
    arr = np.empty((len(rows), len(rows[0])), dtype=object)
    for i, row in enumerate(rows):
        for j, entry in enumerate(row):
            arr[i, j] = entry
    return arr


def obj_zeros(n: int, m: int | None = None) -> np.ndarray:
    arr = np.empty((n, n if m is None else m), dtype=object)
    arr.fill(0.0)
    return arr


def obj_eye(n: int) -> np.ndarray:
    arr = obj_zeros(n)
    for i in range(n):
        arr[i, i] = 1.0
    return arr


def trace(m: np.ndarray) -> Scalar:
    total: Scalar = 0.0
    for i in range(m.shape[0]):
        total = total + m[i, i]
    return total


def inverse2(m: np.ndarray) -> np.ndarray:
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    det = a * d - b * c
    if abs(value(det)) < 1e-300:
        raise DomainError("singular 2x2 matrix")
    inv = 1.0 / det if isinstance(det, Jet) else 1.0 / float(det)
    return obj_array([[d * inv, -b * inv], [-c * inv, a * inv]])


def inverse(m: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inverse with partial pivoting on values; entries may be Jets."""
    n = m.shape[0]
    if n == 2:
        return inverse2(m)
    work = np.empty((n, 2 * n), dtype=object)
    work[:, :n] = m
    work[:, n:] = obj_eye(n)
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(value(work[r, col])))
        if abs(value(work[pivot, col])) < 1e-300:
            raise DomainError("singular matrix")
        if pivot != col:
            work[[col, pivot]] = work[[pivot, col]]
        scale = 1.0 / work[col, col]
        work[col] = work[col] * scale
        for row in range(n):
            if row != col:
                factor = work[row, col]
                if isinstance(factor, Jet) or factor != 0:
                    work[row] = work[row] - factor * work[col]
    return work[:, n:]
