"""Charts, twistor points and per-point geometric results."""

import math
from dataclasses import dataclass, field

import numpy as np

from gktwist.core.errors import DomainError, PositivityError
from gktwist.models.algebra import Hyper3

FIBER_NAMES = ("a2", "a3", "b2", "b3")


@dataclass(frozen=True)
class Chart:
    """Rectangular coordinate domain."""

    names: tuple[str, ...]
    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "bounds", tuple((float(lo), float(hi)) for lo, hi in self.bounds))
        if len(set(self.names)) != len(self.names):
            raise DomainError(f"chart coordinate names must be unique: {self.names}")
        if len(self.bounds) != len(self.names):
            raise DomainError("chart needs one (lo, hi) pair per coordinate")
        for name, (lo, hi) in zip(self.names, self.bounds):
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
                raise DomainError(f"chart bounds for {name!r} must be finite with positive extent, got ({lo}, {hi})")

    @property
    def dim(self) -> int:
        return len(self.names)

    def contains(self, point) -> bool:
        return all(lo <= p <= hi for p, (lo, hi) in zip(point, self.bounds))

    def check(self, point) -> tuple[float, ...]:
        point = tuple(float(p) for p in point)
        if len(point) != self.dim:
            raise DomainError(f"point {point} has {len(point)} coordinates, chart has {self.dim}")
        if not self.contains(point):
            raise DomainError(f"point {point} lies outside the chart {dict(zip(self.names, self.bounds))}")
        return point

    def grid(self, n: int) -> list[tuple[float, ...]]:
        """n points per axis, inclusive of the bounds."""
        if n < 1:
            raise DomainError("empty grid")
        axes = [np.linspace(lo, hi, n) if n > 1 else np.array([(lo + hi) / 2]) for lo, hi in self.bounds]
        mesh = np.meshgrid(*axes, indexing="ij")
        return [tuple(float(c) for c in coords) for coords in zip(*(m.ravel() for m in mesh))]

    def sample(self, rng: np.random.Generator, n: int, margin: float = 0.05) -> list[tuple[float, ...]]:
        """Uniform interior samples, kept a fraction `margin` away from the boundary."""
        lows = np.array([lo + margin * (hi - lo) for lo, hi in self.bounds])
        highs = np.array([hi - margin * (hi - lo) for lo, hi in self.bounds])
        draws = rng.uniform(lows, highs, size=(n, self.dim))
        return [tuple(float(c) for c in row) for row in draws]

    def center(self) -> tuple[float, ...]:
        return tuple((lo + hi) / 2 for lo, hi in self.bounds)


@dataclass(frozen=True)
class TwistorPoint:
    u: float
    v: float
    a2: float
    a3: float
    b2: float
    b3: float
    sign_plus: int = 1
    sign_minus: int = 1

    @property
    def coords(self) -> tuple[float, ...]:
        return (self.u, self.v, self.a2, self.a3, self.b2, self.b3)

    @property
    def base(self) -> tuple[float, float]:
        return (self.u, self.v)

    @property
    def x(self) -> Hyper3:
        return Hyper3.from_chart(self.a2, self.a3, self.sign_plus)

    @property
    def y(self) -> Hyper3:
        return Hyper3.from_chart(self.b2, self.b3, self.sign_minus)

    def validate(self) -> "TwistorPoint":
        if self.sign_plus * self.sign_minus <= 0:
            raise PositivityError(f"x1 * y1 must be positive; sheet signs are {self.sign_plus}, {self.sign_minus}")
        return self


@dataclass(frozen=True)
class TwistorChart:
    """Base chart times sheet charts (a2, a3) of G+ and (b2, b3) of G-, with one common sheet sign."""

    base: Chart
    sign: int = 1
    fiber_range: tuple[float, float] = (-2.0, 2.0)

    def __post_init__(self):
        if self.base.dim != 2:
            raise DomainError(f"twistor charts need a 2-dimensional base, got {self.base.dim}")
        if self.sign not in (1, -1):
            raise DomainError(f"sheet sign must be +1 or -1, got {self.sign}")
        lo, hi = self.fiber_range
        if not hi > lo:
            raise DomainError(f"fiber range must have positive extent, got {self.fiber_range}")

    @property
    def names(self) -> tuple[str, ...]:
        return self.base.names + FIBER_NAMES

    @property
    def full(self) -> Chart:
        return Chart(self.names, self.base.bounds + (tuple(self.fiber_range),) * 4)

    def point(self, coords) -> TwistorPoint:
        u, v, a2, a3, b2, b3 = self.full.check(coords)
        return TwistorPoint(u, v, a2, a3, b2, b3, self.sign, self.sign)

    def sample(self, rng: np.random.Generator, n: int) -> list[TwistorPoint]:
        return [self.point(c) for c in self.full.sample(rng, n)]


@dataclass(frozen=True)
class CurvatureValue:
    """rho(X, Y) in the sign convention R(X, Y) = nabla_[X,Y] - [nabla_X, nabla_Y]."""

    point: tuple[float, ...]
    rho: np.ndarray

    @property
    def rho_hat(self) -> np.ndarray:
        """Extension to T + T*: rho on vectors, -rho^T on covectors."""
        out = np.zeros((4, 4))
        out[0:2, 0:2] = self.rho
        out[2:4, 2:4] = -self.rho.T
        return out

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho))

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.rho)))


@dataclass(frozen=True)
class BiHermitianData:
    """Coordinate matrices on T P at one point: bilinear forms as B(X, Y) = X^T B Y, endomorphisms act on columns."""

    point: "TwistorPoint"
    g: np.ndarray
    j_plus: np.ndarray
    j_minus: np.ndarray
    b: np.ndarray
    omega_plus: np.ndarray
    omega_minus: np.ndarray
    extras: dict = field(default_factory=dict)

    def residuals(self) -> dict[str, float]:
        eye = np.eye(self.g.shape[0])
        out = {
            "g_symmetry": float(np.max(np.abs(self.g - self.g.T))),
            "g_min_eigenvalue": float(np.linalg.eigvalsh(0.5 * (self.g + self.g.T))[0]),
            "b_antisymmetry": float(np.max(np.abs(self.b + self.b.T))),
            "j_commutator": float(np.max(np.abs(self.j_plus @ self.j_minus - self.j_minus @ self.j_plus))),
            "j_distinct": float(min(np.max(np.abs(self.j_plus - self.j_minus)), np.max(np.abs(self.j_plus + self.j_minus)))),
        }
        for tag, j, omega in (("plus", self.j_plus, self.omega_plus), ("minus", self.j_minus, self.omega_minus)):
            out[f"j_{tag}_square"] = float(np.max(np.abs(j @ j + eye)))
            out[f"j_{tag}_isometry"] = float(np.max(np.abs(j.T @ self.g @ j - self.g)))
            out[f"omega_{tag}_consistency"] = float(np.max(np.abs(omega - j.T @ self.g)))
        return out
