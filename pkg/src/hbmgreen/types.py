"""Small value types shared across modules."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BelowBarrier, DimensionMismatch, DomainError


@dataclass(frozen=True)
class SpecialValue:
    """A special-function value.  When ``scaled`` is set the true value is
    ``value * exp(z)`` for I and ``value * exp(-z)`` for K."""

    value: float
    scaled: bool
    abs_err: float

    def unscaled(self, z: float, kind: str) -> float:
        if not self.scaled:
            return self.value
        return self.value * math.exp(z if kind == "i" else -z)


@dataclass(frozen=True)
class EvalResult:
    value: float
    abs_err: float
    method: str

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    n: int
    seed: int

    def zscore(self, reference: float) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.value == reference else math.inf
        return (self.value - reference) / self.stderr


@dataclass(frozen=True)
class KernelValue:
    """A transition density together with its reference measure.

    ``measure`` is ``"speed"`` (density against m(dy) = y^(1-2 nu) dy) or
    ``"lebesgue"``.
    """

    value: float
    measure: str
    abs_err: float = 0.0
    nu: float = float("nan")
    y: float = float("nan")

    def to(self, measure: str) -> "KernelValue":
        if measure == self.measure:
            return self
        m = self.y ** (1.0 - 2.0 * self.nu)
        if measure == "lebesgue":
            return KernelValue(self.value * m, "lebesgue", self.abs_err * m, self.nu, self.y)
        if measure == "speed":
            return KernelValue(self.value / m, "speed", self.abs_err / m, self.nu, self.y)
        raise ValueError(f"unknown measure {measure!r}")


@dataclass(frozen=True)
class DriftParams:
    """Drift index mu of B^(-mu), spectral parameter lam; nu = sqrt(2 lam + mu^2)."""

    mu: float
    lam: float = 0.0

    def __post_init__(self):
        if not (self.mu >= 0.0 and self.lam >= 0.0):
            raise DomainError(f"need mu >= 0 and lambda >= 0, got mu={self.mu}, lambda={self.lam}")

    @property
    def nu(self) -> float:
        return math.sqrt(2.0 * self.lam + self.mu * self.mu)


@dataclass(frozen=True)
class FunctionalState:
    x: float
    a: float
    u: float

    def __post_init__(self):
        if not (self.x > self.a > 0.0 and self.u > 0.0):
            raise DomainError(f"need x > a > 0 and u > 0, got {self}")


@dataclass(frozen=True)
class BesselIndex:
    """Bessel process BES^(-nu); dimension 2 - 2 nu."""

    nu: float

    def __post_init__(self):
        if not self.nu > 0.0:
            raise DomainError(f"Bessel index needs nu > 0, got {self.nu}")

    @property
    def dimension(self) -> float:
        return 2.0 - 2.0 * self.nu


@dataclass(frozen=True)
class KernelQuery:
    t: float
    x: float
    y: float
    a: float = 0.0
    measure: str = "speed"

    def __post_init__(self):
        if self.measure not in ("speed", "lebesgue"):
            raise DomainError(f"measure must be 'speed' or 'lebesgue', got {self.measure!r}")
        if not self.t > 0.0:
            raise DomainError(f"t must be positive, got {self.t}")
        if not (self.a >= 0.0 and self.x > self.a and self.y > self.a):
            raise BelowBarrier(f"need x, y > a >= 0, got x={self.x}, y={self.y}, a={self.a}")


@dataclass(frozen=True)
class ModelParams:
    """Dimension n, spectral parameter lam and barrier a of the half-space {x_n > a}."""

    n: int
    lam: float = 0.0
    a: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"dimension n must be an integer >= 2, got {self.n}")
        if not self.lam >= 0.0:
            raise DomainError(f"lambda must be >= 0, got {self.lam}")
        if not self.a >= 0.0:
            raise DomainError(f"barrier a must be >= 0, got {self.a}")

    @property
    def mu(self) -> float:
        return 0.5 * (self.n - 1)

    @property
    def nu(self) -> float:
        return math.sqrt(2.0 * self.lam + self.mu * self.mu)

    def with_barrier(self, a: float) -> "ModelParams":
        return ModelParams(self.n, self.lam, a)


@dataclass(frozen=True)
class HyperbolicPoint:
    """A point (tilde, height) of the upper half-space model."""

    tilde: tuple
    height: float

    def __post_init__(self):
        object.__setattr__(self, "tilde", tuple(float(v) for v in np.atleast_1d(self.tilde)))
        if not self.height > 0.0:
            raise DomainError(f"height must be positive, got {self.height}")

    @classmethod
    def from_coords(cls, coords) -> "HyperbolicPoint":
        c = [float(v) for v in coords]
        if len(c) < 2:
            raise DimensionMismatch("a point of H^n needs at least two coordinates")
        return cls(tuple(c[:-1]), c[-1])

    @property
    def dim(self) -> int:
        return len(self.tilde) + 1

    def coords(self) -> np.ndarray:
        return np.array(self.tilde + (self.height,))

    def scaled(self, factor: float) -> "HyperbolicPoint":
        return HyperbolicPoint(tuple(factor * v for v in self.tilde), factor * self.height)


@dataclass(frozen=True)
class SimConfig:
    dt: float
    n_paths: int
    seed: int = 0
    horizon: float = 50.0
    crossing_correction: bool = True
    workers: int = 1
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (self.dt > 0.0 and self.horizon > 0.0):
            raise DomainError("dt and horizon must be positive")
        if self.dt > self.horizon / 10.0:
            raise DomainError(f"dt={self.dt} exceeds horizon/10={self.horizon / 10.0}")
        if int(self.n_paths) < 1:
            raise DomainError("n_paths must be >= 1")

    def halved(self) -> "SimConfig":
        return SimConfig(self.dt / 2.0, self.n_paths, self.seed, self.horizon,
                         self.crossing_correction, self.workers, self.extra)



@dataclass(frozen=True)
class PathFunctionalSample:
    """End state of one simulated path.

    ``A`` is the accumulated clock, ``B`` the log of the space coordinate and
    ``hit_time`` the killing time (None for a path alive at the horizon).
    """

    A: float
    B: float
    hit_time: Optional[float]
    survived: bool

    def __post_init__(self):
        if self.survived == (self.hit_time is not None):
            raise DomainError("exactly one of survived / hit_time must be set")
