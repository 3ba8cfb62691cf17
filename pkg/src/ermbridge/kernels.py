"""Gaussian reference kernel, noise schedules and the sampler's bridge variance."""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import UsageError

VARIANCE_FLOOR = 1e-8


@dataclass(frozen=True)
class KernelParams:
    """Isotropic Gaussian transition kernel ``q_T`` with variance ``variance``."""

    dim: int
    variance: float

    def __post_init__(self):
        if int(self.dim) < 1:
            raise UsageError(f"kernel dim must be >= 1, got {self.dim}")
        if not self.variance > 0:
            raise UsageError(f"kernel variance must be > 0, got {self.variance}")

    @property
    def inv2var(self) -> float:
        return 0.5 / self.variance

    @property
    def log_norm(self) -> float:
        """``-d/2 log(2 pi T)``, the log normalising constant."""
        return -0.5 * self.dim * math.log(2.0 * math.pi * self.variance)


class ScheduleKind(str, Enum):
    CONSTANT = "constant"
    COSINE = "cosine"


@dataclass(frozen=True)
class SdeSchedule:
    """Time horizon, step count and noise level of the sampling SDE.

    ``sigma_min`` defaults to ``0.01 * sigma_end`` for the cosine kind.
    """

    horizon: float = 1.0
    steps: int = 100
    sigma_end: float = 1.0
    sigma_min: Optional[float] = None
    kind: ScheduleKind = ScheduleKind.CONSTANT

    def __post_init__(self):
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        if self.sigma_min is None:
            object.__setattr__(self, "sigma_min", 0.01 * self.sigma_end)
        if not self.horizon > 0:
            raise UsageError(f"horizon must be > 0, got {self.horizon}")
        if int(self.steps) < 1:
            raise UsageError(f"steps must be >= 1, got {self.steps}")
        if self.sigma_end < 0 or self.sigma_min < 0:
            raise UsageError("noise levels must be nonnegative")
        if self.sigma_min > self.sigma_end:
            raise UsageError("sigma_min must not exceed sigma_end")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    def grid(self) -> np.ndarray:
        """The ``steps + 1`` uniform time nodes ``k * dt``; the last is exactly ``horizon``."""
        t = np.arange(self.steps + 1) * self.dt
        t[-1] = self.horizon
        return t


def _as_points(x, y, dim):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1:] != (dim,) or y.shape[-1:] != (dim,):
        raise UsageError(f"points must have trailing dimension {dim}, got {x.shape} and {y.shape}")
    return x, y


def log_gauss_kernel(x, y, params: KernelParams):
    """``log q_T(x, y) = -d/2 log(2 pi T) - |x - y|^2 / (2T)``.

    Broadcasts over leading axes of ``x`` and ``y``.
    """
    x, y = _as_points(x, y, params.dim)
    sq = np.sum((x - y) ** 2, axis=-1)
    out = params.log_norm - sq * params.inv2var
    return float(out) if np.ndim(out) == 0 else out


def noise_sigma(t: float, sched: SdeSchedule) -> float:
    T = sched.horizon
    if not (0.0 <= t <= T * (1 + 1e-12)):
        raise UsageError(f"time {t} outside [0, {T}]")
    if sched.kind is ScheduleKind.CONSTANT:
        return float(sched.sigma_end)
    return float(sched.sigma_min + (sched.sigma_end - sched.sigma_min)
                 * 0.5 * (1.0 - math.cos(math.pi * t / T)))


def bridge_variance(t: float, sched: SdeSchedule) -> float:
    """``sigma_t^2 (T - t)``, floored at ``VARIANCE_FLOOR``; undefined at ``t >= T``."""
    if t >= sched.horizon:
        raise UsageError(f"bridge variance degenerates at t={t} >= T={sched.horizon}")
    return max(noise_sigma(t, sched) ** 2 * (sched.horizon - t), VARIANCE_FLOOR)
