"""Bridge sampling with the drift induced by a learned potential.

For reference targets ``y_j`` with cached ``log phi(y_j)`` the time-evolved
log potential is

    log h(t, x) = logsumexp_j(-|x - y_j|^2 / (2 nu_t) - log phi(y_j)),
    nu_t = sigma_t^2 (T - t),

and the drift is ``sigma_t^2 * grad_x log h``, a softmax-weighted pull toward
the references.
"""

import csv
from dataclasses import dataclass
from typing import Dict, Sequence

import numpy as np

from . import core
from .data import PointCloud, as_points, make_rng
from .errors import NumericError, UsageError
from .kernels import SdeSchedule, bridge_variance, noise_sigma
from .operator import log_potential_values


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (K + 1, d)


@dataclass
class DriftContext:
    """Frozen sampling inputs: references, their cached log potentials and the schedule."""

    reference_targets: np.ndarray
    log_phi: np.ndarray
    schedule: SdeSchedule

    def __post_init__(self):
        self.reference_targets = as_points(self.reference_targets)
        self.log_phi = np.asarray(self.log_phi, dtype=float).reshape(-1)
        if self.reference_targets.shape[0] == 0:
            raise UsageError("empty reference set")
        if self.log_phi.size != self.reference_targets.shape[0]:
            raise UsageError("cache length differs from the number of references")
        if not np.all(np.isfinite(self.log_phi)):
            raise NumericError("non-finite log potential on the reference set")

    @classmethod
    def build(cls, Y_ref, potential, schedule: SdeSchedule) -> "DriftContext":
        Y_ref = as_points(Y_ref)
        if Y_ref.shape[0] == 0:
            raise UsageError("empty reference set")
        return cls(Y_ref, log_potential_values(potential, Y_ref), schedule)

    @property
    def dim(self) -> int:
        return self.reference_targets.shape[1]


def _batch(x, dim):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x.reshape(1, -1) if single else x
    if xb.shape[1] != dim:
        raise UsageError(f"points have dimension {xb.shape[1]}, references have {dim}")
    return xb, single


def log_h(x, t: float, ctx: DriftContext):
    """Time-evolved log potential; ``x`` is a point or an ``(n, d)`` array."""
    xb, single = _batch(x, ctx.dim)
    nu = bridge_variance(t, ctx.schedule)
    out = core.lse_rows(xb, ctx.reference_targets, -ctx.log_phi, 0.5 / nu)
    return float(out[0]) if single else out


def softmax_weights(x, t: float, ctx: DriftContext) -> np.ndarray:
    """Weights ``w_j`` of the references for a single point ``x``."""
    xb, _ = _batch(x, ctx.dim)
    nu = bridge_variance(t, ctx.schedule)
    diff = xb[0][None, :] - ctx.reference_targets
    L = -np.sum(diff * diff, axis=1) / (2 * nu) - ctx.log_phi
    w = np.exp(L - L.max())
    return w / w.sum()


def drift(x, t: float, ctx: DriftContext):
    """``sigma_t^2 / nu_t * (sum_j w_j y_j - x)``; vectorised over rows of ``x``."""
    xb, single = _batch(x, ctx.dim)
    nu = bridge_variance(t, ctx.schedule)
    sig2 = noise_sigma(t, ctx.schedule) ** 2
    _, mean = core.softmax_mean(xb, ctx.reference_targets, -ctx.log_phi, 0.5 / nu)
    u = (sig2 / nu) * (mean - xb)
    return u[0] if single else u


def _noise(n, steps, dim, seed, first_id=0):
    """Per-trajectory standard normal increments, shape ``(n, steps, dim)``."""
    out = np.empty((n, steps, dim))
    for i in range(n):
        out[i] = make_rng(seed, "trajectory", first_id + i).standard_normal((steps, dim))
    return out


def _simulate(X0, ctx, seed, record, noise=True):
    sched = ctx.schedule
    times = sched.grid()
    K, dt = sched.steps, sched.dt
    x = np.array(X0, dtype=float)
    xi = _noise(x.shape[0], K, x.shape[1], seed) if noise else None
    sq = np.sqrt(dt)
    recorded = {}
    if 0 in record:
        recorded[0] = x.copy()
    for k in range(K):
        t = times[k]
        x = x + drift(x, t, ctx) * dt
        if noise:
            x += noise_sigma(t, sched) * sq * xi[:, k, :]
        if not np.all(np.isfinite(x)):
            raise NumericError(f"non-finite state after step {k}")
        if k + 1 in record:
            recorded[k + 1] = x.copy()
    return times, recorded


def euler_maruyama(x0, ctx: DriftContext, seed: int = 0, noise: bool = True) -> Trajectory:
    """Single trajectory from ``x0``. ``noise=False`` integrates the drift only."""
    xb, _ = _batch(x0, ctx.dim)
    steps = range(ctx.schedule.steps + 1)
    times, rec = _simulate(xb, ctx, seed, set(steps), noise)
    return Trajectory(times, np.stack([rec[k][0] for k in steps]))


def _grid_index(t, times, T):
    k = int(np.argmin(np.abs(times - t)))
    if abs(times[k] - t) > 1e-9 * max(T, 1.0):
        raise UsageError(f"snapshot time {t} is not a grid node")
    return k


def sample_bridge(X0, ctx: DriftContext, snapshot_times: Sequence[float],
                  seed: int = 0) -> Dict[float, PointCloud]:
    """Simulate one trajectory per start point and gather clouds at the snapshot times.

    Trajectory ``i`` draws its noise from its own stream, so results do not
    depend on how many other trajectories are simulated alongside it.
    """
    X0 = as_points(X0)
    if X0.shape[1] != ctx.dim:
        raise UsageError("start points and references differ in dimension")
    times = ctx.schedule.grid()
    idx = {float(t): _grid_index(float(t), times, ctx.schedule.horizon) for t in snapshot_times}
    _, rec = _simulate(X0, ctx, seed, set(idx.values()))
    return {t: PointCloud(rec[k]) for t, k in idx.items()}


def write_samples_csv(path, snapshots: Dict[float, PointCloud]) -> None:
    """Rows ``t,traj_id,x0,x1,...``, one per snapshot and trajectory."""
    items = sorted(snapshots.items())
    dim = as_points(items[0][1]).shape[1] if items else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "traj_id"] + [f"x{i}" for i in range(dim)])
        for t, cloud in items:
            for i, row in enumerate(as_points(cloud)):
                w.writerow([repr(float(t)), i] + [repr(float(v)) for v in row])
