"""Minibatch training of a potential by minimising the empirical risk."""

import csv
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from .data import as_points, make_rng
from .errors import NumericError, TrainingAbort, UsageError
from .kernels import KernelParams
from .operator import RiskConfig, auto_clip_bounds, evaluate_risk, log_D_values, \
    log_potential_values
from .potential import HermitePotential

log = logging.getLogger(__name__)


class Optimizer(str, Enum):
    SGD = "sgd"
    ADAM = "adam"


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 1000
    lr: float = 2e-3
    epochs: int = 1500
    loss_scale: float = 1.0
    seed: int = 0
    optimizer: Optimizer = Optimizer.ADAM
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "optimizer", Optimizer(self.optimizer))
        if int(self.batch_size) < 2:
            raise UsageError(f"batch_size must be >= 2, got {self.batch_size}")
        if not self.lr > 0:
            raise UsageError(f"lr must be > 0, got {self.lr}")
        if int(self.epochs) < 0:
            raise UsageError(f"epochs must be >= 0, got {self.epochs}")
        if not self.loss_scale > 0:
            raise UsageError(f"loss_scale must be > 0, got {self.loss_scale}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.eps > 0):
            raise UsageError("invalid moment parameters")


@dataclass
class OptimizerState:
    params: np.ndarray
    m: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    step: int = 0


def optimizer_step(state: OptimizerState, grads, cfg: TrainConfig) -> OptimizerState:
    """One Sgd or bias-corrected adaptive-moment update; returns a new state."""
    g = np.asarray(grads, dtype=float)
    if g.shape != state.params.shape:
        raise UsageError("gradient shape does not match parameters")
    t = state.step + 1
    if cfg.optimizer is Optimizer.SGD:
        return OptimizerState(state.params - cfg.lr * g, state.m, state.v, t)
    m = np.zeros_like(g) if state.m is None else state.m
    v = np.zeros_like(g) if state.v is None else state.v
    m = cfg.beta1 * m + (1 - cfg.beta1) * g
    v = cfg.beta2 * v + (1 - cfg.beta2) * g * g
    mhat = m / (1 - cfg.beta1 ** t)
    vhat = v / (1 - cfg.beta2 ** t)
    return OptimizerState(state.params - cfg.lr * mhat / (np.sqrt(vhat) + cfg.eps), m, v, t)


@dataclass
class StepRecord:
    step: int
    loss: float
    clip_active_frac: float


@dataclass
class TrainReport:
    epoch_loss: List[float] = field(default_factory=list)
    steps: List[StepRecord] = field(default_factory=list)
    wall_time: float = 0.0
    clip_activations: int = 0
    ball_projections: int = 0
    potential: object = None


def refresh_clip_bounds(p, X, Y, k: KernelParams):
    """Data-driven clip band from the full sample sets."""
    return auto_clip_bounds(log_D_values(X, Y, log_potential_values(p, Y), k))


def train(cfg: TrainConfig, X, Y, p, k: KernelParams,
          risk: Optional[RiskConfig] = None) -> TrainReport:
    """Train ``p`` in place and return the loss trace.

    Each epoch is one pass over shuffled ``Y`` in batches of ``batch_size``
    (a trailing partial batch is dropped). Every step draws its own ``X`` batch
    without replacement. The data-driven clip band, when used, is refreshed at
    the start of each epoch.
    """
    X, Y = as_points(X), as_points(Y)
    B = int(cfg.batch_size)
    if X.shape[0] < B or Y.shape[0] < B:
        raise UsageError(f"need at least batch_size={B} points in X and Y")
    risk = risk or RiskConfig(loss_scale=cfg.loss_scale)
    rng = make_rng(cfg.seed, "batches")
    report = TrainReport(potential=p)
    state = OptimizerState(p.get_params())
    per_epoch = Y.shape[0] // B
    t0 = time.perf_counter()
    step = 0
    for epoch in range(int(cfg.epochs)):
        step_cfg = risk
        if risk.clip is None:
            try:
                bounds = refresh_clip_bounds(p, X, Y, k)
            except NumericError as exc:
                norm = float(np.linalg.norm(state.params))
                raise TrainingAbort(f"clip refresh failed at step {step}: {exc}", step=step,
                                    batch_indices=None, param_norm=norm) from exc
            step_cfg = RiskConfig(risk.loss_scale, bounds, risk.centered, risk.loss)
        order = rng.permutation(Y.shape[0])
        losses = []
        for b in range(per_epoch):
            yi = order[b * B:(b + 1) * B]
            xi = rng.choice(X.shape[0], size=B, replace=False)
            try:
                ev = evaluate_risk(p, X[xi], Y[yi], k, step_cfg, gradient=True)
                bad = not (np.isfinite(ev.loss) and np.all(np.isfinite(ev.grad)))
            except NumericError as exc:
                bad, ev = True, exc
            if bad:
                norm = float(np.linalg.norm(state.params))
                raise TrainingAbort(f"non-finite loss or gradient at step {step} "
                                    f"(parameter norm {norm:.4g})",
                                    step=step, batch_indices=(xi, yi), param_norm=norm)
            state = optimizer_step(state, ev.grad, cfg)
            p.set_params(state.params)
            if isinstance(p, HermitePotential) and p.project_ball_():
                report.ball_projections += 1
                state.params = p.get_params()
            report.steps.append(StepRecord(step, ev.loss, ev.clip_active_frac))
            report.clip_activations += int(round(ev.clip_active_frac * B))
            losses.append(ev.loss)
            step += 1
        report.epoch_loss.append(float(np.mean(losses)))
        if epoch % 100 == 0:
            log.info("epoch %d loss %.6g", epoch, report.epoch_loss[-1])
    report.wall_time = time.perf_counter() - t0
    return report


def write_loss_trace(path, report: TrainReport) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "loss", "clip_active_frac"])
        for s in report.steps:
            w.writerow([s.step, repr(s.loss), repr(s.clip_active_frac)])
