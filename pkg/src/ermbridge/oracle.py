"""Reference solutions of the fixed-point equation by direct iteration.

On finite supports the map ``g <- C[g]`` is a Sinkhorn-type iteration and
converges linearly. It is used as ground truth for the learned potentials.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import core
from .data import as_points
from .errors import ConvergenceError, NumericError, UsageError
from .kernels import KernelParams
from .potential import TablePotential


@dataclass
class DiscretePotential:
    """Fixed point on a finite support, gauge-fixed to weighted mean ``log g = 0``."""

    support: np.ndarray
    log_values: np.ndarray
    iterations: int
    residual: float
    history: List[float] = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return np.exp(self.log_values)

    def as_log_potential(self) -> TablePotential:
        return TablePotential(self.support, self.log_values)


def _log_weights(w, n):
    if w is None:
        return np.full(n, -math.log(n))
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size != n or np.any(w < 0) or not w.sum() > 0:
        raise UsageError("weights must be non-negative with positive total")
    with np.errstate(divide="ignore"):
        return np.log(w / w.sum())


def _log_C(X, Y, logg, k, la, lb):
    raw_D = core.lse_rows(X, Y, lb - logg, k.inv2var)
    raw_C = core.lse_rows(Y, X, la - raw_D, k.inv2var)
    return raw_C  # the kernel normaliser cancels between the two stages


def fixed_point_iterate(X, Y, k: KernelParams, tol: float = 1e-10, max_iter: int = 10_000,
                        weights_x=None, weights_y=None, raise_on_fail: bool = True
                        ) -> DiscretePotential:
    """Iterate ``g <- C[g]`` from ``g = 1`` until ``max |log g - log C[g]| < tol``.

    ``history[i]`` is the residual after ``i`` updates and ``iterations`` counts
    operator evaluations, so an already-fixed start reports one iteration with
    ``history == [0.0]``. Optional weights turn the empirical averages into
    quadrature sums.
    """
    X, Y = as_points(X), as_points(Y)
    if X.shape[1] != k.dim or Y.shape[1] != k.dim:
        raise UsageError("point dimension does not match the kernel")
    if not tol > 0 or max_iter < 0:
        raise UsageError("need tol > 0 and max_iter >= 0")
    la = _log_weights(weights_x, X.shape[0])
    lb = _log_weights(weights_y, Y.shape[0])
    b = np.exp(lb)
    logg = np.zeros(Y.shape[0])
    history = []
    it = 0
    while True:
        logC = _log_C(X, Y, logg, k, la, lb)
        if not np.all(np.isfinite(logC)):
            raise NumericError("non-finite operator value during fixed-point iteration")
        delta = logg - logC
        res = float(np.max(np.abs(delta - b @ delta)))
        history.append(res)
        if res < tol:
            break
        if it >= max_iter:
            if raise_on_fail:
                raise ConvergenceError(f"no convergence after {it} updates (residual {res:.3g})",
                                       residual=res, iterations=len(history))
            break
        logg = logC - b @ logC
        it += 1
    logg = logg - b @ logg
    return DiscretePotential(Y.copy(), logg, len(history), history[-1], history)


def coupling(X, Y, k: KernelParams, pot: DiscretePotential, weights_x=None, weights_y=None):
    """Coupling matrix ``pi_ij`` implied by a discrete potential."""
    X, Y = as_points(X), as_points(Y)
    la = _log_weights(weights_x, X.shape[0])
    lb = _log_weights(weights_y, Y.shape[0])
    off = lb - pot.log_values
    raw_D = core.lse_rows(X, Y, off, k.inv2var)
    diff = X[:, None, :] - Y[None, :, :]
    logits = -np.sum(diff * diff, axis=-1) * k.inv2var + off[None, :]
    return np.exp(logits - raw_D[:, None] + la[:, None])


@dataclass
class GridField:
    """Potential sampled on a 1-d grid, interpolated linearly in ``log g``."""

    grid: np.ndarray
    log_values: np.ndarray
    iterations: int = 0

    def log_eval(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).reshape(-1)
        return np.interp(y, self.grid, self.log_values)

    def __call__(self, y):
        return np.exp(self.log_eval(y))


def _gauss_weights(x, s):
    w = np.exp(-0.5 * (x / s) ** 2)
    return w / w.sum()


def _grid_solve(x, s0, sT, T, tol, max_iter):
    k = KernelParams(1, T)
    pot = fixed_point_iterate(x[:, None], x[:, None], k, tol=tol, max_iter=max_iter,
                              weights_x=_gauss_weights(x, s0), weights_y=_gauss_weights(x, sT))
    return pot


def gaussian_closed_form_check(s0: float, sT: float, T: float, grid=None,
                               tol: float = 1e-12, max_iter: int = 20_000,
                               refine_tol: float = 1e-6) -> GridField:
    """Fixed point for centred Gaussian marginals in one dimension, on a uniform grid.

    The grid is refined once (midpoints inserted); if the two solutions differ by
    more than ``refine_tol`` relative sup-norm the result is rejected.
    """
    if not (s0 > 0 and sT > 0 and T > 0):
        raise UsageError("standard deviations and horizon must be positive")
    if grid is None:
        half = 8.0 * max(s0, sT)
        grid = np.linspace(-half, half, 401)
    x = np.asarray(grid, dtype=float).reshape(-1)
    if x.size < 3 or np.any(np.diff(x) <= 0):
        raise UsageError("grid must be strictly increasing with at least 3 points")
    coarse = _grid_solve(x, s0, sT, T, tol, max_iter)
    fine_x = np.empty(2 * x.size - 1)
    fine_x[0::2] = x
    fine_x[1::2] = 0.5 * (x[:-1] + x[1:])
    fine = _grid_solve(fine_x, s0, sT, T, tol, max_iter)
    a = coarse.log_values
    b = fine.log_values[0::2]
    # both are gauge-fixed, but with slightly different weights; align before comparing
    shift = np.mean(b - a)
    ga, gb = np.exp(a + shift), np.exp(b)
    err = float(np.max(np.abs(ga - gb)) / np.max(gb))
    if err > refine_tol:
        raise NumericError(f"grid fixed point not resolved: refinement changes it by {err:.3g}")
    return GridField(x, a, coarse.iterations)
