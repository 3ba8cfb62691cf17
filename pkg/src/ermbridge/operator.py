"""The transformed-potential fixed-point operator and its empirical risk.

Everything is evaluated in the log domain. For samples ``X`` (N points) and
``Y`` (M points) and a positive potential ``g``:

    log D(x)  = logsumexp_k(log q(x, Y_k) - log g(Y_k)) - log M
    log C(y)  = logsumexp_i(log q(X_i, y) - clip(log D(X_i))) - log N
    Delta_j   = log g(Y_j) - log C(Y_j)

and the risk is ``loss_scale * mean_j (Delta_j - mean(Delta))^2``.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import core
from .data import as_points
from .errors import NumericError, UsageError
from .kernels import KernelParams


@dataclass(frozen=True)
class ClipBounds:
    """Band ``[d_low, d_high]`` applied to the empirical normaliser."""

    d_low: float
    d_high: float

    def __post_init__(self):
        if not (0 < self.d_low <= self.d_high):
            raise UsageError(f"need 0 < d_low <= d_high, got ({self.d_low}, {self.d_high})")

    @classmethod
    def wide(cls) -> "ClipBounds":
        """Numerically inactive band."""
        return cls(1e-300, 1e300)

    @classmethod
    def from_log(cls, lo: float, hi: float) -> "ClipBounds":
        return cls(math.exp(max(lo, -690.0)), math.exp(min(hi, 690.0)))

    @property
    def log_low(self) -> float:
        return math.log(self.d_low)

    @property
    def log_high(self) -> float:
        return math.log(self.d_high)


@dataclass(frozen=True)
class RiskConfig:
    """Loss settings. ``clip=None`` selects the data-driven band (see :func:`auto_clip_bounds`)."""

    loss_scale: float = 1.0
    clip: Optional[ClipBounds] = None
    centered: bool = True
    loss: str = "squared_log_residual"

    def __post_init__(self):
        if not self.loss_scale > 0:
            raise UsageError(f"loss_scale must be > 0, got {self.loss_scale}")
        if self.loss != "squared_log_residual":
            raise UsageError(f"unknown loss {self.loss!r}")


def logsumexp(values) -> float:
    """Max-shifted ``log sum exp``; exact for a single element."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size == 0:
        raise UsageError("logsumexp of an empty list")
    if v.size == 1:
        return float(v[0])
    mx = np.max(v)
    if mx == -np.inf:
        return -math.inf
    return float(mx + math.log(np.sum(np.exp(v - mx))))


def log_potential_values(g, Y) -> np.ndarray:
    """``log g`` at the rows of ``Y`` for a potential object or a plain callable."""
    Y = as_points(Y)
    if hasattr(g, "log_eval"):
        out = g.log_eval(Y)
    else:
        out = g(Y)
    return np.asarray(out, dtype=float).reshape(Y.shape[0])


def _check_dims(k: KernelParams, *clouds):
    for c in clouds:
        if c.shape[1] != k.dim:
            raise UsageError(f"points have dimension {c.shape[1]}, kernel has {k.dim}")


def log_D_values(X, Y, logg, k: KernelParams) -> np.ndarray:
    """``log D(X_i)`` for all rows of ``X`` given ``log g`` at the rows of ``Y``."""
    X, Y = as_points(X), as_points(Y)
    raw = core.lse_rows(X, Y, -np.asarray(logg, dtype=float), k.inv2var)
    return raw + k.log_norm - math.log(Y.shape[0])


def empirical_log_D(x, Y, g, k: KernelParams):
    """Log of the empirical normaliser at ``x`` (a point or an array of points)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = x[None, :] if single else x
    Y = as_points(Y)
    _check_dims(k, X, Y)
    out = log_D_values(X, Y, log_potential_values(g, Y), k)
    return float(out[0]) if single else out


def clip_log_D(logD, bounds: ClipBounds):
    """``log clip(exp(logD), d_low, d_high)``."""
    out = np.clip(np.asarray(logD, dtype=float), bounds.log_low, bounds.log_high)
    return float(out) if out.ndim == 0 else out


def auto_clip_bounds(logD, quantiles=(0.001, 0.999), widen: float = 10.0) -> ClipBounds:
    """Quantile band of the observed normalisers, widened by ``widen`` on both sides."""
    logD = np.asarray(logD, dtype=float)
    if not np.all(np.isfinite(logD)):
        raise NumericError("non-finite normaliser values; cannot place the clip band")
    lo, hi = np.quantile(logD, quantiles)
    return ClipBounds.from_log(lo - math.log(widen), hi + math.log(widen))


def log_C_values(y, X, logD_clipped, k: KernelParams) -> np.ndarray:
    y, X = as_points(y), as_points(X)
    raw = core.lse_rows(y, X, -np.asarray(logD_clipped, dtype=float), k.inv2var)
    return raw + k.log_norm - math.log(X.shape[0])


def empirical_C(y, X, Y, g, k: KernelParams, bounds: Optional[ClipBounds] = None):
    """``log C_hat[g](y)`` for a point or array of points ``y``.

    The normalisers ``D_hat(X_i)`` are computed once and shared by every ``y``.
    ``bounds=None`` applies the data-driven band.
    """
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    yy = y[None, :] if single else y
    X, Y = as_points(X), as_points(Y)
    _check_dims(k, yy, X, Y)
    logD = log_D_values(X, Y, log_potential_values(g, Y), k)
    if bounds is None:
        bounds = auto_clip_bounds(logD)
    out = log_C_values(yy, X, clip_log_D(logD, bounds), k)
    return float(out[0]) if single else out


@dataclass
class RiskEvaluation:
    loss: float
    delta: np.ndarray
    log_g: np.ndarray
    log_D: np.ndarray
    log_C: np.ndarray
    bounds: ClipBounds
    clip_active_frac: float
    grad: Optional[np.ndarray] = None


def evaluate_risk(g, X, Y, k: KernelParams, cfg: RiskConfig = RiskConfig(),
                  gradient: bool = False) -> RiskEvaluation:
    """Forward pass of the empirical risk, optionally with the parameter gradient.

    The gradient is the exact reverse-mode derivative through both
    log-sum-exp stages; it needs ``g.vjp``. Clip bounds are treated as constants.
    """
    X, Y = as_points(X), as_points(Y)
    _check_dims(k, X, Y)
    N, M = X.shape[0], Y.shape[0]
    V = log_potential_values(g, Y)
    if not np.all(np.isfinite(V)):
        raise NumericError("potential returned non-finite log values")
    raw_D = core.lse_rows(X, Y, -V, k.inv2var)
    logD = raw_D + k.log_norm - math.log(M)
    bounds = cfg.clip if cfg.clip is not None else auto_clip_bounds(logD)
    lD = clip_log_D(logD, bounds)
    inside = (logD > bounds.log_low) & (logD < bounds.log_high)
    raw_C = core.lse_rows(Y, X, -lD, k.inv2var)
    logC = raw_C + k.log_norm - math.log(N)
    delta = V - logC
    resid = delta - delta.mean() if cfg.centered else delta
    loss = cfg.loss_scale * float(np.mean(resid * resid))
    ev = RiskEvaluation(loss, delta, V, logD, logC, bounds, float(1.0 - inside.mean()))
    if not gradient:
        return ev
    if M < 2 and cfg.centered:
        raise UsageError("centered risk gradient needs at least two Y points")
    r = (2.0 * cfg.loss_scale / M) * resid
    dlD = core.softmax_apply_t(Y, X, -lD, raw_C, r, k.inv2var)
    a = np.where(inside, dlD, 0.0)
    dV = r - core.softmax_apply_t(X, Y, -V, raw_D, a, k.inv2var)
    ev.grad = g.vjp(Y, dV)
    return ev


def empirical_risk(g, X, Y, k: KernelParams, cfg: RiskConfig = RiskConfig()) -> float:
    return evaluate_risk(g, X, Y, k, cfg).loss


# ---------------------------------------------------------------------------
# population operator by tensor quadrature (verification only)


@dataclass(frozen=True)
class Quadrature:
    """Tensor Gauss-Legendre rule on the box ``[lo, hi]^d``."""

    lo: float = -10.0
    hi: float = 10.0
    nodes: int = 200
    tol: float = 1e-8

    def rule(self, dim: int, nodes: Optional[int] = None):
        n = nodes or self.nodes
        x, w = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (self.hi - self.lo)
        x = self.lo + half * (x + 1.0)
        w = w * half
        grids = np.meshgrid(*([x] * dim), indexing="ij")
        wgrids = np.meshgrid(*([w] * dim), indexing="ij")
        pts = np.stack([gg.ravel() for gg in grids], axis=1)
        wts = np.prod(np.stack([gg.ravel() for gg in wgrids], axis=1), axis=1)
        return pts, wts


def _population_log_C(y, rho0, rhoT, g, k, quad, nodes):
    pts, wts = quad.rule(k.dim, nodes)
    with np.errstate(divide="ignore"):
        log_w0 = np.log(wts) + np.log(np.asarray(rho0(pts), dtype=float))
        log_wT = np.log(wts) + np.log(np.asarray(rhoT(pts), dtype=float))
    logg = log_potential_values(g, pts)
    logD = core.lse_rows(pts, pts, log_wT - logg, k.inv2var) + k.log_norm
    return core.lse_rows(y, pts, log_w0 - logD, k.inv2var) + k.log_norm


def population_C(y, rho0: Callable, rhoT: Callable, g, k: KernelParams,
                 quad: Quadrature = Quadrature()):
    """``C[g](y) = int q(x, y) rho0(x) / D_g(x) dx`` with both integrals by quadrature.

    The rule is run at ``nodes`` and ``2 * nodes``; relative disagreement above
    ``quad.tol`` raises :class:`NumericError`.
    """
    if k.dim > 2:
        raise UsageError("population operator quadrature limited to d <= 2")
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1 and k.dim > 1 or y.ndim == 0
    yy = y.reshape(-1, k.dim)
    coarse = _population_log_C(yy, rho0, rhoT, g, k, quad, quad.nodes)
    fine = _population_log_C(yy, rho0, rhoT, g, k, quad, 2 * quad.nodes)
    err = np.max(np.abs(np.expm1(coarse - fine)))
    if not err <= quad.tol:
        raise NumericError(f"population quadrature unresolved: node doubling changes C by {err:.3g}")
    out = np.exp(fine)
    return float(out[0]) if single else out
