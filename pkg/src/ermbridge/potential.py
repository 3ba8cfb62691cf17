"""Parametric classes for ``log g``.

Every potential exposes the same small interface used by the operator,
trainer and sampler:

* ``dim``                     input dimension
* ``log_eval(Y) -> (m,)``      log potential at the rows of ``Y``
* ``get_params() / set_params(theta)``  flat parameter vector
* ``vjp(Y, cot) -> grad``     ``sum_k cot[k] * d log_eval(Y)[k] / d theta``
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .data import as_points, make_rng
from .errors import NumericError, UsageError
from .hermite import HermiteBasis, enumerate_multiindices
from .kernels import KernelParams

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
BALL_RADIUS_CAP = 1e6


@dataclass(frozen=True)
class GaussianEnvelope:
    """Band ``c_lo * exp(-a_lo * |y|^2) <= g(y) <= c_hi``."""

    c_lo: float
    a_lo: float
    c_hi: float

    def __post_init__(self):
        if not (self.c_lo > 0 and self.c_hi > 0 and self.a_lo > 0):
            raise UsageError("envelope constants must be positive")
        if self.c_lo > self.c_hi:
            raise UsageError(f"c_lo={self.c_lo} exceeds c_hi={self.c_hi}")

    def lower(self, Y) -> np.ndarray:
        Y = as_points(Y)
        return self.c_lo * np.exp(-self.a_lo * np.sum(Y * Y, axis=1))

    def clip(self, values, Y) -> np.ndarray:
        return np.clip(np.asarray(values, dtype=float), self.lower(Y), self.c_hi)

    def log_bounds(self, Y):
        Y = as_points(Y)
        lo = math.log(self.c_lo) - self.a_lo * np.sum(Y * Y, axis=1)
        return lo, math.log(self.c_hi)


def default_ball_radius(degree: int, dim: int) -> float:
    return float(min((degree + 1) * dim ** dim, BALL_RADIUS_CAP))


class LogPotential:
    """Base class; subclasses implement ``log_eval`` and, if trainable, ``vjp``."""

    dim: int

    def log_eval(self, Y) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, Y) -> np.ndarray:
        return np.exp(self.log_eval(Y))

    def get_params(self) -> np.ndarray:
        return np.zeros(0)

    def set_params(self, theta) -> None:
        if np.asarray(theta).size:
            raise UsageError(f"{type(self).__name__} has no parameters")

    @property
    def n_params(self) -> int:
        return self.get_params().size

    def vjp(self, Y, cot) -> np.ndarray:
        return np.zeros(0)


class FunctionPotential(LogPotential):
    """Fixed potential from a vectorised ``log g`` callable."""

    def __init__(self, log_fn: Callable, dim: int):
        self.log_fn = log_fn
        self.dim = int(dim)

    def log_eval(self, Y):
        Y = as_points(Y)
        return np.asarray(self.log_fn(Y), dtype=float).reshape(Y.shape[0])


def constant_potential(dim: int, value: float = 1.0) -> FunctionPotential:
    lv = math.log(value)
    return FunctionPotential(lambda Y: np.full(Y.shape[0], lv), dim)


class TablePotential(LogPotential):
    """Lookup table on a finite support; exact at support points.

    Away from the support the value of the nearest support point is returned,
    which is enough for evaluating risks on the table's own samples.
    """

    def __init__(self, support, log_values):
        self.support = as_points(support).copy()
        self.log_values = np.asarray(log_values, dtype=float).reshape(-1)
        if self.log_values.size != self.support.shape[0]:
            raise UsageError("table support and values differ in length")
        self.dim = self.support.shape[1]

    def log_eval(self, Y):
        Y = as_points(Y)
        from scipy.spatial import cKDTree

        _, idx = cKDTree(self.support).query(Y)
        return self.log_values[idx]


class HermitePotential(LogPotential):
    """Scaled Hermite expansion with a norm-ball and optional envelope clip."""

    kind = "hermite"

    def __init__(self, basis: HermiteBasis, coeffs=None, ball_radius: Optional[float] = None,
                 envelope: Optional[GaussianEnvelope] = None, clip_enabled: bool = True):
        self.basis = basis
        self.dim = basis.dim
        if coeffs is None:
            coeffs = np.zeros(len(basis))
            # psi_0 scaled to equal 1 at the origin
            coeffs[0] = math.pi ** (self.dim / 4) * basis.scale ** (-self.dim / 2)
        self.coeffs = np.asarray(coeffs, dtype=float).copy()
        if self.coeffs.shape != (len(basis),):
            raise UsageError(f"expected {len(basis)} coefficients, got {self.coeffs.shape}")
        self.ball_radius = (default_ball_radius(basis.degree, self.dim)
                            if ball_radius is None else float(ball_radius))
        self.envelope = envelope
        self.clip_enabled = clip_enabled
        if clip_enabled and envelope is None:
            raise UsageError("clip_enabled requires an envelope")

    @classmethod
    def for_kernel(cls, degree: int, k: KernelParams, **kw) -> "HermitePotential":
        return cls(HermiteBasis.for_kernel(degree, k.dim, k.variance), **kw)

    def raw_eval(self, Y) -> np.ndarray:
        return self.basis.evaluate(as_points(Y)) @ self.coeffs

    def _forward(self, Y):
        Y = as_points(Y)
        phi = self.basis.evaluate(Y)
        raw = phi @ self.coeffs
        if not self.clip_enabled:
            if np.any(raw <= 0):
                bad = int(np.sum(raw <= 0))
                log.error("Hermite expansion non-positive at %d of %d points", bad, raw.size)
                raise NumericError(f"Hermite expansion is non-positive at {bad} points "
                                   "with clipping disabled")
            return phi, np.log(raw), np.ones(raw.size, dtype=bool)
        lo = self.envelope.lower(Y)
        val = np.clip(raw, lo, self.envelope.c_hi)
        inside = (raw > lo) & (raw < self.envelope.c_hi)
        with np.errstate(divide="ignore"):
            out = np.log(val)
        return phi, out, inside

    def log_eval(self, Y):
        return self._forward(Y)[1]

    def get_params(self):
        return self.coeffs.copy()

    def set_params(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != self.coeffs.shape:
            raise UsageError("parameter shape mismatch")
        self.coeffs = theta.copy()

    def vjp(self, Y, cot):
        phi, logv, inside = self._forward(Y)
        # d log(raw)/dc = phi / raw; zero where the clip saturates
        w = np.where(inside, np.asarray(cot, dtype=float) * np.exp(-logv), 0.0)
        return phi.T @ w

    def project_ball_(self) -> bool:
        """In-place ball projection; returns whether it was active."""
        sq = float(self.coeffs @ self.coeffs)
        if sq > self.ball_radius:
            self.coeffs *= math.sqrt(self.ball_radius / sq)
            return True
        return False

    def copy(self) -> "HermitePotential":
        return HermitePotential(self.basis, self.coeffs, self.ball_radius, self.envelope,
                                self.clip_enabled)


def project_ball(p: HermitePotential) -> HermitePotential:
    out = p.copy()
    out.project_ball_()
    return out


def default_envelope(p: HermitePotential, Y, horizon: float) -> GaussianEnvelope:
    """Permissive band built from the unclipped initial potential on ``Y``."""
    top = float(np.max(p.raw_eval(Y)))
    if not top > 0:
        raise NumericError("initial Hermite potential has no positive value on the data")
    c_hi = 10.0 * top
    return GaussianEnvelope(c_lo=1e-6 * c_hi, a_lo=1.0 / horizon, c_hi=c_hi)


def hermite_with_envelope(degree: int, k: KernelParams, Y, horizon: float,
                          **kw) -> HermitePotential:
    p = HermitePotential.for_kernel(degree, k, clip_enabled=False)
    env = default_envelope(p, Y, horizon)
    return HermitePotential(p.basis, p.coeffs, kw.get("ball_radius"), env,
                            kw.get("clip_enabled", True))


class MlpPotential(LogPotential):
    """``[d, h, h, 1]`` tanh network whose scalar output is ``log g``."""

    kind = "mlp"

    def __init__(self, dim: int, hidden: int, seed: int = 0, params=None,
                 envelope: Optional[GaussianEnvelope] = None):
        self.dim = int(dim)
        self.hidden = int(hidden)
        if self.dim < 1 or self.hidden < 1:
            raise UsageError("dim and hidden must be >= 1")
        self.widths = [self.dim, self.hidden, self.hidden, 1]
        self.envelope = envelope
        if params is None:
            rng = make_rng(seed, "mlp-init")
            parts = []
            for fan_in, fan_out in zip(self.widths[:-1], self.widths[1:]):
                bound = 1.0 / math.sqrt(fan_in)
                parts.append(rng.uniform(-bound, bound, size=fan_in * fan_out))
                parts.append(np.zeros(fan_out))
            params = np.concatenate(parts)
        self.set_params(params)

    @property
    def _shapes(self):
        out = []
        for fan_in, fan_out in zip(self.widths[:-1], self.widths[1:]):
            out += [(fan_in, fan_out), (fan_out,)]
        return out

    def get_params(self):
        return self.theta.copy()

    def set_params(self, theta):
        theta = np.asarray(theta, dtype=float).reshape(-1)
        size = sum(int(np.prod(s)) for s in self._shapes)
        if theta.size != size:
            raise UsageError(f"expected {size} parameters, got {theta.size}")
        self.theta = theta.copy()
        self.layers = []
        pos = 0
        for s in self._shapes:
            n = int(np.prod(s))
            self.layers.append(self.theta[pos:pos + n].reshape(s))
            pos += n

    def shift_output(self, offset: float) -> None:
        """Add a constant to ``log g`` (multiplies the potential by ``exp(offset)``)."""
        self.theta[-1] += offset

    def _forward(self, Y):
        W1, b1, W2, b2, W3, b3 = self.layers
        h1 = np.tanh(Y @ W1 + b1)
        h2 = np.tanh(h1 @ W2 + b2)
        out = (h2 @ W3)[:, 0] + b3[0]
        return h1, h2, out

    def log_eval(self, Y):
        Y = as_points(Y)
        if Y.shape[1] != self.dim:
            raise UsageError(f"points have dimension {Y.shape[1]}, network expects {self.dim}")
        out = self._forward(Y)[2]
        if self.envelope is not None:
            lo, hi = self.envelope.log_bounds(Y)
            out = np.clip(out, lo, hi)
        return out

    def vjp(self, Y, cot):
        Y = as_points(Y)
        W1, b1, W2, b2, W3, b3 = self.layers
        h1, h2, out = self._forward(Y)
        c = np.asarray(cot, dtype=float).reshape(-1)
        if self.envelope is not None:
            lo, hi = self.envelope.log_bounds(Y)
            c = np.where((out > lo) & (out < hi), c, 0.0)
        gW3 = h2.T @ c[:, None]
        gb3 = np.array([c.sum()])
        d2 = (c[:, None] @ W3.T) * (1.0 - h2 * h2)
        gW2 = h1.T @ d2
        gb2 = d2.sum(axis=0)
        d1 = (d2 @ W2.T) * (1.0 - h1 * h1)
        gW1 = Y.T @ d1
        gb1 = d1.sum(axis=0)
        return np.concatenate([a.ravel() for a in (gW1, gb1, gW2, gb2, gW3, gb3)])

    def copy(self) -> "MlpPotential":
        return MlpPotential(self.dim, self.hidden, params=self.theta, envelope=self.envelope)


def param_gradient(p: LogPotential, X, Y, k: KernelParams, cfg=None) -> np.ndarray:
    """Exact gradient of the empirical risk with respect to the parameters of ``p``."""
    from .operator import RiskConfig, evaluate_risk

    X, Y = as_points(X), as_points(Y)
    if X.shape[0] < 2 or Y.shape[0] < 2:
        raise UsageError("gradient needs batches of at least two points")
    return evaluate_risk(p, X, Y, k, cfg or RiskConfig(), gradient=True).grad


def clip_contraction_check(gstar: Callable, f: Callable, env: GaussianEnvelope, grid) -> bool:
    """True iff clipping ``f`` into the envelope never moves it further from ``gstar``."""
    grid = as_points(grid)
    gs = np.asarray(gstar(grid), dtype=float)
    lo = env.lower(grid)
    if np.any(gs < lo) or np.any(gs > env.c_hi):
        raise UsageError("reference field lies outside the envelope band")
    fv = np.asarray(f(grid), dtype=float)
    return bool(np.all(np.abs(gs - env.clip(fv, grid)) <= np.abs(gs - fv)))


# ---------------------------------------------------------------------------
# checkpoints


def save_potential(path, p: LogPotential) -> None:
    meta = {"version": np.array(CHECKPOINT_VERSION), "kind": np.array(p.kind),
            "params": p.get_params(), "dim": np.array(p.dim)}
    env = getattr(p, "envelope", None)
    if env is not None:
        meta["envelope"] = np.array([env.c_lo, env.a_lo, env.c_hi])
    if isinstance(p, HermitePotential):
        meta.update(degree=np.array(p.basis.degree), scale=np.array(p.basis.scale),
                    ball_radius=np.array(p.ball_radius), clip_enabled=np.array(p.clip_enabled))
    elif isinstance(p, MlpPotential):
        meta.update(hidden=np.array(p.hidden))
    else:
        raise UsageError(f"cannot checkpoint {type(p).__name__}")
    with open(path, "wb") as fh:
        np.savez(fh, **meta)


def load_potential(path) -> LogPotential:
    with np.load(path, allow_pickle=False) as z:
        version = int(z["version"])
        if version != CHECKPOINT_VERSION:
            raise UsageError(f"unsupported checkpoint version {version}")
        kind = str(z["kind"])
        env = GaussianEnvelope(*z["envelope"]) if "envelope" in z else None
        params = z["params"]
        dim = int(z["dim"])
        if kind == "hermite":
            basis = HermiteBasis(enumerate_multiindices(int(z["degree"]), dim), float(z["scale"]))
            return HermitePotential(basis, params, float(z["ball_radius"]), env,
                                    bool(z["clip_enabled"]))
        if kind == "mlp":
            return MlpPotential(dim, int(z["hidden"]), params=params, envelope=env)
    raise UsageError(f"unknown potential kind {kind!r}")
