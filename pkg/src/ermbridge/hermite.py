"""Scaled Hermite function basis and the quadrature tools built around it.

Hermite functions use the physicists' normalisation

    psi_n(x) = (2^n n! sqrt(pi))^(-1/2) H_n(x) exp(-x^2 / 2),

and are evaluated by the normalised three-term recurrence so that no factorial
is ever formed. The scaled tensor basis is
``psi^(lam)_alpha(y) = lam^(d/2) prod_j psi_{alpha_j}(lam y_j)``.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import UsageError

MAX_BASIS_SIZE = 5_000_000
_PI_QUARTER = math.pi ** -0.25


def hermite_phys(n: int, x):
    """Physicists' Hermite polynomial ``H_n(x)`` from ``H_{k+1} = 2x H_k - 2k H_{k-1}``."""
    if n < 0:
        raise UsageError("degree must be >= 0")
    x = np.asarray(x, dtype=float)
    h_prev, h = np.ones_like(x), 2.0 * x
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    for k in range(1, n):
        h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h if h.ndim else float(h)


def hermite_functions(nmax: int, x) -> np.ndarray:
    """All ``psi_0 .. psi_nmax`` at ``x``; result has shape ``(nmax + 1,) + x.shape``."""
    if nmax < 0:
        raise UsageError("degree must be >= 0")
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = _PI_QUARTER * np.exp(-0.5 * x * x)
    if nmax >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, nmax):
        out[k + 1] = (math.sqrt(2.0 / (k + 1)) * x * out[k]
                      - math.sqrt(k / (k + 1)) * out[k - 1])
    return out


def hermite_function(n: int, x):
    """Normalised Hermite function ``psi_n(x)``."""
    v = hermite_functions(n, x)[n]
    return v if np.ndim(v) else float(v)


def hermite_function_derivative(n: int, x):
    """``psi_n'(x) = sqrt(2n) psi_{n-1}(x) - x psi_n(x)``, from ``H_n' = 2n H_{n-1}``."""
    x = np.asarray(x, dtype=float)
    tab = hermite_functions(max(n, 0), x)
    d = -x * tab[n]
    if n >= 1:
        d = d + math.sqrt(2.0 * n) * tab[n - 1]
    return d if d.ndim else float(d)


# ---------------------------------------------------------------------------
# multi-indices and the scaled basis


def _compositions(total: int, parts: int):
    # descending lexicographic order of the first coordinate
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class MultiIndexSet:
    """All ``alpha`` in ``N_0^d`` with ``|alpha| <= degree`` in graded order."""

    dim: int
    degree: int
    indices: tuple = field(repr=False)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, alpha):
        return tuple(int(a) for a in alpha) in self._positions

    @property
    def array(self) -> np.ndarray:
        return np.array(self.indices, dtype=np.int64).reshape(len(self.indices), self.dim)

    @property
    def _positions(self):
        return _position_map(self.indices)

    def position(self, alpha) -> int:
        key = tuple(int(a) for a in alpha)
        try:
            return self._positions[key]
        except KeyError:
            raise UsageError(f"multi-index {key} not in set (d={self.dim}, n={self.degree})") from None


@lru_cache(maxsize=64)
def _position_map(indices):
    return {a: i for i, a in enumerate(indices)}


def enumerate_multiindices(n: int, d: int) -> MultiIndexSet:
    """Graded enumeration of ``{alpha : |alpha| <= n}``; size ``C(n + d, d)``."""
    if n < 0 or d < 1:
        raise UsageError(f"need n >= 0 and d >= 1, got n={n}, d={d}")
    count = math.comb(n + d, d)
    if count > MAX_BASIS_SIZE:
        raise UsageError(f"multi-index set of size {count} exceeds limit {MAX_BASIS_SIZE}")
    idx = tuple(a for m in range(n + 1) for a in _compositions(m, d))
    return MultiIndexSet(dim=d, degree=n, indices=idx)


@dataclass(frozen=True)
class HermiteBasis:
    indexset: MultiIndexSet
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise UsageError(f"basis scale must be > 0, got {self.scale}")

    @classmethod
    def for_kernel(cls, degree: int, dim: int, variance: float) -> "HermiteBasis":
        """Basis with the natural scale ``T^(-1/2)`` for kernel variance ``T``."""
        return cls(enumerate_multiindices(degree, dim), 1.0 / math.sqrt(variance))

    @property
    def dim(self) -> int:
        return self.indexset.dim

    @property
    def degree(self) -> int:
        return self.indexset.degree

    def __len__(self):
        return len(self.indexset)

    def evaluate(self, Y) -> np.ndarray:
        """Design matrix ``Phi[k, a] = psi^(lam)_alpha_a(Y_k)``, shape ``(m, len(basis))``."""
        Y = np.asarray(Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[None, :]
        if Y.shape[1] != self.dim:
            raise UsageError(f"points have dimension {Y.shape[1]}, basis has {self.dim}")
        lam = self.scale
        tab = hermite_functions(self.degree, lam * Y)  # (n+1, m, d)
        A = self.indexset.array
        phi = np.full((Y.shape[0], len(A)), lam ** (0.5 * self.dim))
        for j in range(self.dim):
            phi *= tab[A[:, j], :, j].T
        return phi


def scaled_basis_eval(basis: HermiteBasis, alpha: Sequence[int], y) -> float:
    """Single scaled basis function ``lam^(d/2) prod_j psi_{alpha_j}(lam y_j)``."""
    if tuple(alpha) not in basis.indexset:
        raise UsageError(f"multi-index {tuple(alpha)} not in basis")
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != basis.dim:
        raise UsageError(f"point has dimension {y.size}, basis has {basis.dim}")
    lam = basis.scale
    val = lam ** (0.5 * basis.dim)
    for a, yj in zip(alpha, y):
        val *= hermite_function(int(a), lam * yj)
    return float(val)


# ---------------------------------------------------------------------------
# quadrature


def gauss_hermite_tensor(nodes: int, dim: int):
    """Tensor Gauss-Hermite nodes ``(K, d)`` and log-weights for plain integrals over R^d.

    The log-weights include the ``exp(|u|^2)`` compensation so that
    ``sum exp(logw) F(u) ~ int F(u) du`` for Gaussian-decaying ``F``.
    """
    x, w = np.polynomial.hermite.hermgauss(nodes)
    logw1 = np.log(w) + x * x
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    lgrids = np.meshgrid(*([logw1] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    logw = np.sum(np.stack([g.ravel() for g in lgrids], axis=1), axis=1)
    return pts, logw


def project_coefficients(f: Callable, basis: HermiteBasis, quad_nodes: int = 96) -> np.ndarray:
    """``c_alpha = <f, psi^(lam)_alpha>`` by tensor Gauss-Hermite quadrature.

    ``f`` maps an ``(K, d)`` array of points to ``K`` values.
    """
    if quad_nodes < basis.degree + 1:
        raise UsageError(f"{quad_nodes} nodes cannot resolve degree {basis.degree}")
    if basis.dim > 3:
        raise UsageError("tensor quadrature limited to d <= 3")
    u, logw = gauss_hermite_tensor(quad_nodes, basis.dim)
    lam = basis.scale
    y = u / lam
    fv = np.asarray(f(y), dtype=float).reshape(-1)
    # psi^(lam)(u / lam) * dy = lam^(-d/2) prod psi(u_j) du
    phi = HermiteBasis(basis.indexset, 1.0).evaluate(u)
    return lam ** (-0.5 * basis.dim) * ((np.exp(logw) * fv) @ phi)


def gram_matrix(basis: HermiteBasis, quad_nodes: int = 96) -> np.ndarray:
    """Quadrature Gram matrix ``<psi_a, psi_b>`` of the scaled basis."""
    u, logw = gauss_hermite_tensor(quad_nodes, basis.dim)
    phi = basis.evaluate(u / basis.scale)
    wt = np.exp(logw) / basis.scale ** basis.dim
    return phi.T @ (phi * wt[:, None])


def expansion(basis: HermiteBasis, coeffs) -> Callable:
    """Callable ``y -> sum_alpha c_alpha psi^(lam)_alpha(y)``."""
    coeffs = np.asarray(coeffs, dtype=float)

    def f(Y):
        return basis.evaluate(Y) @ coeffs

    return f


# ---------------------------------------------------------------------------
# coefficient decay for Gaussian-smoothed compactly supported weights


@dataclass(frozen=True)
class DecayBoundParams:
    """Support radius ``R``, dimension ``d`` and mass ``M0`` of a weight ``w``."""

    support_radius: float
    dim: int
    mass: float

    def __post_init__(self):
        if not (self.support_radius > 0 and self.dim >= 1 and self.mass > 0):
            raise UsageError("decay bound parameters must be positive")

    @property
    def beta(self) -> float:
        return self.support_radius * math.sqrt(self.dim / 2.0)

    @property
    def prefactor(self) -> float:
        return math.pi ** (-self.dim / 4.0) * 2.0 ** (-self.dim / 2.0) * self.mass


def coeff_decay_bound(m: int, p: DecayBoundParams) -> float:
    """``C_d m^(1/4) (e^(1/2) beta / sqrt(m))^m`` for total degree ``m >= 1``."""
    if m < 1:
        raise UsageError("decay bound needs total degree m >= 1")
    log_b = (math.log(p.prefactor) + 0.25 * math.log(m)
             + m * (0.5 + math.log(p.beta) - 0.5 * math.log(m)))
    return math.exp(log_b)


def projection_error_bound(n: int, p: DecayBoundParams) -> float:
    """L2 bound on ``|g - Pi_n g|`` with ``K = e^(1/2) beta``; requires ``n + 1 > 2 K^2``."""
    K = math.exp(0.5) * p.beta
    if not n + 1 > 2.0 * K * K:
        raise UsageError(f"bound needs n + 1 > 2K^2 = {2 * K * K:.4g}, got n = {n}")
    d = p.dim
    c_tilde = math.sqrt(1.0 + 2.0 ** (d - 0.5) * math.gamma(d + 0.5) / math.log(2.0) ** (d + 0.5))
    log_b = (math.log(c_tilde * p.prefactor) + (0.5 * d - 0.25) * math.log(n + 1)
             + (n + 1) * (math.log(K) - 0.5 * math.log(n + 1)))
    return math.exp(log_b)


def smoothed_hermite_function(m: int, x):
    """``(q_1 * psi_m)(x)`` for the unit-variance Gaussian ``q_1``.

    Closed form ``pi^(-1/4) 2^(-(m+1)/2) (m!)^(-1/2) x^m exp(-x^2/4)``, read off
    the Taylor coefficients of the Bargmann transform of ``q_1(. - x)``.
    """
    x = np.asarray(x, dtype=float)
    logc = -0.25 * math.log(math.pi) - 0.5 * (m + 1) * math.log(2.0) - 0.5 * math.lgamma(m + 1)
    return math.exp(logc) * x ** m * np.exp(-0.25 * x * x)


def smoothed_coefficients(w: Callable, support_radius: float, degree: int, dim: int = 1,
                          nodes: int = 200) -> np.ndarray:
    """Hermite coefficients (unscaled basis) of ``w * q_1`` for ``w`` supported in a ball.

    Uses ``<w * q_1, psi_alpha> = <w, q_1 * psi_alpha>`` with tensor Gauss-Legendre
    quadrature over ``[-R, R]^d``. Free of cancellation, so coefficients far
    below machine epsilon relative to ``|w|`` are still resolved.
    """
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    xs = xs * support_radius
    ws = ws * support_radius
    iset = enumerate_multiindices(degree, dim)
    grids = np.meshgrid(*([xs] * dim), indexing="ij")
    wgrid = np.prod(np.meshgrid(*([ws] * dim), indexing="ij"), axis=0).ravel()
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wv = np.asarray(w(pts), dtype=float).reshape(-1) * wgrid
    per_axis = np.stack([smoothed_hermite_function(m, pts) for m in range(degree + 1)])
    A = iset.array
    out = np.empty(len(A))
    for k, alpha in enumerate(A):
        val = np.ones(len(pts))
        for j, a in enumerate(alpha):
            val = val * per_axis[a, :, j]
        out[k] = wv @ val
    return out


def bargmann_of_hermite(n: int, z: complex, half_width: float = 14.0, h: float = 0.02) -> complex:
    """Bargmann transform of ``psi_n`` at ``z`` by trapezoidal quadrature on a real grid.

    ``(B f)(z) = pi^(-1/4) int exp(-y^2/2 + sqrt(2) z y - z^2/2) f(y) dy``;
    the grid is centred where the integrand peaks.
    """
    z = complex(z)
    c = z.real / math.sqrt(2.0)  # peak of exp(-y^2 + sqrt(2) Re(z) y)
    y = np.arange(c - half_width, c + half_width + h / 2, h)
    psi = hermite_functions(n, y)[n]
    expo = -0.5 * y * y + math.sqrt(2.0) * z * y - 0.5 * z * z
    integrand = np.exp(expo) * psi
    return complex(_PI_QUARTER * h * (np.sum(integrand) - 0.5 * (integrand[0] + integrand[-1])))
