"""Synthetic point clouds and columnar sample files."""

import math
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ParseError, UsageError


@dataclass
class PointCloud:
    """An ``n x d`` array of finite sample coordinates."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise UsageError(f"point cloud must be a nonempty n x d array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise UsageError("point cloud contains non-finite coordinates")
        self.points = np.ascontiguousarray(pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self):
        return self.points.shape[0]


def as_points(p) -> np.ndarray:
    """Coordinates of a :class:`PointCloud` or array-like as a 2-D float array."""
    if isinstance(p, PointCloud):
        return p.points
    a = np.asarray(p, dtype=np.float64)
    return a[:, None] if a.ndim == 1 else a


def make_rng(seed: int, *stream) -> np.random.Generator:
    """Philox generator for ``seed``; extra ``stream`` labels select independent substreams."""
    if int(seed) < 0 or int(seed) >= 2**64:
        raise UsageError(f"seed must be a 64-bit unsigned integer, got {seed}")
    keys = [int(seed)]
    for s in stream:
        keys.append(zlib.crc32(s.encode()) if isinstance(s, str) else int(s))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(keys)))


def _check_n(n):
    if int(n) < 1:
        raise UsageError(f"sample count must be >= 1, got {n}")
    return int(n)


def swiss_roll(n: int, noise: float = 0.0, seed: int = 0) -> PointCloud:
    """2-D Swiss roll ``(t cos t, t sin t) / (4.5 pi)`` with ``t ~ U[1.5 pi, 4.5 pi]``."""
    n = _check_n(n)
    rng = make_rng(seed, "swiss_roll")
    t = rng.uniform(1.5 * math.pi, 4.5 * math.pi, size=n)
    pts = np.stack([t * np.cos(t), t * np.sin(t)], axis=1) / (4.5 * math.pi)
    if noise > 0:
        pts = pts + noise * rng.standard_normal(pts.shape)
    return PointCloud(pts)


def s_curve(n: int, noise: float = 0.0, seed: int = 0) -> PointCloud:
    """2-D S-curve ``(sin t, sign(t)(cos t - 1)) / 2`` with ``t ~ U[-1.5 pi, 1.5 pi]``."""
    n = _check_n(n)
    rng = make_rng(seed, "s_curve")
    t = rng.uniform(-1.5 * math.pi, 1.5 * math.pi, size=n)
    pts = 0.5 * np.stack([np.sin(t), np.sign(t) * (np.cos(t) - 1.0)], axis=1)
    if noise > 0:
        pts = pts + noise * rng.standard_normal(pts.shape)
    return PointCloud(pts)


def grid_centers(side: int, spacing: float) -> np.ndarray:
    offs = (np.arange(side) - 0.5 * (side - 1)) * spacing
    gx, gy = np.meshgrid(offs, offs, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def gaussian_grid_mixture(side: int = 5, spacing: float = 4.0, n: int = 1000,
                          seed: int = 0, std: float = 1.0) -> PointCloud:
    """Equal-weight mixture of ``side**2`` isotropic Gaussians on a centred square grid."""
    if int(side) < 1:
        raise UsageError(f"grid side must be >= 1, got {side}")
    n = _check_n(n)
    rng = make_rng(seed, "gaussian_grid")
    centers = grid_centers(int(side), spacing)
    comp = rng.integers(0, len(centers), size=n)
    return PointCloud(centers[comp] + std * rng.standard_normal((n, 2)))


def truncated_normal(n: int, lo: float = -1.0, hi: float = 1.0, seed: int = 0,
                     dim: int = 2, return_rate: bool = False):
    """Standard normal coordinates rejection-sampled into the box ``[lo, hi]^dim``.

    With ``return_rate`` also returns the per-coordinate acceptance rate.
    """
    n = _check_n(n)
    if not lo < hi:
        raise UsageError(f"need lo < hi, got [{lo}, {hi}]")
    rng = make_rng(seed, "truncated_normal")
    need = n * int(dim)
    out = np.empty(need)
    filled = drawn = accepted = 0
    while filled < need:
        batch = max(1024, int(1.2 * (need - filled)) + 16)
        z = rng.standard_normal(batch)
        z = z[(z >= lo) & (z <= hi)]
        drawn += batch
        accepted += z.size
        keep = z[: need - filled]
        out[filled:filled + keep.size] = keep
        filled += keep.size
    cloud = PointCloud(out.reshape(n, int(dim)))
    if return_rate:
        return cloud, accepted / drawn
    return cloud


def load_columnar(path) -> PointCloud:
    """Read a header-less comma-separated file of reals, one point per line."""
    text = Path(path).read_text(encoding="utf-8")
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            raise ParseError("empty line", line=lineno)
        fields = line.split(",")
        try:
            vals = [float(f) for f in fields]
        except ValueError:
            raise ParseError(f"non-numeric field in {line.strip()[:40]!r}", line=lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise ParseError("non-finite value", line=lineno)
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ParseError(f"expected {width} columns, found {len(vals)}", line=lineno)
        rows.append(vals)
    if not rows:
        raise ParseError("file contains no samples", line=1)
    return PointCloud(np.array(rows, dtype=np.float64))


def save_columnar(path, cloud) -> None:
    pts = as_points(cloud)
    with open(path, "w", encoding="utf-8") as fh:
        for row in pts:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def single_cell_surrogate(n: int, dim: int = 100, seed: int = 0, latent: int = 5,
                          clusters: int = 4, noise: float = 0.1):
    """Synthetic stand-in for a high-dimensional two-snapshot expression dataset.

    Both clouds are Gaussian clusters in a ``latent``-dimensional subspace embedded
    in ``dim`` dimensions plus isotropic noise. The target clusters are displaced
    and rescaled relative to the source ones. Returns ``(source, target)``.
    """
    n = _check_n(n)
    rng = make_rng(seed, "surrogate")
    basis, _ = np.linalg.qr(rng.standard_normal((dim, latent)))
    centers = rng.normal(scale=1.5, size=(clusters, latent))
    shift = rng.normal(scale=1.0, size=(clusters, latent))

    def cloud(c, spread):
        comp = rng.integers(0, clusters, size=n)
        z = c[comp] + spread * rng.standard_normal((n, latent))
        return PointCloud(z @ basis.T + noise * rng.standard_normal((n, dim)))

    return cloud(centers, 0.5), cloud(centers + shift, 0.35)
