"""Distances between point clouds and density maps for figures."""

import csv
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import as_points, make_rng
from .errors import UsageError


@dataclass(frozen=True)
class SlicedW1Config:
    n_projections: int = 100
    seed: int = 0

    def __post_init__(self):
        if int(self.n_projections) < 1:
            raise UsageError("n_projections must be >= 1")


def wasserstein1_1d(a, b) -> float:
    """W1 between two equal-size empirical measures on the line."""
    a = np.sort(np.asarray(a, dtype=float).reshape(-1))
    b = np.sort(np.asarray(b, dtype=float).reshape(-1))
    if a.size != b.size or a.size == 0:
        raise UsageError(f"need equal non-empty sizes, got {a.size} and {b.size}")
    return float(np.mean(np.abs(a - b)))


def projections(dim: int, cfg: SlicedW1Config = SlicedW1Config()) -> np.ndarray:
    """Uniform directions on the unit sphere, shape ``(n_projections, dim)``."""
    th = make_rng(cfg.seed, "projections").standard_normal((cfg.n_projections, dim))
    return th / np.linalg.norm(th, axis=1, keepdims=True)


def sliced_w1(X, Y, cfg: SlicedW1Config = SlicedW1Config(),
              directions: Optional[np.ndarray] = None) -> float:
    """Average of 1-d W1 over projections; ``directions`` overrides the random set."""
    X, Y = as_points(X), as_points(Y)
    if X.shape != Y.shape:
        raise UsageError(f"clouds must have equal shape, got {X.shape} and {Y.shape}")
    th = projections(X.shape[1], cfg) if directions is None else np.asarray(directions, float)
    px = np.sort(X @ th.T, axis=0)
    py = np.sort(Y @ th.T, axis=0)
    return float(np.mean(np.abs(px - py)))


def sliced_w1_per_projection(X, Y, directions) -> np.ndarray:
    X, Y = as_points(X), as_points(Y)
    px = np.sort(X @ directions.T, axis=0)
    py = np.sort(Y @ directions.T, axis=0)
    return np.mean(np.abs(px - py), axis=0)


def scott_bandwidth(P) -> np.ndarray:
    P = as_points(P)
    return P.std(axis=0, ddof=1) * P.shape[0] ** (-1.0 / 6.0) if P.shape[0] > 1 \
        else np.ones(P.shape[1])


def kde_density(P, xs, ys, bandwidth=None) -> np.ndarray:
    """Gaussian KDE of a 2-d cloud on the lattice ``xs x ys``; result indexed ``[iy, ix]``.

    ``bandwidth`` is a scalar or per-axis pair; the default is Scott's rule.
    """
    P = as_points(P)
    if P.shape[1] != 2:
        raise UsageError("kde_density expects a 2-d cloud")
    h = scott_bandwidth(P) if bandwidth is None else np.broadcast_to(
        np.asarray(bandwidth, dtype=float), (2,))
    if np.any(h <= 0):
        raise UsageError("bandwidth must be positive")
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    kx = np.exp(-0.5 * ((xs[None, :] - P[:, 0:1]) / h[0]) ** 2) / (np.sqrt(2 * np.pi) * h[0])
    ky = np.exp(-0.5 * ((ys[None, :] - P[:, 1:2]) / h[1]) ** 2) / (np.sqrt(2 * np.pi) * h[1])
    return (ky.T @ kx) / P.shape[0]


def write_density_csv(path, xs, ys, dens) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "density"])
        for iy, y in enumerate(ys):
            for ix, x in enumerate(xs):
                w.writerow([repr(float(x)), repr(float(y)), repr(float(dens[iy, ix]))])


def append_metric(path, name: str, value, seed) -> None:
    """Append ``name,value,seed`` to a metrics CSV, writing the header on first use."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(["name", "value", "seed"])
        w.writerow([name, repr(float(value)), seed])
