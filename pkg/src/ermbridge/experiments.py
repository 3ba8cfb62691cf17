"""Named experiment recipes: data, training, sampling and evaluation per seed."""

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, List

import numpy as np

from . import data as datamod
from .config import Experiment, ExperimentConfig, serialize
from .data import PointCloud, as_points, make_rng
from .errors import UsageError
from .kernels import KernelParams, SdeSchedule
from .metrics import SlicedW1Config, append_metric, kde_density, sliced_w1, write_density_csv
from .operator import RiskConfig
from .potential import MlpPotential, hermite_with_envelope, save_potential
from .sampler import DriftContext, sample_bridge, write_samples_csv
from .train import TrainConfig, train, write_loss_trace

log = logging.getLogger(__name__)

BUNDLED_SOURCE = "surrogate_source.csv"
BUNDLED_TARGET = "surrogate_target.csv"


def derived_seed(seed: int, label: str) -> int:
    return int(make_rng(seed, label).integers(0, 2 ** 63))


@dataclass
class Split:
    X: np.ndarray
    Y: np.ndarray
    # name -> (start points, target samples) used for evaluation
    tests: Dict[str, tuple] = field(default_factory=dict)


def bundled_path(name: str) -> str:
    return str(resources.files("ermbridge").joinpath("datasets", name))


def load_pair(cfg: ExperimentConfig):
    xp = cfg.data.x_path or bundled_path(BUNDLED_SOURCE)
    yp = cfg.data.y_path or bundled_path(BUNDLED_TARGET)
    return as_points(datamod.load_columnar(xp)), as_points(datamod.load_columnar(yp))


def make_split(cfg: ExperimentConfig, seed: int) -> Split:
    d = cfg.data
    ts = derived_seed(seed, "test")
    if cfg.experiment is Experiment.SWISS_ROLL:
        X = datamod.swiss_roll(d.n_train, d.noise, seed).points
        Y = datamod.s_curve(d.n_train, d.noise, seed).points
        test = (datamod.swiss_roll(d.n_test, d.noise, ts).points,
                datamod.s_curve(d.n_test, d.noise, ts).points)
        return Split(X, Y, {"terminal": test})
    if cfg.experiment is Experiment.GAUSS_GRID:
        def grid(n, s):
            return datamod.gaussian_grid_mixture(d.grid_side, d.grid_spacing, n, s,
                                                 d.grid_std).points
        X = datamod.truncated_normal(d.n_train, -d.train_box, d.train_box, seed).points
        Y = grid(d.n_train, seed)
        target = grid(d.n_test, ts)
        tests = {"terminal": (datamod.truncated_normal(d.n_test, -d.train_box, d.train_box,
                                                       ts).points, target)}
        for b in cfg.sample.boxes:
            tests[f"box{b:g}"] = (datamod.truncated_normal(d.n_test, -b, b, ts).points, target)
        return Split(X, Y, tests)
    Xall, Yall = load_pair(cfg)
    if Xall.shape[1] != Yall.shape[1]:
        raise UsageError("source and target files differ in dimension")
    n_test = d.n_test
    if min(len(Xall), len(Yall)) <= n_test:
        raise UsageError(f"need more than n_test={n_test} rows in each data file")
    n_tr = min(d.n_train, len(Xall) - n_test, len(Yall) - n_test)
    # the split is a fixed permutation per seed so different seeds see different splits
    px = make_rng(seed, "split-x").permutation(len(Xall))
    py = make_rng(seed, "split-y").permutation(len(Yall))
    X, Y = Xall[px[:n_tr]], Yall[py[:n_tr]]
    test = (Xall[px[-n_test:]], Yall[py[-n_test:]])
    return Split(X, Y, {"terminal": test})


def build_potential(cfg: ExperimentConfig, k: KernelParams, Y, seed: int):
    t = cfg.train
    if t.potential == "mlp":
        return MlpPotential(k.dim, t.hidden, seed=seed)
    return hermite_with_envelope(t.degree, k, Y, cfg.kernel.horizon)


def schedule_of(cfg: ExperimentConfig) -> SdeSchedule:
    return SdeSchedule(horizon=cfg.kernel.horizon, steps=cfg.sample.steps,
                       sigma_end=cfg.kernel.sigma_end, kind=cfg.sample.schedule)


def train_config(cfg: ExperimentConfig, seed: int) -> TrainConfig:
    t = cfg.train
    return TrainConfig(batch_size=t.batch_size, lr=t.lr, epochs=t.epochs,
                       loss_scale=t.loss_scale, seed=seed, optimizer=t.optimizer)


def reference_set(cfg: ExperimentConfig, Y, seed: int):
    n = cfg.sample.n_ref
    if n and n < len(Y):
        return Y[make_rng(seed, "reference").choice(len(Y), n, replace=False)]
    return Y


@dataclass
class SeedResult:
    seed: int
    metrics: Dict[str, float]
    epoch_loss: List[float]


def run_seed(cfg: ExperimentConfig, seed: int, plots: bool = False) -> SeedResult:
    out = os.path.join(cfg.out, f"seed{seed}")
    os.makedirs(out, exist_ok=True)
    split = make_split(cfg, seed)
    dim = split.X.shape[1]
    k = KernelParams(dim, cfg.kernel_variance)
    p = build_potential(cfg, k, split.Y, seed)
    rep = train(train_config(cfg, seed), split.X, split.Y, p, k,
                RiskConfig(loss_scale=cfg.train.loss_scale))
    write_loss_trace(os.path.join(out, "loss_trace.csv"), rep)
    save_potential(os.path.join(out, "potential.npz"), p)
    ctx = DriftContext.build(reference_set(cfg, split.Y, seed), p, schedule_of(cfg))
    T = cfg.kernel.horizon
    times = sorted(set([f * T for f in cfg.sample.snapshots] + [T]))
    sw = SlicedW1Config(cfg.metrics.n_projections, cfg.metrics.seed)
    metrics = {}
    for name, (X0, target) in split.tests.items():
        snaps = sample_bridge(X0, ctx, times, seed=derived_seed(seed, f"sample-{name}"))
        suffix = "" if name == "terminal" else f"_{name}"
        write_samples_csv(os.path.join(out, f"samples{suffix}.csv"), snaps)
        final = snaps[max(snaps)].points
        metrics[f"sliced_w1_{name}"] = sliced_w1(final, target, sw)
        if plots and dim == 2:
            _plot(out, suffix, snaps, target)
        if dim == 2 and name == "terminal":
            xs, ys = _lattice(np.vstack([final, target]))
            write_density_csv(os.path.join(out, "density.csv"), xs, ys,
                              kde_density(final, xs, ys))
    metrics["train_loss_final"] = rep.epoch_loss[-1] if rep.epoch_loss else float("nan")
    metrics["train_wall_time"] = rep.wall_time
    return SeedResult(seed, metrics, rep.epoch_loss)


def _lattice(P, n=64):
    lo, hi = P.min(axis=0), P.max(axis=0)
    pad = 0.1 * (hi - lo)
    return np.linspace(lo[0] - pad[0], hi[0] + pad[0], n), \
        np.linspace(lo[1] - pad[1], hi[1] + pad[1], n)


def _plot(out, suffix, snaps, target):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    times = sorted(snaps)
    fig, axes = plt.subplots(1, len(times) + 1, figsize=(3 * (len(times) + 1), 3))
    for ax, t in zip(axes, times):
        P = snaps[t].points
        ax.scatter(P[:, 0], P[:, 1], s=1)
        ax.set_title(f"t = {t:g}")
    axes[-1].scatter(target[:, 0], target[:, 1], s=1, color="k")
    axes[-1].set_title("target")
    fig.tight_layout()
    fig.savefig(os.path.join(out, f"snapshots{suffix}.svg"))
    plt.close(fig)
    final = snaps[times[-1]].points
    xs, ys = _lattice(np.vstack([final, target]))
    dens = kde_density(final, xs, ys)
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.imshow(dens, origin="lower", extent=(xs[0], xs[-1], ys[0], ys[-1]), aspect="auto")
    ax.set_title("terminal density")
    fig.savefig(os.path.join(out, f"density{suffix}.svg"))
    plt.close(fig)


def _run_seed_args(args):
    return run_seed(*args)


def run_experiment(cfg: ExperimentConfig, plots: bool = False,
                   parallel_seeds: bool = False) -> List[SeedResult]:
    """Run every seed, then write ``metrics.csv`` with per-seed rows plus mean and std."""
    os.makedirs(cfg.out, exist_ok=True)
    with open(os.path.join(cfg.out, "config.txt"), "w") as fh:
        fh.write(serialize(cfg))
    jobs = [(cfg, s, plots) for s in cfg.seeds]
    if parallel_seeds and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(len(jobs), os.cpu_count() or 1)) as ex:
            results = list(ex.map(_run_seed_args, jobs))
    else:
        results = [run_seed(*j) for j in jobs]
    path = os.path.join(cfg.out, "metrics.csv")
    if os.path.exists(path):
        os.remove(path)
    for r in results:
        for name, v in r.metrics.items():
            append_metric(path, name, v, r.seed)
    for name in results[0].metrics:
        vals = np.array([r.metrics[name] for r in results])
        append_metric(path, name, vals.mean(), "mean")
        append_metric(path, name, vals.std(), "std")
    return results


def read_metrics(path) -> List[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def load_cloud(path) -> PointCloud:
    return datamod.load_columnar(path)
