"""Command-line entry point.

    ermbridge experiment --config run.cfg --out runs/swiss --plots
    ermbridge generate --config run.cfg --out data/ --seed 3
    ermbridge train --config run.cfg --out runs/one --seed 0
    ermbridge sample --config run.cfg --out runs/one --seed 0
    ermbridge evaluate --config run.cfg --out runs/one --seed 0

Exit codes: 0 success, 2 configuration or usage error, 3 numeric abort.
"""

import argparse
import logging
import os
import sys

import numpy as np

from .config import copy_config, parse_config, recipe
from .data import PointCloud, load_columnar, save_columnar
from .errors import ConfigError, NumericError, ParseError, UsageError
from .experiments import (build_potential, derived_seed, make_split, reference_set,
                          run_experiment, schedule_of, train_config)
from .kernels import KernelParams
from .metrics import SlicedW1Config, append_metric, sliced_w1
from .operator import RiskConfig
from .potential import load_potential, save_potential
from .sampler import DriftContext, sample_bridge, write_samples_csv
from .train import train, write_loss_trace

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _load_config(args):
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    else:
        cfg = recipe("SwissRollToSCurve")
    cfg = copy_config(cfg)
    if args.out:
        cfg.out = args.out
    if args.seed is not None:
        cfg.seeds = [args.seed]
    if args.data:
        if len(args.data) != 2:
            raise UsageError("--data takes a source file and a target file")
        cfg.data.x_path, cfg.data.y_path = args.data
    return cfg


def _seed_dir(cfg, seed):
    d = os.path.join(cfg.out, f"seed{seed}")
    os.makedirs(d, exist_ok=True)
    return d


def cmd_generate(cfg, args):
    for seed in cfg.seeds:
        d = _seed_dir(cfg, seed)
        split = make_split(cfg, seed)
        save_columnar(os.path.join(d, "x_train.csv"), PointCloud(split.X))
        save_columnar(os.path.join(d, "y_train.csv"), PointCloud(split.Y))
        for name, (X0, target) in split.tests.items():
            save_columnar(os.path.join(d, f"x_{name}.csv"), PointCloud(X0))
            save_columnar(os.path.join(d, f"y_{name}.csv"), PointCloud(target))
    return EXIT_OK


def cmd_train(cfg, args):
    for seed in cfg.seeds:
        d = _seed_dir(cfg, seed)
        split = make_split(cfg, seed)
        k = KernelParams(split.X.shape[1], cfg.kernel_variance)
        p = build_potential(cfg, k, split.Y, seed)
        rep = train(train_config(cfg, seed), split.X, split.Y, p, k,
                    RiskConfig(loss_scale=cfg.train.loss_scale))
        write_loss_trace(os.path.join(d, "loss_trace.csv"), rep)
        save_potential(os.path.join(d, "potential.npz"), p)
        print(f"seed {seed}: final epoch loss {rep.epoch_loss[-1] if rep.epoch_loss else float('nan'):.6g}")
    return EXIT_OK


def cmd_sample(cfg, args):
    T = cfg.kernel.horizon
    times = sorted(set([f * T for f in cfg.sample.snapshots] + [T]))
    for seed in cfg.seeds:
        d = _seed_dir(cfg, seed)
        split = make_split(cfg, seed)
        p = load_potential(os.path.join(d, "potential.npz"))
        ctx = DriftContext.build(reference_set(cfg, split.Y, seed), p, schedule_of(cfg))
        for name, (X0, _) in split.tests.items():
            snaps = sample_bridge(X0, ctx, times, seed=derived_seed(seed, f"sample-{name}"))
            suffix = "" if name == "terminal" else f"_{name}"
            write_samples_csv(os.path.join(d, f"samples{suffix}.csv"), snaps)
    return EXIT_OK


def _terminal_rows(path):
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t_end = rows[:, 0].max()
    return rows[rows[:, 0] == t_end][:, 2:]


def cmd_evaluate(cfg, args):
    sw = SlicedW1Config(cfg.metrics.n_projections, cfg.metrics.seed)
    path = os.path.join(cfg.out, "metrics.csv")
    for seed in cfg.seeds:
        d = _seed_dir(cfg, seed)
        split = make_split(cfg, seed)
        for name, (_, target) in split.tests.items():
            suffix = "" if name == "terminal" else f"_{name}"
            final = _terminal_rows(os.path.join(d, f"samples{suffix}.csv"))
            v = sliced_w1(final, target, sw)
            append_metric(path, f"sliced_w1_{name}", v, seed)
            print(f"seed {seed}: sliced_w1_{name} = {v:.6g}")
    return EXIT_OK


def cmd_experiment(cfg, args):
    results = run_experiment(cfg, plots=args.plots, parallel_seeds=args.parallel_seeds)
    for r in results:
        print(f"seed {r.seed}: " + ", ".join(f"{k}={v:.4g}" for k, v in r.metrics.items()))
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "sample": cmd_sample,
            "evaluate": cmd_evaluate, "experiment": cmd_experiment}


def build_parser():
    ap = argparse.ArgumentParser(prog="ermbridge", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat dotted-key config file")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--seed", type=int, help="run a single seed")
        sp.add_argument("--data", nargs=2, metavar=("SOURCE", "TARGET"),
                        help="columnar source and target files (CustomData)")
        sp.add_argument("--plots", action="store_true", help="also write SVG figures")
        sp.add_argument("--parallel-seeds", action="store_true",
                        help="run seeds in separate processes")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load_config(args)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, ParseError, UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
