"""Time the compiled and numpy pairwise kernels against each other.

    python3 benchmarks/bench_kernels.py --sizes 500 2000 --dims 1 2 8 32 100

Each cell is the best of ``--repeat`` runs. The last column is the speed-up of
the compiled backend over numpy, and is blank when the extension is not built.
"""

import argparse
import time

import numpy as np

from ermbridge.core import GEMM_MIN_DIM, available_backends

KERNELS = ("lse_rows", "softmax_apply_t", "softmax_mean")


def call(mod, name, P, Q, off, lse, coef):
    if name == "lse_rows":
        return mod.lse_rows(P, Q, off, 0.5)
    if name == "softmax_apply_t":
        return mod.softmax_apply_t(P, Q, off, lse, coef, 0.5)
    return mod.softmax_mean(P, Q, off, 0.5)


def best_time(fn, repeat):
    out = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out = min(out, time.perf_counter() - t0)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[500, 2000])
    ap.add_argument("--dims", type=int, nargs="+", default=[1, 2, 8, 32, 100])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = available_backends()
    rng = np.random.default_rng(args.seed)
    print(f"dispatcher switches to numpy above {GEMM_MIN_DIM} dims")
    print(f"{'kernel':<16}{'n':>6}{'d':>5}" + "".join(f"{b + ' ms':>12}" for b in backends)
          + f"{'speed-up':>10}")
    for n in args.sizes:
        for d in args.dims:
            P, Q = rng.normal(size=(n, d)), rng.normal(size=(n, d))
            off, coef = rng.normal(size=n), rng.normal(size=n)
            lse = backends["numpy"].lse_rows(P, Q, off, 0.5)
            for name in KERNELS:
                times = {b: best_time(lambda m=m: call(m, name, P, Q, off, lse, coef), args.repeat)
                         for b, m in backends.items()}
                row = f"{name:<16}{n:>6}{d:>5}" + "".join(f"{1e3 * t:>12.2f}" for t in times.values())
                if "cython" in times:
                    row += f"{times['numpy'] / times['cython']:>10.2f}"
                print(row)


if __name__ == "__main__":
    main()
