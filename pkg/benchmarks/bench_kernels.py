"""Time the numba and pure-numpy paths of the hot kernels side by side.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--n 20000]

Both paths are checked for identical output before timing. The first numba
call (compilation) is excluded.
"""
import argparse
import time

import numpy as np

from bandgrowth import _kernels
from bandgrowth._accel import HAVE_NUMBA
from bandgrowth.core import random_banded
from bandgrowth.field import FieldConfig


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, seed):
    rng = np.random.default_rng(seed)
    f = FieldConfig.gfp(7)
    a = random_banded(f, n, 6, rng)
    b = random_banded(f, n, 6, rng)
    rows, cols, _ = a.coo()
    dense = rng.integers(0, 7, size=(160, 240)).astype(np.int64)
    return {
        "band_profile": lambda be: _kernels.band_profile(rows - 1, cols - 1, n, backend=be),
        "spgemm_mod": lambda be: _kernels.spgemm_mod(
            a.indptr, a.indices, a.data, b.indptr, b.indices, b.data, n, 7, backend=be
        ),
        "rref_mod": lambda be: _kernels.rref_mod(dense, 7, backend=be),
    }


def same(x, y):
    if isinstance(x, tuple):
        return all(np.array_equal(u, v) for u, v in zip(x, y))
    return np.array_equal(x, y)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000, help="window size for the sparse kernels")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'kernel':<14}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, run in cases(args.n, args.seed).items():
        t_np = best_of(lambda: run("numpy"), args.repeat)
        if HAVE_NUMBA:
            assert same(run("numpy"), run("numba")), f"{name}: backends disagree"
            t_nb = best_of(lambda: run("numba"), args.repeat)
            print(f"{name:<14}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{name:<14}{t_np:>12.4f}{'n/a':>12}{'':>10}")


if __name__ == "__main__":
    main()
