"""Timing of rrcs_scores: serial kernel and the numba-parallel variant.

Set NUMBA_NUM_THREADS before launching to cap the thread pool.
"""

import argparse
import os
import time

import numba
import numpy as np

from rankscreen.screening import Dataset, rrcs_scores


def best(fn, k):
    out = []
    for _ in range(k):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[100, 300, 1000])
    ap.add_argument("--p", type=int, nargs="+", default=[1000, 10000])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    warm = Dataset(rng.standard_normal((10, 3)), rng.standard_normal(10))
    rrcs_scores(warm)
    rrcs_scores(warm, parallel=True)
    print(f"cpus={os.cpu_count()} numba_threads={numba.get_num_threads()}")
    print("| n | p | serial s | parallel s | speedup |")
    print("|---|---|---|---|---|")
    for n in args.n:
        for p in args.p:
            d = Dataset(rng.standard_normal((n, p)), rng.standard_normal(n))
            s = best(lambda: rrcs_scores(d), args.repeat)
            q = best(lambda: rrcs_scores(d, parallel=True), args.repeat)
            print(f"| {n} | {p} | {s:.3f} | {q:.3f} | {s / q:.2f} |")


if __name__ == "__main__":
    main()
