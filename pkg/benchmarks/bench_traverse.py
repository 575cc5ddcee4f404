"""Compare the compiled and pure-Python traversal kernels.

Usage::

    python benchmarks/bench_traverse.py --sizes 1000 10000 100000 --t-r 5
"""
import argparse
import time

import numpy as np

from lexisgrid import _backend
from lexisgrid.batch import segment_arrays, traverse_arrays
from lexisgrid.cohort import SimConfig, simulate_cohort
from lexisgrid.core import GridSpec
from lexisgrid.exposure import RiskSemantics, risk_segments


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[1_000, 10_000, 100_000])
    parser.add_argument("--t-r", dest="t_r", type=float, default=5.0)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    backends = ["python"]
    if _backend.compiled_traverse_batch is not None:
        backends.insert(0, "compiled")
    else:
        print("compiled kernel not available; timing the Python fallback only")

    grid = GridSpec(args.t_r, 3)
    cohort = simulate_cohort(SimConfig(max(args.sizes), seed=args.seed))
    segments = [s for r in cohort for s in risk_segments(r, RiskSemantics.POST_ONSET)]

    print(f"{'subjects':>9} {'backend':>9} {'seconds':>10} {'segments/s':>12} {'ratio':>7}")
    for n in args.sizes:
        arrays = segment_arrays(segments[:n])
        times = {}
        for name in backends:
            times[name] = best_of(lambda: traverse_arrays(*arrays, grid, backend=name), args.repeat)
        for name in backends:
            ratio = times["python"] / times[name]
            print(f"{n:>9} {name:>9} {times[name]:>10.4f} {n / times[name]:>12.0f} {ratio:>6.1f}x")


if __name__ == "__main__":
    main()
