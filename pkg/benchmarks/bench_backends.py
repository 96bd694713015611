"""Compare the compiled and numpy kernel backends.

Usage: python3 benchmarks/bench_backends.py [--trials N] [--scaling]

Prints median seconds per call for conv1d forward/backward and max-pool on
every available backend, the compiled/numpy speed-up, and optionally the
doubling-ratio scaling check for each backend.
"""

import argparse
from collections import defaultdict

from ihards import bench
from ihards.cnn import backend


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--scaling", action="store_true", help="also run the scaling check per backend")
    args = ap.parse_args()

    rows = bench.compare_backends(trials=args.trials)
    print(bench.format_comparison(rows), end="")
    by_op = defaultdict(dict)
    for name, op, secs in rows:
        by_op[op][name] = secs
    for op, times in by_op.items():
        if "cython" in times and "numpy" in times:
            print(f"speedup.{op}={times['numpy'] / times['cython']:.2f}x")
    if args.scaling:
        for name in backend.available():
            print(bench.format_scaling(bench.run_scaling(args.trials, name), name), end="")


if __name__ == "__main__":
    main()
