"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_backends.py [--reps 200] [--csv out.csv]

Each row is one (shape, kernel, backend) cell: the median wall time of the
forward sweep, the adjoint sweep, or the Givens reduction.  The numba kernels
are called once before timing so compilation is excluded.
"""

import argparse
import csv
import statistics
import sys
import time

import numpy as np

from stiefel_givens import _kernels_numba, _kernels_numpy
from stiefel_givens.givens import Shape
from stiefel_givens.oracle import haar_sample

SHAPES = [(10, 1), (10, 10), (50, 3), (100, 1), (100, 10), (200, 4)]
BACKENDS = {"numba": _kernels_numba, "numpy": _kernels_numpy}


def _median_time(fn, reps):
    ts = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return statistics.median(ts)


def cells(reps):
    rng = np.random.default_rng(0)
    for n, p in SHAPES:
        shape = Shape(n, p)
        theta = rng.uniform(-1.0, 1.0, shape.d)
        A = haar_sample(shape, rng)
        dY = rng.standard_normal((n, p))
        for name, k in BACKENDS.items():
            Y, _ = k.forward(theta, n, p)
            k.backward(theta, Y, dY, n, p)
            k.reduce(A)
            yield n, p, "forward", name, _median_time(lambda: k.forward(theta, n, p), reps)
            yield n, p, "backward", name, _median_time(lambda: k.backward(theta, Y, dY, n, p), reps)
            yield n, p, "reduce", name, _median_time(lambda: k.reduce(A), reps)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--csv", default=None)
    args = ap.parse_args(argv)

    rows = list(cells(args.reps))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "p", "kernel", "backend", "median_s"])
            w.writerows(rows)

    by_key = {(n, p, kern, b): t for n, p, kern, b, t in rows}
    print(f"{'n':>5} {'p':>4} {'kernel':>9} {'numba us':>10} {'numpy us':>10} {'speedup':>8}")
    for n, p in SHAPES:
        for kern in ("forward", "backward", "reduce"):
            tb, tn = by_key[(n, p, kern, "numba")], by_key[(n, p, kern, "numpy")]
            print(f"{n:>5} {p:>4} {kern:>9} {tb * 1e6:>10.1f} {tn * 1e6:>10.1f} {tn / tb:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
