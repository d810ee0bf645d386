"""Compare the compiled kernels with the NumPy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--quick]

Each kernel is timed on both backends with identical inputs; the last
column is the largest absolute difference between the two outputs.
"""

import argparse
import sys
import timeit

import numpy as np

from geosandwich._kernels import compiled_kernels, python_kernels


def _chord_case(rng, q, d, l):
    shape = (q, d, l)
    return (rng.normal(size=shape), rng.normal(size=shape),
            rng.uniform(0.01, 1.0, size=shape), rng.uniform(0.01, 1.0, size=shape))


def cases(quick):
    rng = np.random.default_rng(7)
    scale = 4 if quick else 1
    q = 4096 // scale
    out = {}
    out["chord_min"] = ("chord_min", _chord_case(rng, q, 8, 16))
    n = 401 // scale
    xs = np.linspace(-2.0, 2.0, n)
    out["envelope_1d_exhaustive"] = ("envelope_1d_exhaustive", (xs, 1.0 - np.abs(xs)))
    grid = rng.normal(size=(97, 97))
    queries = rng.uniform(0.0, 1.0, size=(200000 // scale, 2))
    out["interp_regular"] = ("interp_regular",
                             (grid, np.zeros(2), np.full(2, 1.0 / 96), np.array([True, False]),
                              queries))
    x0 = rng.uniform(-0.3, 0.3, size=(256 // scale, 2))
    v0 = rng.normal(size=x0.shape) * 0.5
    out["rk4_conformal"] = ("rk4_conformal", (x0, v0, 1e-3, 1000, 2, 1.0, False))
    return out


def _max_diff(a, b):
    if isinstance(a, tuple):
        return max(_max_diff(x, y) for x, y in zip(a, b))
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    both = np.isfinite(a) & np.isfinite(b)
    if np.any(np.isfinite(a) != np.isfinite(b)):
        return np.inf
    return float(np.max(np.abs(a[both] - b[both]), initial=0.0))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--quick", action="store_true", help="smaller inputs")
    args = parser.parse_args(argv)
    if compiled_kernels is None:
        print("compiled kernels are not built; only the fallback is available", file=sys.stderr)
        return 1
    print(f"{'kernel':<24}{'compiled [ms]':>15}{'python [ms]':>15}{'speedup':>10}{'max diff':>12}")
    for label, (name, inputs) in cases(args.quick).items():
        fc = getattr(compiled_kernels, name)
        fp = getattr(python_kernels, name)
        tc = min(timeit.repeat(lambda: fc(*inputs), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fp(*inputs), number=1, repeat=args.repeat))
        diff = _max_diff(fc(*inputs), fp(*inputs))
        print(f"{label:<24}{tc * 1e3:>15.2f}{tp * 1e3:>15.2f}{tp / tc:>9.1f}x{diff:>12.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
