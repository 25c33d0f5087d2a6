"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py --repeat 5
"""

import argparse
import timeit

import numpy as np

from brancho._kernels import _pykernels

try:
    from brancho._kernels import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    starts = rng.uniform(-1, 1, size=(300, 2))
    ends = rng.uniform(-1, 1, size=(300, 2))
    # full Steiner tree on 8 terminals: 6 branch nodes, 13 edges
    term = rng.uniform(-1, 1, size=(8, 2))
    coords = np.vstack([term, np.repeat(term.mean(axis=0, keepdims=True), 6, axis=0)])
    eu = np.array([0, 1, 8, 2, 9, 3, 10, 4, 11, 5, 12, 6, 7], dtype=np.int64)
    ev = np.array([8, 8, 9, 9, 10, 10, 11, 11, 12, 12, 13, 13, 13], dtype=np.int64)
    cw = rng.uniform(0.2, 1.0, size=13)
    free = np.zeros(14, dtype=np.uint8)
    free[8:] = 1
    lo, hi = term.min(axis=0), term.max(axis=0)
    return {
        "segment_splits (300 segments)": lambda k: k.segment_splits(starts, ends, 1e-9),
        "tree_cost (13 edges)": lambda k: k.tree_cost(coords, eu, ev, cw),
        "weber_sweeps (6 free nodes)": lambda k: k.weber_sweeps(coords, free, eu, ev, cw, 200, 1e-12),
        "golden_descent (6 free nodes)": lambda k: k.golden_descent(coords, free, eu, ev, cw, lo, hi, 1e-10, 200),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    table = cases(np.random.default_rng(args.seed))
    print(f"{'kernel':<32} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8}")
    for name, fn in table.items():
        n = 3 if "tree_cost" not in name else 2000
        py = min(timeit.repeat(lambda: fn(_pykernels), number=n, repeat=args.repeat)) / n * 1e3
        if _ckernels is None:
            print(f"{name:<32} {py:12.3f} {'n/a':>12} {'':>8}")
            continue
        cy = min(timeit.repeat(lambda: fn(_ckernels), number=n, repeat=args.repeat)) / n * 1e3
        print(f"{name:<32} {py:12.3f} {cy:12.3f} {py / cy:7.1f}x")


if __name__ == "__main__":
    main()
