#!/usr/bin/env python3
"""Benchmark the forest split-search backends: compiled kernel vs numpy.

Fits identical forests through both kernels on synthetic mixtures of growing
size, times each, and verifies the resulting trees match exactly. Run with:

    python3 benchmarks/bench_split.py [--trees N] [--repeats R]
"""

import argparse
import time

import numpy as np

from cropshift.classify import ForestParams, rf_fit
from cropshift.classify import _split_py
from cropshift.classify import forest as forest_mod
from cropshift.dataset import Dataset
from cropshift.synth import default_world, generate

try:
    from cropshift.classify import _split_fast
except ImportError:
    _split_fast = None


def make_dataset(n_per_region: int, seed: int) -> Dataset:
    spec = default_world(samples_per_region=(n_per_region,) * 3, seed=seed)
    region = generate(spec)["r1"]
    return region


def fit_with_backend(data, params, backend):
    original = forest_mod.best_split_node
    forest_mod.best_split_node = backend.best_split_node
    try:
        t0 = time.perf_counter()
        model = rf_fit(data, params)
        return model, time.perf_counter() - t0
    finally:
        forest_mod.best_split_node = original


def forests_match(a, b) -> bool:
    for ta, tb in zip(a.trees, b.trees):
        if not (
            np.array_equal(ta.feature, tb.feature)
            and np.array_equal(ta.threshold, tb.threshold, equal_nan=True)
            and np.array_equal(ta.left, tb.left)
            and np.array_equal(ta.right, tb.right)
            and np.array_equal(ta.counts, tb.counts)
        ):
            return False
    return True


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trees", type=int, default=30)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--sizes", default="250,500,1000,2000")
    args = parser.parse_args()

    if _split_fast is None:
        print("compiled kernel not built; run pip install -e . --no-build-isolation")
        return

    sizes = [int(s) for s in args.sizes.split(",")]
    params = ForestParams(n_trees=args.trees, seed=0)
    print(f"forest fit: {args.trees} trees, best of {args.repeats} runs\n")
    print(f"{'n_samples':>10} {'numpy (s)':>12} {'compiled (s)':>13} {'speedup':>9} {'match':>6}")
    for n in sizes:
        data = make_dataset(n, seed=7)
        t_py = min(
            fit_with_backend(data, params, _split_py)[1] for _ in range(args.repeats)
        )
        model_py, _ = fit_with_backend(data, params, _split_py)
        t_cy = min(
            fit_with_backend(data, params, _split_fast)[1] for _ in range(args.repeats)
        )
        model_cy, _ = fit_with_backend(data, params, _split_fast)
        match = forests_match(model_py, model_cy)
        print(
            f"{n:>10} {t_py:>12.3f} {t_cy:>13.3f} {t_py / t_cy:>8.1f}x "
            f"{'yes' if match else 'NO'}"
        )


if __name__ == "__main__":
    main()
