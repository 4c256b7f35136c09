#!/usr/bin/env python3
"""Benchmark the split-scan kernels: compiled extension vs numpy fallback.

Measures the raw per-feature scan and a full training run on the synthetic
fixture, and verifies both backends pick bit-identical splits. Run:

    python benchmarks/bench_kernels.py [--rows 200000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from fedt import boosting
from fedt.boosting import FedtParams, TrainingSet, train
from fedt.features import default_registry, extract_matrix
from fedt.kernels import pure
from fedt.signals import Label
from fedt.synthetic import GeneratorSpec, separable_windows

try:
    from fedt.kernels import _scan as compiled
except ImportError:
    compiled = None


def bench_scan(impl, values, grad, hess, repeat):
    total_g = pure.sequential_sum(grad)
    total_h = pure.sequential_sum(hess)
    best = None
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = impl.scan_sorted_split(values, grad, hess, total_g, total_h, 0.0, 2.0, 1.0)
        best = min(best, time.perf_counter() - t0) if best else time.perf_counter() - t0
    return best, result


def bench_train(impl, data, params, repeat):
    boosting.kernels.scan_sorted_split = impl.scan_sorted_split
    boosting.kernels.sequential_sum = impl.sequential_sum
    best = None
    model = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        model = train(data, params)
        best = min(best, time.perf_counter() - t0) if best else time.perf_counter() - t0
    return best, model


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rows", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if compiled is None:
        print("compiled kernel not built; showing the pure backend only")

    rng = np.random.default_rng(0)
    values = np.sort(rng.normal(0, 1, args.rows))
    grad = rng.normal(0, 1, args.rows)
    hess = rng.uniform(0.01, 1.0, args.rows)

    print(f"split scan over one sorted feature of {args.rows:,} rows "
          f"(best of {args.repeat}):")
    t_pure, r_pure = bench_scan(pure, values, grad, hess, args.repeat)
    print(f"  pure     {t_pure * 1e3:8.2f} ms")
    if compiled is not None:
        t_fast, r_fast = bench_scan(compiled, values, grad, hess, args.repeat)
        print(f"  compiled {t_fast * 1e3:8.2f} ms   ({t_pure / t_fast:.1f}x)")
        assert r_pure == r_fast, "backends disagree on the best split"
        print("  results bit-identical")

    windows = separable_windows(GeneratorSpec(n_falls=120, n_adls=6, adl_len=4000))
    registry = default_registry()
    X = extract_matrix(windows, registry)
    y = np.asarray([1.0 if w.label is Label.FALL else 0.0 for w in windows])
    data = TrainingSet(X, y, registry.fingerprint)
    params = FedtParams(n_rounds=20, max_depth=5)

    print(f"\nfull training run ({X.shape[0]:,} windows x {X.shape[1]} features, "
          f"{params.n_rounds} trees, best of {max(1, args.repeat // 2)}):")
    t_pure, m_pure = bench_train(pure, data, params, max(1, args.repeat // 2))
    print(f"  pure     {t_pure:8.2f} s")
    if compiled is not None:
        t_fast, m_fast = bench_train(compiled, data, params, max(1, args.repeat // 2))
        print(f"  compiled {t_fast:8.2f} s   ({t_pure / t_fast:.1f}x)")
        same = all(
            np.array_equal(a.feature, b.feature)
            and np.array_equal(a.threshold, b.threshold)
            and np.array_equal(a.weight, b.weight)
            for a, b in zip(m_pure.trees, m_fast.trees)
        )
        assert same, "backends trained different models"
        print("  models identical")


if __name__ == "__main__":
    main()
