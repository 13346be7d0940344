#!/usr/bin/env python3
"""Benchmark the coordinate-descent epoch kernel: numba vs numpy.

Builds a synthetic sparse problem shaped like a real TF-IDF corpus
(tens of thousands of features, a few dozen nonzeros per row), runs the
same epochs through both backends, checks they agree, and reports the
throughput of each. Run directly:

    python benchmarks/bench_solver.py [--rows 4000] [--epochs 20]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from iotcve import _solver
from iotcve.features import SparseVector, stack_vectors


def build_problem(rows: int, cols: int, nnz_per_row: int, seed: int):
    rng = np.random.default_rng(seed)
    vectors = []
    for _ in range(rows):
        nnz = int(rng.integers(nnz_per_row // 2, nnz_per_row * 2))
        indices = np.sort(rng.choice(cols, size=nnz, replace=False)).astype(np.int64)
        values = rng.normal(size=nnz)
        values /= np.sqrt(np.dot(values, values))
        vectors.append(SparseVector(indices, values))
    matrix = stack_vectors(vectors, cols)
    y = np.where(rng.random(rows) < 0.5, 1.0, -1.0)
    norms = np.ones(rows)
    for i in range(rows):
        s, e = matrix.indptr[i], matrix.indptr[i + 1]
        norms[i] += float(np.dot(matrix.data[s:e], matrix.data[s:e]))
    cost = np.full(rows, 1.0)
    return matrix, y, norms, cost


def run_epochs(kernel, matrix, y, norms, cost, perms):
    alpha = np.zeros(y.shape[0])
    w = np.zeros(matrix.n_cols + 1)
    start = time.perf_counter()
    violation = np.inf
    for perm in perms:
        violation = kernel(
            matrix.data, matrix.indices, matrix.indptr, y, norms, cost,
            alpha, w, perm,
        )
    elapsed = time.perf_counter() - start
    return w, violation, elapsed


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=4000)
    parser.add_argument("--cols", type=int, default=20000)
    parser.add_argument("--nnz", type=int, default=40)
    parser.add_argument("--epochs", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if _solver.epoch_numba is None:
        raise SystemExit(
            "numba backend unavailable (numba missing or IOTCVE_NO_NUMBA set); "
            "nothing to compare"
        )

    matrix, y, norms, cost = build_problem(args.rows, args.cols, args.nnz, args.seed)
    perm_rng = np.random.default_rng(args.seed + 1)
    perms = [perm_rng.permutation(args.rows) for _ in range(args.epochs)]

    # warm-up epoch triggers (or loads the cached) JIT compile
    compile_start = time.perf_counter()
    run_epochs(_solver.epoch_numba, matrix, y, norms, cost, perms[:1])
    compile_time = time.perf_counter() - compile_start

    w_numba, v_numba, t_numba = run_epochs(
        _solver.epoch_numba, matrix, y, norms, cost, perms
    )
    w_numpy, v_numpy, t_numpy = run_epochs(
        _solver.epoch_numpy, matrix, y, norms, cost, perms
    )

    diff = float(np.max(np.abs(w_numba - w_numpy)))
    assert diff < 1e-9, f"backends disagree: max |dw| = {diff}"
    assert abs(v_numba - v_numpy) < 1e-9

    updates = args.rows * args.epochs
    print(f"problem: {args.rows} rows x {args.cols} cols, {args.epochs} epochs")
    print(f"jit warm-up:   {compile_time:8.3f}s")
    print(f"numba backend: {t_numba:8.3f}s  ({updates / t_numba:12.0f} updates/s)")
    print(f"numpy backend: {t_numpy:8.3f}s  ({updates / t_numpy:12.0f} updates/s)")
    print(f"speedup:       {t_numpy / t_numba:8.1f}x")
    print(f"max |w_numba - w_numpy| = {diff:.2e}")


if __name__ == "__main__":
    main()
