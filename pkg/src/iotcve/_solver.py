"""Hot kernel of SVM training: one coordinate-descent epoch over CSR rows.

Two interchangeable implementations:

* ``epoch_numba``: explicit loops compiled with numba's ``@njit``; the
  default whenever numba imports.
* ``epoch_numpy``: the same update sequence written against numpy
  slicing; used when numba is unavailable or when the environment
  variable ``IOTCVE_NO_NUMBA`` is set to anything but ``0``/empty.

Each backend is bit-deterministic on its own. Across backends the
per-row dot products may differ in the last ulp (sequential sum vs
BLAS), so cross-backend agreement is a tolerance, not an identity;
``benchmarks/bench_solver.py`` checks it.

Weight layout: ``w[:n_features]`` are feature weights, ``w[-1]`` is the
bias carried as a constant augmented feature, so ``row_norms_sq`` must
already include its ``+ 1``.
"""
from __future__ import annotations

import os

import numpy as np

__all__ = ["epoch_pass", "solver_backend", "epoch_numpy", "epoch_numba"]


def _epoch_loops(data, indices, indptr, y, row_norms_sq, cost, alpha, w, order):
    """One epoch in seeded-shuffled order; returns the max |projected gradient|.

    Mutates ``alpha`` and ``w`` in place. For each row i, with
    G = y_i * (w . x_i) - 1, the dual variable moves to
    clip(alpha_i - G / ||x_i||^2, 0, C_i) and w absorbs the change.
    """
    max_pg = 0.0
    bias = w.shape[0] - 1
    for k in range(order.shape[0]):
        i = order[k]
        start = indptr[i]
        end = indptr[i + 1]
        margin = w[bias]
        for j in range(start, end):
            margin += data[j] * w[indices[j]]
        g = y[i] * margin - 1.0
        a = alpha[i]
        c = cost[i]
        if a <= 0.0:
            pg = g if g < 0.0 else 0.0
        elif a >= c:
            pg = g if g > 0.0 else 0.0
        else:
            pg = g
        if pg != 0.0:
            apg = -pg if pg < 0.0 else pg
            if apg > max_pg:
                max_pg = apg
            new_a = a - g / row_norms_sq[i]
            if new_a < 0.0:
                new_a = 0.0
            elif new_a > c:
                new_a = c
            delta = (new_a - a) * y[i]
            if delta != 0.0:
                alpha[i] = new_a
                for j in range(start, end):
                    w[indices[j]] += delta * data[j]
                w[bias] += delta
    return max_pg


def epoch_numpy(data, indices, indptr, y, row_norms_sq, cost, alpha, w, order):
    """Numpy variant: vectorized row gather/scatter, same update order."""
    max_pg = 0.0
    bias = w.shape[0] - 1
    for i in order:
        start = indptr[i]
        end = indptr[i + 1]
        cols = indices[start:end]
        vals = data[start:end]
        g = y[i] * (float(np.dot(vals, w[cols])) + w[bias]) - 1.0
        a = alpha[i]
        c = cost[i]
        if a <= 0.0:
            pg = g if g < 0.0 else 0.0
        elif a >= c:
            pg = g if g > 0.0 else 0.0
        else:
            pg = g
        if pg != 0.0:
            apg = abs(pg)
            if apg > max_pg:
                max_pg = apg
            new_a = min(max(a - g / row_norms_sq[i], 0.0), c)
            delta = (new_a - a) * y[i]
            if delta != 0.0:
                alpha[i] = new_a
                w[cols] += delta * vals
                w[bias] += delta
    return max_pg


def _want_numba() -> bool:
    flag = os.environ.get("IOTCVE_NO_NUMBA", "").strip()
    return flag in ("", "0")


epoch_numba = None
if _want_numba():
    try:
        from numba import njit

        epoch_numba = njit(cache=True)(_epoch_loops)
        _BACKEND = "numba"
    except ImportError:
        _BACKEND = "numpy"
else:
    _BACKEND = "numpy"


def solver_backend() -> str:
    return _BACKEND


def epoch_pass(data, indices, indptr, y, row_norms_sq, cost, alpha, w, order):
    if epoch_numba is not None:
        return epoch_numba(data, indices, indptr, y, row_norms_sq, cost, alpha, w, order)
    return epoch_numpy(data, indices, indptr, y, row_norms_sq, cost, alpha, w, order)
