"""The numba kernel and the numpy fallback must solve identically."""
from __future__ import annotations

import os
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from iotcve import _solver
from iotcve.features import SparseVector, stack_vectors


def _random_state(seed: int, n: int = 40, d: int = 15):
    rng = np.random.default_rng(seed)
    vectors = []
    for _ in range(n):
        nnz = int(rng.integers(1, 6))
        indices = np.sort(rng.choice(d, size=nnz, replace=False)).astype(np.int64)
        values = rng.normal(size=nnz)
        vectors.append(SparseVector(indices, values))
    matrix = stack_vectors(vectors, d)
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y[0], y[1] = 1.0, -1.0
    norms = np.ones(n)
    for i in range(n):
        s, e = matrix.indptr[i], matrix.indptr[i + 1]
        norms[i] += float(np.dot(matrix.data[s:e], matrix.data[s:e]))
    cost = np.full(n, 1.0)
    return matrix, y, norms, cost


@pytest.mark.skipif(_solver.epoch_numba is None, reason="numba unavailable")
def test_backends_agree_on_identical_permutations():
    matrix, y, norms, cost = _random_state(3)
    n = y.shape[0]
    perm_rng = np.random.default_rng(11)
    perms = [perm_rng.permutation(n) for _ in range(50)]

    alpha_a = np.zeros(n)
    w_a = np.zeros(matrix.n_cols + 1)
    alpha_b = np.zeros(n)
    w_b = np.zeros(matrix.n_cols + 1)
    for perm in perms:
        va = _solver.epoch_numba(
            matrix.data, matrix.indices, matrix.indptr, y, norms, cost,
            alpha_a, w_a, perm,
        )
        vb = _solver.epoch_numpy(
            matrix.data, matrix.indices, matrix.indptr, y, norms, cost,
            alpha_b, w_b, perm,
        )
        assert va == pytest.approx(vb, abs=1e-9)
    assert np.allclose(w_a, w_b, atol=1e-9)
    assert np.allclose(alpha_a, alpha_b, atol=1e-9)


def test_default_backend_reports_itself():
    assert _solver.solver_backend() in ("numba", "numpy")


_FALLBACK_SNIPPET = textwrap.dedent(
    """
    import json
    from iotcve._solver import solver_backend
    from iotcve.corpus import Taxonomy, build_dataset
    from iotcve.svm import TrainParams, predict, train_ovr
    from device_fixture import device_records

    assert solver_backend() == "numpy"
    records, labels = device_records()
    ds = build_dataset(records, labels, Taxonomy.default())
    model = train_ovr(ds, TrainParams(seed=42, max_iter=200))
    correct = sum(predict(model, ex.fields).label == ex.label for ex in ds.examples)
    print(json.dumps({"backend": solver_backend(), "correct": correct,
                      "total": len(ds.examples)}))
    """
)


def test_numpy_fallback_via_env_flag():
    env = dict(os.environ, IOTCVE_NO_NUMBA="1")
    proc = subprocess.run(
        [sys.executable, "-c", _FALLBACK_SNIPPET],
        capture_output=True,
        text=True,
        env=env,
        cwd=os.path.dirname(__file__),
    )
    assert proc.returncode == 0, proc.stderr
    import json

    result = json.loads(proc.stdout.strip().splitlines()[-1])
    assert result["backend"] == "numpy"
    assert result["correct"] == result["total"] == 22
