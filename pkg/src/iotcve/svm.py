"""Linear SVM training by dual coordinate descent, combined one-vs-rest.

The binary trainer optimizes the L2-regularized hinge-loss objective

    min_w  0.5 ||w||^2 + sum_i C_i * max(0, 1 - y_i * (w . x_i))

with the bias folded in as a constant augmented feature (so it is
regularized along with the weights). Optimization runs on the dual with
box constraints [0, C_i]: examples are visited in a seeded-shuffled
order re-drawn each epoch, and training stops when the largest
projected-gradient violation of an epoch drops below ``tol``.

All randomness flows from one seed; given the same inputs and seed the
weight vectors are bit-identical across runs on the same platform.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ._solver import epoch_pass
from .corpus import ClassLabel, LabeledDataset, Taxonomy, TextFields
from .errors import (
    DegenerateProblem,
    IndexOutOfRange,
    MalformedModel,
    ModelVersionMismatch,
    NonFinite,
    SingleClassDataset,
)
from .features import (
    CsrMatrix,
    SparseVector,
    TfIdfModel,
    Vocabulary,
    fit,
    stack_vectors,
    transform,
)
from .textprep import preprocess_fields, stopwords_hash

__all__ = [
    "TrainParams",
    "BinaryProblem",
    "LinearModel",
    "MulticlassModel",
    "Prediction",
    "train_binary",
    "decision",
    "train_ovr",
    "predict",
    "primal_objective",
    "save_model",
    "load_model",
    "MODEL_FORMAT_VERSION",
]

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainParams:
    """Pipeline knobs; defaults match the CLI defaults."""

    C: float = 1.0
    tol: float = 1e-4
    max_iter: int = 1000
    seed: int = 42
    min_df: int = 1
    balanced: bool = False
    include_versions: bool = False


@dataclass(frozen=True)
class BinaryProblem:
    vectors: Sequence[SparseVector]
    labels: np.ndarray
    C: float
    n_features: int

    def __post_init__(self) -> None:
        if len(self.vectors) != self.labels.shape[0]:
            raise DegenerateProblem("vectors and labels differ in length")
        if len(self.vectors) < 2:
            raise DegenerateProblem("need at least two training points")
        if not (np.any(self.labels > 0) and np.any(self.labels < 0)):
            raise DegenerateProblem("both label signs must be present")
        if self.C <= 0:
            raise DegenerateProblem(f"C must be positive, got {self.C}")


@dataclass(frozen=True)
class LinearModel:
    """One hyperplane; ``weights[-1]`` is the bias slot."""

    weights: np.ndarray
    target_class: str = ""
    train_meta: dict = field(default_factory=dict)

    @property
    def bias(self) -> float:
        return float(self.weights[-1])


def _as_csr(problem: BinaryProblem) -> CsrMatrix:
    return stack_vectors(list(problem.vectors), problem.n_features)


def train_binary(
    problem: BinaryProblem,
    tol: float = 1e-4,
    max_iter: int = 1000,
    seed: int = 42,
    cost: np.ndarray | None = None,
    target_class: str = "",
) -> LinearModel:
    """Fit one binary separator by dual coordinate descent."""
    if tol <= 0:
        raise DegenerateProblem(f"tol must be positive, got {tol}")
    matrix = _as_csr(problem)
    n = matrix.n_rows
    y = np.asarray(problem.labels, dtype=np.float64)
    if cost is None:
        cost = np.full(n, problem.C, dtype=np.float64)
    else:
        cost = np.asarray(cost, dtype=np.float64)
    # +1.0 accounts for the constant augmented bias feature
    row_norms_sq = np.ones(n, dtype=np.float64)
    for i in range(n):
        start, end = matrix.indptr[i], matrix.indptr[i + 1]
        row_norms_sq[i] += float(np.dot(matrix.data[start:end], matrix.data[start:end]))

    alpha = np.zeros(n, dtype=np.float64)
    w = np.zeros(problem.n_features + 1, dtype=np.float64)
    rng = np.random.Generator(np.random.PCG64(seed))

    violation = np.inf
    epochs = 0
    for _ in range(max_iter):
        order = rng.permutation(n)
        violation = epoch_pass(
            matrix.data, matrix.indices, matrix.indptr,
            y, row_norms_sq, cost, alpha, w, order,
        )
        epochs += 1
        if violation < tol:
            break

    if not np.isfinite(w).all():
        raise NonFinite("training produced non-finite weights")
    return LinearModel(
        weights=w,
        target_class=target_class,
        train_meta={
            "iterations": epochs,
            "final_violation": float(violation),
            "C": problem.C,
            "tol": tol,
            "seed": seed,
        },
    )


def decision(model: LinearModel, x: SparseVector) -> float:
    """Sparse dot product against the hyperplane, bias included."""
    n_features = model.weights.shape[0] - 1
    if x.nnz and int(x.indices[-1]) >= n_features:
        raise IndexOutOfRange(
            f"vector index {int(x.indices[-1])} outside model dimension {n_features}"
        )
    return float(np.dot(x.values, model.weights[x.indices]) + model.weights[-1])


def primal_objective(
    model: LinearModel, problem: BinaryProblem, cost: np.ndarray | None = None
) -> float:
    """0.5||w||^2 + sum_i C_i * hinge_i for the augmented-bias objective."""
    if cost is None:
        cost = np.full(len(problem.vectors), problem.C, dtype=np.float64)
    total = 0.5 * float(np.dot(model.weights, model.weights))
    for i, vec in enumerate(problem.vectors):
        margin = problem.labels[i] * decision(model, vec)
        total += cost[i] * max(0.0, 1.0 - margin)
    return total


@dataclass(frozen=True)
class MulticlassModel:
    tfidf: TfIdfModel
    models: dict[str, LinearModel]
    class_order: tuple[str, ...]
    fallback_class: str
    taxonomy: Taxonomy
    stopword_list_hash: str
    params: TrainParams


@dataclass(frozen=True)
class Prediction:
    label: str
    decisions: dict[str, float]
    low_confidence: bool


def _fallback_class(counts: dict[str, int]) -> str:
    top = max(counts.values())
    return min(code for code, n in counts.items() if n == top)


def train_ovr(
    dataset: LabeledDataset,
    params: TrainParams = TrainParams(),
    stopwords: frozenset[str] | None = None,
    stopword_hash: str | None = None,
) -> MulticlassModel:
    """Fit TF-IDF on the training set only, then one model per class."""
    present = dataset.present_classes()
    if len(present) < 2:
        raise SingleClassDataset(f"training set has classes {present}")

    streams = [
        ex.token_stream(
            include_versions=params.include_versions, stopwords=stopwords
        )
        for ex in dataset.examples
    ]
    tfidf = fit(streams, min_df=params.min_df)
    vectors = [transform(tfidf, s) for s in streams]
    n_features = len(tfidf)

    labels = [ex.label for ex in dataset.examples]
    counts = {code: labels.count(code) for code in present}
    n = len(labels)
    k = len(present)

    cost = None
    if params.balanced:
        per_class = {c: params.C * n / (k * counts[c]) for c in present}
        cost = np.array([per_class[lab] for lab in labels], dtype=np.float64)

    models: dict[str, LinearModel] = {}
    for class_index, code in enumerate(present):
        y = np.array([1.0 if lab == code else -1.0 for lab in labels])
        problem = BinaryProblem(
            vectors=vectors, labels=y, C=params.C, n_features=n_features
        )
        models[code] = train_binary(
            problem,
            tol=params.tol,
            max_iter=params.max_iter,
            seed=params.seed + class_index,
            cost=cost,
            target_class=code,
        )

    return MulticlassModel(
        tfidf=tfidf,
        models=models,
        class_order=tuple(present),
        fallback_class=_fallback_class(counts),
        taxonomy=dataset.taxonomy,
        stopword_list_hash=stopword_hash or stopwords_hash(),
        params=params,
    )


def predict(
    model: MulticlassModel,
    fields: TextFields,
    stopwords: frozenset[str] | None = None,
) -> Prediction:
    """Preprocess, vectorize, and take the argmax decision value.

    Ties go to the lexicographically smallest class code; a record whose
    tokens are all unknown falls back to the majority training class
    with ``low_confidence`` set.
    """
    stream = preprocess_fields(
        list(fields.vendors),
        list(fields.products),
        fields.summary,
        fields.cwe_id,
        list(fields.versions),
        include_versions=model.params.include_versions,
        stopwords=stopwords,
    )
    vector = transform(model.tfidf, stream)
    decisions = {
        code: decision(model.models[code], vector) for code in model.class_order
    }
    if vector.nnz == 0:
        return Prediction(model.fallback_class, decisions, low_confidence=True)
    best = model.class_order[0]
    for code in model.class_order[1:]:
        if decisions[code] > decisions[best]:
            best = code
    return Prediction(best, decisions, low_confidence=False)


# --- persistence -------------------------------------------------------------


def _model_to_dict(model: MulticlassModel) -> dict[str, Any]:
    classes = []
    for code in model.class_order:
        linear = model.models[code]
        weights = linear.weights
        nonzero = np.nonzero(weights[:-1])[0]
        classes.append(
            {
                "code": code,
                "weights": [[int(i), float(weights[i])] for i in nonzero],
                "bias": linear.bias,
                "iterations": linear.train_meta.get("iterations"),
                "final_violation": linear.train_meta.get("final_violation"),
            }
        )
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "taxonomy": [
            {"code": c.code, "description": c.description}
            for c in model.taxonomy.classes
        ],
        "stopword_list_hash": model.stopword_list_hash,
        "tfidf": {
            "tokens": model.tfidf.vocabulary.tokens(),
            "df": [int(d) for d in model.tfidf.vocabulary.df],
            "n_docs": model.tfidf.vocabulary.n_docs,
        },
        "classes": classes,
        "fallback_class": model.fallback_class,
        "train_meta": {
            "C": model.params.C,
            "tol": model.params.tol,
            "max_iter": model.params.max_iter,
            "seed": model.params.seed,
            "min_df": model.params.min_df,
            "balanced": model.params.balanced,
            "include_versions": model.params.include_versions,
        },
    }


def save_model(model: MulticlassModel, path: str | Path) -> None:
    """Versioned JSON; floats keep full round-trip precision."""
    payload = json.dumps(_model_to_dict(model), sort_keys=True, indent=1)
    Path(path).write_text(payload + "\n", encoding="utf-8")


def load_model(path: str | Path) -> MulticlassModel:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedModel(f"cannot read model file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedModel("model file is not a JSON object")
    version = data.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelVersionMismatch(
            f"model format {version!r}, supported {MODEL_FORMAT_VERSION}"
        )
    try:
        tokens = data["tfidf"]["tokens"]
        df = np.array(data["tfidf"]["df"], dtype=np.int64)
        n_docs = int(data["tfidf"]["n_docs"])
        vocabulary = Vocabulary(
            index={t: i for i, t in enumerate(tokens)}, df=df, n_docs=n_docs
        )
        idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
        tfidf = TfIdfModel(vocabulary=vocabulary, idf=idf)

        models: dict[str, LinearModel] = {}
        for entry in data["classes"]:
            weights = np.zeros(len(tokens) + 1, dtype=np.float64)
            for i, value in entry["weights"]:
                weights[int(i)] = float(value)
            weights[-1] = float(entry["bias"])
            models[entry["code"]] = LinearModel(
                weights=weights,
                target_class=entry["code"],
                train_meta={
                    "iterations": entry.get("iterations"),
                    "final_violation": entry.get("final_violation"),
                },
            )
        meta = data["train_meta"]
        params = TrainParams(
            C=float(meta["C"]),
            tol=float(meta["tol"]),
            max_iter=int(meta["max_iter"]),
            seed=int(meta["seed"]),
            min_df=int(meta["min_df"]),
            balanced=bool(meta["balanced"]),
            include_versions=bool(meta["include_versions"]),
        )
        taxonomy = Taxonomy(
            tuple(
                ClassLabel(entry["code"], entry.get("description", ""))
                for entry in data["taxonomy"]
            )
        )
        return MulticlassModel(
            tfidf=tfidf,
            models=models,
            class_order=tuple(sorted(models)),
            fallback_class=data["fallback_class"],
            taxonomy=taxonomy,
            stopword_list_hash=data["stopword_list_hash"],
            params=params,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedModel(f"model file {path} is structurally broken: {exc}") from exc
