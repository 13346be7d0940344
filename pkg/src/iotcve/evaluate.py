"""Confusion matrices, per-class precision/recall/F1, support-weighted F1.

Matrix orientation is fixed everywhere: rows are the true class,
columns the predicted class, and every rendering states it. Zero
denominators never surface as NaN; the metric is 0.0 and the division
is flagged so reports stay machine-consumable.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Taxonomy
from .errors import EmptyEvaluation, LengthMismatch, UnknownLabel, UnsupportedFormat

__all__ = [
    "ConfusionMatrix",
    "ClassMetrics",
    "EvalReport",
    "confusion",
    "class_metrics",
    "weighted_f1",
    "build_report",
    "render_report",
]

ORIENTATION = "rows=true,columns=predicted"


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    class_order: tuple[str, ...]
    counts: np.ndarray

    def index(self, code: str) -> int:
        try:
            return self.class_order.index(code)
        except ValueError:
            raise UnknownLabel(f"class {code!r} not in matrix") from None

    def support(self, code: str) -> int:
        return int(self.counts[self.index(code)].sum())

    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    undefined: frozenset[str] = frozenset()


@dataclass(frozen=True)
class EvalReport:
    matrix: ConfusionMatrix
    per_class: dict[str, ClassMetrics]
    weighted_f1: float
    accuracy: float
    excluded_classes: frozenset[str] = frozenset()


def confusion(
    truth: Sequence[str], predicted: Sequence[str], taxonomy: Taxonomy
) -> ConfusionMatrix:
    if len(truth) != len(predicted):
        raise LengthMismatch(f"{len(truth)} truth labels vs {len(predicted)} predictions")
    class_order = tuple(sorted(taxonomy.codes()))
    index = {code: i for i, code in enumerate(class_order)}
    counts = np.zeros((len(class_order), len(class_order)), dtype=np.int64)
    for t, p in zip(truth, predicted):
        if t not in index:
            raise UnknownLabel(f"true label {t!r} not in taxonomy")
        if p not in index:
            raise UnknownLabel(f"predicted label {p!r} not in taxonomy")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(class_order=class_order, counts=counts)


def class_metrics(matrix: ConfusionMatrix, code: str) -> ClassMetrics:
    """TP from the diagonal, FP down the column, FN along the row."""
    i = matrix.index(code)
    tp = int(matrix.counts[i, i])
    fp = int(matrix.counts[:, i].sum()) - tp
    fn = int(matrix.counts[i, :].sum()) - tp
    undefined: set[str] = set()
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        undefined.add("precision")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        undefined.add("recall")
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        undefined.add("f1")
    return ClassMetrics(
        precision=precision,
        recall=recall,
        f1=f1,
        support=tp + fn,
        undefined=frozenset(undefined),
    )


def weighted_f1(
    per_class: dict[str, ClassMetrics], excluded: frozenset[str] = frozenset()
) -> float:
    """Support-weighted mean of per-class F1 over non-excluded classes."""
    total = 0
    acc = 0.0
    for code, metrics in per_class.items():
        if code in excluded:
            continue
        total += metrics.support
        acc += metrics.support * metrics.f1
    if total == 0:
        raise EmptyEvaluation("no supported classes to weight")
    return acc / total


def build_report(
    matrix: ConfusionMatrix, excluded: frozenset[str] = frozenset()
) -> EvalReport:
    total = matrix.total()
    if total == 0:
        raise EmptyEvaluation("empty confusion matrix")
    per_class = {code: class_metrics(matrix, code) for code in matrix.class_order}
    accuracy = float(np.trace(matrix.counts)) / total
    return EvalReport(
        matrix=matrix,
        per_class=per_class,
        weighted_f1=weighted_f1(per_class, excluded),
        accuracy=accuracy,
        excluded_classes=excluded,
    )


# --- renderings --------------------------------------------------------------


def _metric_rows(report: EvalReport) -> list[tuple[str, ClassMetrics]]:
    return [
        (code, report.per_class[code])
        for code in report.matrix.class_order
        if code not in report.excluded_classes
    ]


def _render_json(report: EvalReport) -> bytes:
    payload = {
        "format_version": 1,
        "orientation": ORIENTATION,
        "class_order": list(report.matrix.class_order),
        "matrix": report.matrix.counts.tolist(),
        "per_class": {
            code: {
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "support": m.support,
                "undefined": sorted(m.undefined),
            }
            for code, m in _metric_rows(report)
        },
        "excluded_classes": sorted(report.excluded_classes),
        "weighted_f1": report.weighted_f1,
        "accuracy": report.accuracy,
    }
    return (json.dumps(payload, sort_keys=True, indent=1) + "\n").encode("utf-8")


def _render_csv(report: EvalReport) -> bytes:
    lines = ["class,precision,recall,f1,support"]
    for code, m in _metric_rows(report):
        lines.append(f"{code},{m.precision!r},{m.recall!r},{m.f1!r},{m.support}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _render_text(report: EvalReport) -> bytes:
    codes = report.matrix.class_order
    width = max(5, max(len(c) for c in codes) + 1, len(str(report.matrix.counts.max())) + 1)
    lines = [f"confusion matrix ({ORIENTATION})"]
    header = " " * width + "".join(f"{c:>{width}}" for c in codes)
    lines.append(header)
    for i, code in enumerate(codes):
        row = "".join(f"{int(n):>{width}}" for n in report.matrix.counts[i])
        lines.append(f"{code:>{width}}{row}")
    lines.append("")
    for code, m in _metric_rows(report):
        lines.append(
            f"{code}: precision={m.precision:.4f} recall={m.recall:.4f} "
            f"f1={m.f1:.4f} support={m.support}"
        )
    if report.excluded_classes:
        lines.append(f"excluded from metrics: {','.join(sorted(report.excluded_classes))}")
    lines.append(f"weighted_f1={report.weighted_f1:.4f} accuracy={report.accuracy:.4f}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def render_report(report: EvalReport, format: str) -> bytes:
    """Deterministic bytes; same report twice gives identical output."""
    if format == "json":
        return _render_json(report)
    if format == "csv":
        return _render_csv(report)
    if format == "text":
        return _render_text(report)
    raise UnsupportedFormat(f"unknown report format {format!r}")
