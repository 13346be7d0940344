from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest

from iotcve.corpus import Taxonomy
from iotcve.errors import (
    EmptyEvaluation,
    LengthMismatch,
    UnknownLabel,
    UnsupportedFormat,
)
from iotcve.evaluate import (
    ConfusionMatrix,
    build_report,
    class_metrics,
    confusion,
    render_report,
    weighted_f1,
)

TAX3 = Taxonomy.from_codes(["E", "H", "S"])


def _fraction_metrics(counts, i):
    """Independent rational-arithmetic computation of the three metrics."""
    k = len(counts)
    tp = counts[i][i]
    fp = sum(counts[r][i] for r in range(k)) - tp
    fn = sum(counts[i][c] for c in range(k)) - tp
    precision = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
    recall = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall
        else Fraction(0)
    )
    return precision, recall, f1


class TestConfusion:
    def test_counts_by_cell(self):
        matrix = confusion(["H", "H"], ["H", "E"], TAX3)
        h = matrix.index("H")
        e = matrix.index("E")
        assert matrix.counts[h, h] == 1
        assert matrix.counts[h, e] == 1
        assert matrix.total() == 2

    def test_perfect_prediction_is_diagonal(self):
        labels = ["E", "H", "S", "H"]
        matrix = confusion(labels, labels, TAX3)
        assert np.all(matrix.counts == np.diag(np.diag(matrix.counts)))
        assert np.trace(matrix.counts) == 4

    def test_off_diagonal_mass(self):
        # of the H-true records, 109 land in E and 108 in S
        truth = ["H"] * (489 + 109 + 108)
        predicted = ["H"] * 489 + ["E"] * 109 + ["S"] * 108
        matrix = confusion(truth, predicted, TAX3)
        h, e, s = matrix.index("H"), matrix.index("E"), matrix.index("S")
        assert matrix.counts[h, e] == 109
        assert matrix.counts[h, s] == 108
        assert matrix.support("H") == 706

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            confusion(["H"], ["H", "E"], TAX3)

    def test_unknown_label(self):
        with pytest.raises(UnknownLabel):
            confusion(["Z"], ["H"], TAX3)
        with pytest.raises(UnknownLabel):
            confusion(["H"], ["Z"], TAX3)

    def test_rows_true_columns_predicted(self):
        matrix = confusion(["H"], ["E"], TAX3)
        assert matrix.counts[matrix.index("H"), matrix.index("E")] == 1
        assert matrix.counts[matrix.index("E"), matrix.index("H")] == 0

    def test_permutation_invariance(self):
        rng = random.Random(3)
        pairs = [(rng.choice("EHS"), rng.choice("EHS")) for _ in range(60)]
        shuffled = pairs[:]
        rng.shuffle(shuffled)
        m1 = confusion(*zip(*pairs), TAX3)
        m2 = confusion(*zip(*shuffled), TAX3)
        assert np.array_equal(m1.counts, m2.counts)


class TestClassMetrics:
    def test_recall_anchor(self):
        # TP=489, FN=86 -> recall 489/575, i.e. 85% to two decimals
        counts = np.array([[489, 50, 36], [10, 100, 0], [5, 0, 110]])
        matrix = ConfusionMatrix(class_order=("H", "E", "S"), counts=counts)
        metrics = class_metrics(matrix, "H")
        assert metrics.recall == pytest.approx(489 / 575, abs=0)
        assert round(metrics.recall, 2) == 0.85
        assert round(metrics.recall, 4) == 0.8504
        assert metrics.support == 575

    def test_zero_denominators_flagged(self):
        counts = np.zeros((3, 3), dtype=np.int64)
        counts[1, 1] = 5
        matrix = ConfusionMatrix(class_order=("E", "H", "S"), counts=counts)
        metrics = class_metrics(matrix, "E")
        assert metrics.precision == 0.0 and metrics.recall == 0.0 and metrics.f1 == 0.0
        assert metrics.undefined == frozenset({"precision", "recall", "f1"})

    def test_equal_precision_recall_gives_same_f1(self):
        # p = r = 0.62 -> F1 = 0.62 exactly
        counts = np.array([[62, 38, 0], [38, 24, 0], [0, 0, 1]])
        matrix = ConfusionMatrix(class_order=("E", "H", "S"), counts=counts)
        metrics = class_metrics(matrix, "E")
        assert metrics.precision == pytest.approx(0.62, abs=0)
        assert metrics.recall == pytest.approx(0.62, abs=0)
        assert metrics.f1 == pytest.approx(0.62, abs=1e-15)

    def test_exactness_against_rational_arithmetic(self):
        rng = random.Random(17)
        for _ in range(25):
            counts = [[rng.randint(0, 40) for _ in range(3)] for _ in range(3)]
            matrix = ConfusionMatrix(
                class_order=("E", "H", "S"), counts=np.array(counts, dtype=np.int64)
            )
            for i, code in enumerate(matrix.class_order):
                metrics = class_metrics(matrix, code)
                p, r, f1 = _fraction_metrics(counts, i)
                assert abs(metrics.precision - float(p)) < 1e-12
                assert abs(metrics.recall - float(r)) < 1e-12
                assert abs(metrics.f1 - float(f1)) < 1e-12


class TestWeightedF1:
    def test_single_class(self):
        matrix = confusion(["H", "H"], ["H", "H"], Taxonomy.from_codes(["H"]))
        report = build_report(matrix)
        assert report.weighted_f1 == 1.0

    def test_weighted_mean_arithmetic(self):
        # supports 1 and 3 with F1 values 1.0 and 0.5 -> 0.625
        per_class = {
            "A": class_metrics(
                ConfusionMatrix(("A", "B"), np.array([[1, 0], [0, 3]])), "A"
            ),
        }
        truth = ["A"] + ["B"] * 3
        predicted = ["A", "B", "B", "A"]
        # B: tp=2, fn=1, fp=1 -> p=r=2/3 -> f1=2/3... craft explicit instead:
        matrix = ConfusionMatrix(
            class_order=("A", "B"),
            counts=np.array([[1, 0], [2, 2]], dtype=np.int64),
        )
        metrics = {c: class_metrics(matrix, c) for c in matrix.class_order}
        # A: tp=1, fp=2, fn=0 -> p=1/3, r=1 -> f1=0.5 ; B: tp=2, fp=0, fn=2 -> f1=2/3
        assert metrics["A"].f1 == pytest.approx(0.5)
        got = weighted_f1(metrics)
        expected = (1 * 0.5 + 4 * (2 / 3)) / 5
        assert got == pytest.approx(expected, abs=1e-15)

    def test_bounded_by_extremes(self):
        matrix = ConfusionMatrix(
            class_order=("A", "B", "C"),
            counts=np.array([[5, 1, 0], [2, 7, 1], [0, 3, 9]], dtype=np.int64),
        )
        report = build_report(matrix)
        f1s = [m.f1 for m in report.per_class.values()]
        assert min(f1s) <= report.weighted_f1 <= max(f1s)

    def test_empty_rejected(self):
        with pytest.raises(EmptyEvaluation):
            weighted_f1({})
        with pytest.raises(EmptyEvaluation):
            build_report(
                ConfusionMatrix(("A",), np.zeros((1, 1), dtype=np.int64))
            )

    def test_micro_identity(self):
        rng = random.Random(4)
        truth = [rng.choice("EHS") for _ in range(80)]
        predicted = [rng.choice("EHS") for _ in range(80)]
        report = build_report(confusion(truth, predicted, TAX3))
        correct = sum(t == p for t, p in zip(truth, predicted))
        assert report.accuracy == pytest.approx(correct / 80, abs=0)


class TestRendering:
    def _report(self, excluded=frozenset()):
        truth = ["H", "H", "E", "S", "A", "A"]
        predicted = ["H", "H", "E", "S", "H", "E"]
        tax = Taxonomy.from_codes(["A", "E", "H", "S"])
        return build_report(confusion(truth, predicted, tax), excluded=excluded)

    def test_csv_header(self):
        data = render_report(self._report(), "csv").decode()
        assert data.splitlines()[0] == "class,precision,recall,f1,support"

    def test_deterministic_bytes(self):
        report = self._report()
        for fmt in ("csv", "json", "text"):
            assert render_report(report, fmt) == render_report(report, fmt)

    def test_excluded_class_absent_from_metrics_present_in_matrix(self):
        report = self._report(excluded=frozenset({"A"}))
        csv_data = render_report(report, "csv").decode()
        assert not any(line.startswith("A,") for line in csv_data.splitlines()[1:])
        import json as json_lib

        payload = json_lib.loads(render_report(report, "json"))
        assert "A" not in payload["per_class"]
        assert "A" in payload["class_order"]
        assert payload["excluded_classes"] == ["A"]

    def test_orientation_stated(self):
        text = render_report(self._report(), "text").decode()
        assert "rows=true,columns=predicted" in text
        import json as json_lib

        payload = json_lib.loads(render_report(self._report(), "json"))
        assert payload["orientation"] == "rows=true,columns=predicted"

    def test_unsupported_format(self):
        with pytest.raises(UnsupportedFormat):
            render_report(self._report(), "yaml")

    def test_exclusion_changes_weighted_f1(self):
        full = self._report()
        without_a = self._report(excluded=frozenset({"A"}))
        assert full.weighted_f1 != without_a.weighted_f1
