"""Acceptance gate: one test per criterion, one printed line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""
from __future__ import annotations


import random
import time
from fractions import Fraction

import numpy as np
import pytest


from cpe_gen import random_name
from iotcve.corpus import Taxonomy, is_hardware
from iotcve.cpe import (
    Logical,
    Part,
    format_cpe_formatted,
    format_cpe_uri,
    parse_cpe_formatted,
    parse_cpe_uri,
)
from iotcve.errors import MalformedCpe
from iotcve.evaluate import ConfusionMatrix, class_metrics
from iotcve.experiment import ExperimentSpec, run_experiment, run_sweep
from iotcve.nvd import read_feed, write_store
from iotcve.svm import TrainParams, primal_objective, train_binary
from iotcve.features import SparseVector
from svm_oracle import primal_optimum
from synthcorpus import build_synthetic_corpus, labels_csv

ANY = Logical.ANY
NA = Logical.NA


def _announce(number: int, name: str):
    class _Context:
        def __enter__(self):
            self.start = time.perf_counter()
            return self

        def __exit__(self, exc_type, exc, tb):
            elapsed = time.perf_counter() - self.start
            verdict = "PASS" if exc_type is None else "FAIL"
            print(f"ACCEPTANCE {number} {name}: {verdict} ({elapsed:.2f}s)")
            return False

    return _Context()


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    records, labels = build_synthetic_corpus(seed=7)
    store = root / "store.ndjson"
    write_store(records, store)
    labels_path = root / "labels.csv"
    labels_path.write_text(labels_csv(labels), encoding="utf-8")
    return {"root": root, "store": store, "labels": labels_path,
            "records": records, "label_map": labels}


# fixture CPE strings with their expected (part, vendor, product, version)
URI_FIXTURES = [
    ("cpe:/h:moxa:edr-g903:-", Part.HARDWARE, "moxa", "edr-g903", NA),
    ("cpe:/a:lenovo:power_management:1.67.12.19", Part.APPLICATION, "lenovo",
     "power_management", "1.67.12.19"),
    ("cpe:/a:lenovo:power_management:1.67.12.23", Part.APPLICATION, "lenovo",
     "power_management", "1.67.12.23"),
    ("cpe:/o:d-link:dgs-1100_firmware:1.01.018", Part.OPERATING_SYSTEM, "d-link",
     "dgs-1100_firmware", "1.01.018"),
    ("cpe:/h:d-link:dgs-1100-05:-", Part.HARDWARE, "d-link", "dgs-1100-05", NA),
    ("cpe:/h:d-link:dgs-1100-05pd:-", Part.HARDWARE, "d-link", "dgs-1100-05pd", NA),
    ("cpe:/h:d-link:dgs-1100-08:-", Part.HARDWARE, "d-link", "dgs-1100-08", NA),
    ("cpe:/h:d-link:dgs-1100-08p:-", Part.HARDWARE, "d-link", "dgs-1100-08p", NA),
    ("cpe:/h:d-link:dgs-1100-10mp:-", Part.HARDWARE, "d-link", "dgs-1100-10mp", NA),
    ("cpe:/h:d-link:dap-1320:-", Part.HARDWARE, "d-link", "dap-1320", NA),
]


def test_criterion_1_cpe_fixtures_and_round_trip():
    with _announce(1, "cpe-fixtures-and-round-trip") as ctx:
        for uri, part, vendor, product, version in URI_FIXTURES:
            name = parse_cpe_uri(uri)
            assert name.part is part
            assert name.vendor == vendor
            assert name.product == product
            assert name.version == version
            assert name.update is ANY and name.edition is ANY

        fs = parse_cpe_formatted("cpe:2.3:h:d-link:dap-1320:-:*:*:*:*:*:*:*")
        assert fs == parse_cpe_uri("cpe:/h:d-link:dap-1320:-")

        with pytest.raises(MalformedCpe):
            parse_cpe_uri("cpe:/x:v:p")

        rng = random.Random(20130926)
        for _ in range(1000):
            name = random_name(rng, "uri")
            assert parse_cpe_uri(format_cpe_uri(name)) == name
        rng = random.Random(20240229)
        for _ in range(1000):
            name = random_name(rng, "formatted")
            assert parse_cpe_formatted(format_cpe_formatted(name)) == name

        assert time.perf_counter() - ctx.start < 1.0


def test_criterion_2_hardware_selection_rule(feed_xml_path):
    with _announce(2, "hardware-selection-rule"):
        records, _ = read_feed(feed_xml_path)
        assert len(records) == 2
        flags = {rec.cve_id: is_hardware(rec) for rec in records}
        assert flags == {"CVE-2017-3741": False, "CVE-2019-90001": True}


def test_criterion_3_metric_exactness():
    with _announce(3, "metric-exactness"):
        rng = random.Random(42)
        for _ in range(30):
            raw = [[rng.randint(0, 60) for _ in range(3)] for _ in range(3)]
            matrix = ConfusionMatrix(
                class_order=("E", "H", "S"), counts=np.array(raw, dtype=np.int64)
            )
            for i, code in enumerate(matrix.class_order):
                tp = raw[i][i]
                fp = sum(raw[r][i] for r in range(3)) - tp
                fn = sum(raw[i]) - tp
                precision = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
                recall = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
                f1 = (
                    2 * precision * recall / (precision + recall)
                    if precision + recall
                    else Fraction(0)
                )
                metrics = class_metrics(matrix, code)
                assert abs(metrics.precision - float(precision)) < 1e-12
                assert abs(metrics.recall - float(recall)) < 1e-12
                assert abs(metrics.f1 - float(f1)) < 1e-12

        # anchor: TP=489, FN=86 reproduces the 85% recall to two decimals
        counts = np.array([[489, 50, 36], [3, 40, 1], [2, 2, 70]], dtype=np.int64)
        matrix = ConfusionMatrix(class_order=("H", "E", "S"), counts=counts)
        recall = class_metrics(matrix, "H").recall
        assert abs(recall - 489 / 575) < 1e-15
        assert round(recall, 4) == 0.8504
        assert round(recall, 2) == 0.85


def test_criterion_4_svm_oracle_equivalence():
    with _announce(4, "svm-oracle-equivalence") as ctx:
        # oracle first: it must reproduce the analytic two-point solution
        points = np.array([[1.0], [-1.0]])
        labels = np.array([1.0, -1.0])
        u, value = primal_optimum(points, labels, np.full(2, 10.0))
        assert abs(value - 0.5) < 1e-6
        assert abs(u[0] - 1.0) < 1e-4 and abs(u[1]) < 1e-4

        rng = np.random.default_rng(1138)
        checked = 0
        while checked < 20:
            n = int(rng.integers(2, 9))
            d = int(rng.integers(1, 5))
            xs = rng.normal(size=(n, d))
            ys = np.where(rng.random(n) < 0.5, 1.0, -1.0)
            if not (np.any(ys > 0) and np.any(ys < 0)):
                continue
            C = float(rng.choice([0.1, 1.0, 10.0]))
            checked += 1
            vectors = [
                SparseVector(np.arange(d, dtype=np.int64), row.astype(np.float64))
                for row in xs
            ]
            from iotcve.svm import BinaryProblem

            problem = BinaryProblem(vectors=vectors, labels=ys, C=C, n_features=d)
            model = train_binary(problem, tol=1e-9, max_iter=20000, seed=checked)
            attained = primal_objective(model, problem)
            _, oracle_value = primal_optimum(xs, ys, np.full(n, C))
            rel = abs(attained - oracle_value) / max(oracle_value, 1e-12)
            assert rel <= 1e-3, (checked, attained, oracle_value)

        assert time.perf_counter() - ctx.start < 30.0


def test_criterion_5_synthetic_end_to_end(workspace):
    with _announce(5, "synthetic-end-to-end") as ctx:
        spec = ExperimentSpec(
            train_start=2014, train_end=2017, test_year=2018,
            params=TrainParams(seed=42),
        )
        result = run_experiment(
            workspace["records"], workspace["label_map"], Taxonomy.default(), spec
        )
        assert len(result.train_ids) == 960
        assert len(result.test_ids) == 240
        assert result.report.weighted_f1 >= 0.95
        assert time.perf_counter() - ctx.start < 60.0


def test_criterion_6_temporal_protocol_fidelity(workspace):
    with _announce(6, "temporal-protocol-fidelity"):
        specs = [
            ExperimentSpec(start, end, 2018, params=TrainParams(seed=42))
            for start, end in [(2014, 2017), (2015, 2017), (2016, 2017), (2017, 2017)]
        ]
        taxonomy = Taxonomy.default()
        standalone = [
            run_experiment(workspace["records"], workspace["label_map"], taxonomy, s)
            for s in specs
        ]
        for result in standalone:
            assert result.train_ids.isdisjoint(result.test_ids)
        rows = run_sweep(workspace["records"], workspace["label_map"], taxonomy, specs)
        assert len(rows) == 4
        for row, result in zip(rows, standalone):
            assert row.error is None
            assert row.weighted_f1 == result.report.weighted_f1
            assert row.accuracy == result.report.accuracy
            assert row.train_size == len(result.train_ids)
            assert row.test_size == len(result.test_ids)


def test_criterion_7_determinism(workspace, capsys):
    with _announce(7, "byte-identical-reruns"):
        from iotcve.cli import main

        args = [
            "experiment", "--store", str(workspace["store"]),
            "--labels", str(workspace["labels"]),
            "--train-start", "2016", "--train-end", "2017", "--test-year", "2018",
            "--seed", "42",
        ]
        run1 = workspace["root"] / "determinism1"
        run2 = workspace["root"] / "determinism2"
        assert main(args + ["--out-dir", str(run1)]) == 0
        assert main(args + ["--out-dir", str(run2)]) == 0
        capsys.readouterr()
        assert (run1 / "model.json").read_bytes() == (run2 / "model.json").read_bytes()
        assert (run1 / "report.json").read_bytes() == (run2 / "report.json").read_bytes()


def test_criterion_8_lenient_ingestion(malformed_xml_path):
    with _announce(8, "lenient-ingestion"):
        records, stats = read_feed(malformed_xml_path)
        assert stats.records_ok == 2
        assert stats.records_skipped == 1
        assert sum(stats.skip_reasons.values()) >= 1
        assert stats.skip_reasons["no-id"] == 1
        assert stats.records_ok + stats.records_skipped == 3
        assert [r.cve_id for r in records] == ["CVE-2018-70001", "CVE-2018-70003"]
