"""Temporal experiments: train on past years, classify a later year.

A spec names a training range and a test year (optionally a quarter of
it). Records are bucketed by CVE-id year; quarter filtering uses the
published date, since ids carry no sub-year information. Test records
never influence the vocabulary, idf weights, or hyperplanes, and the
harness asserts that train and test id sets stay disjoint.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import (
    LabeledDataset,
    Taxonomy,
    build_dataset,
    filter_years,
    select_hardware,
)
from .errors import (
    BadRange,
    EmptyTestSet,
    EmptyTrainSet,
    InternalError,
)
from .evaluate import EvalReport, build_report, confusion
from .nvd import VulnerabilityRecord, published_quarter
from .svm import MulticlassModel, Prediction, TrainParams, predict, train_ovr

__all__ = ["ExperimentSpec", "ExperimentResult", "run_experiment", "run_sweep"]

EXCLUDE_AT_REPORT = "report"
EXCLUDE_AT_DATA = "data"


@dataclass(frozen=True)
class ExperimentSpec:
    train_start: int
    train_end: int
    test_year: int
    test_quarter: int | None = None
    params: TrainParams = TrainParams()
    excluded_classes: frozenset[str] = frozenset()
    exclusion_stage: str = EXCLUDE_AT_REPORT

    def __post_init__(self) -> None:
        if self.train_start > self.train_end:
            raise BadRange(f"train range inverted: {self.train_start}..{self.train_end}")
        if self.train_end >= self.test_year:
            raise BadRange(
                f"test year {self.test_year} must follow train range "
                f"{self.train_start}..{self.train_end}"
            )
        if self.test_quarter is not None and not 1 <= self.test_quarter <= 4:
            raise BadRange(f"quarter must be 1..4, got {self.test_quarter}")
        if self.exclusion_stage not in (EXCLUDE_AT_REPORT, EXCLUDE_AT_DATA):
            raise BadRange(f"unknown exclusion stage {self.exclusion_stage!r}")

    def key(self) -> str:
        quarter = f"Q{self.test_quarter}" if self.test_quarter else ""
        return f"{self.train_start}-{self.train_end}->{self.test_year}{quarter}"


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    model: MulticlassModel
    report: EvalReport
    train_ids: frozenset[str]
    test_ids: frozenset[str]
    predictions: tuple[tuple[str, Prediction], ...]
    unlabeled_train: int
    unlabeled_test: int


def _drop_excluded(dataset: LabeledDataset, excluded: frozenset[str]) -> LabeledDataset:
    kept = tuple(ex for ex in dataset.examples if ex.label not in excluded)
    taxonomy = Taxonomy(
        tuple(c for c in dataset.taxonomy.classes if c.code not in excluded)
    )
    years = [ex.year for ex in kept]
    return LabeledDataset(
        examples=kept,
        taxonomy=taxonomy,
        year_range=(min(years), max(years)) if years else None,
        unlabeled=dataset.unlabeled,
        unmatched_labels=dataset.unmatched_labels,
    )


def run_experiment(
    records: Sequence[VulnerabilityRecord],
    labels: dict[str, str],
    taxonomy: Taxonomy,
    spec: ExperimentSpec,
    stopwords: frozenset[str] | None = None,
) -> ExperimentResult:
    hardware = select_hardware(records)
    train_records = filter_years(hardware, spec.train_start, spec.train_end)
    test_records = filter_years(hardware, spec.test_year, spec.test_year)
    if spec.test_quarter is not None:
        test_records = [
            rec for rec in test_records if published_quarter(rec) == spec.test_quarter
        ]

    train_ds = build_dataset(train_records, labels, taxonomy)
    test_ds = build_dataset(test_records, labels, taxonomy)
    if spec.exclusion_stage == EXCLUDE_AT_DATA and spec.excluded_classes:
        train_ds = _drop_excluded(train_ds, spec.excluded_classes)
        test_ds = _drop_excluded(test_ds, spec.excluded_classes)

    if not train_ds.examples:
        raise EmptyTrainSet(f"no labeled training records in {spec.key()}")
    if not test_ds.examples:
        raise EmptyTestSet(f"no labeled test records in {spec.key()}")

    train_ids = frozenset(ex.cve_id for ex in train_ds.examples)
    test_ids = frozenset(ex.cve_id for ex in test_ds.examples)
    if train_ids & test_ids:
        raise InternalError(f"train/test overlap: {sorted(train_ids & test_ids)[:5]}")

    model = train_ovr(train_ds, spec.params, stopwords=stopwords)

    predictions = tuple(
        (ex.cve_id, predict(model, ex.fields, stopwords=stopwords))
        for ex in test_ds.examples
    )
    truth = [ex.label for ex in test_ds.examples]
    predicted = [pred.label for _, pred in predictions]
    # predictions always land in class_order, a subset of the taxonomy
    matrix = confusion(truth, predicted, test_ds.taxonomy)
    excluded = (
        spec.excluded_classes
        if spec.exclusion_stage == EXCLUDE_AT_REPORT
        else frozenset()
    )
    report = build_report(matrix, excluded=excluded)
    return ExperimentResult(
        spec=spec,
        model=model,
        report=report,
        train_ids=train_ids,
        test_ids=test_ids,
        predictions=predictions,
        unlabeled_train=train_ds.unlabeled,
        unlabeled_test=test_ds.unlabeled,
    )


@dataclass(frozen=True)
class SweepRow:
    spec: ExperimentSpec
    weighted_f1: float | None = None
    accuracy: float | None = None
    train_size: int | None = None
    test_size: int | None = None
    error: str | None = None
    result: ExperimentResult | None = field(default=None, repr=False)


def run_sweep(
    records: Sequence[VulnerabilityRecord],
    labels: dict[str, str],
    taxonomy: Taxonomy,
    specs: Iterable[ExperimentSpec],
    stopwords: frozenset[str] | None = None,
) -> list[SweepRow]:
    """One experiment per spec; failures become rows, not aborts."""
    rows: list[SweepRow] = []
    for spec in specs:
        try:
            result = run_experiment(records, labels, taxonomy, spec, stopwords)
        except Exception as exc:  # isolate per-spec failures
            rows.append(SweepRow(spec=spec, error=f"{type(exc).__name__}: {exc}"))
            continue
        rows.append(
            SweepRow(
                spec=spec,
                weighted_f1=result.report.weighted_f1,
                accuracy=result.report.accuracy,
                train_size=len(result.train_ids),
                test_size=len(result.test_ids),
                result=result,
            )
        )
    return rows


def sweep_csv(rows: list[SweepRow]) -> str:
    lines = ["train_start,train_end,test_year,test_quarter,weighted_f1,accuracy,train_size,test_size,error"]
    for row in rows:
        spec = row.spec
        quarter = spec.test_quarter if spec.test_quarter is not None else ""
        if row.error is None:
            lines.append(
                f"{spec.train_start},{spec.train_end},{spec.test_year},{quarter},"
                f"{row.weighted_f1!r},{row.accuracy!r},{row.train_size},{row.test_size},"
            )
        else:
            error = row.error.replace(",", ";")
            lines.append(
                f"{spec.train_start},{spec.train_end},{spec.test_year},{quarter},,,,,{error}"
            )
    return "\n".join(lines) + "\n"
