"""Hardware-record selection, analyst labels, and labeled datasets.

The device taxonomy is configuration data rather than a hard-coded
enum: the default ships six classes (H, S, E, M, P, A) and extra codes
can be added per run, so experiments that need an extension class stay
possible without code changes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .cpe import Logical, Part, collect_cpes
from .errors import BadRange, DuplicateCveId, MalformedRow, UnknownClassCode
from .nvd import VulnerabilityRecord, record_year
from .textprep import TokenStream, preprocess_fields

__all__ = [
    "ClassLabel",
    "Taxonomy",
    "TextFields",
    "LabeledExample",
    "LabeledDataset",
    "is_hardware",
    "select_hardware",
    "filter_years",
    "load_labels",
    "build_dataset",
    "count_by_year_and_class",
    "extract_text_fields",
    "write_dataset",
    "read_dataset",
]

_DEFAULT_CLASSES = (
    ("H", "Home and small-office devices: routers, cameras, consumer gear"),
    ("S", "Industrial, SCADA and automation systems, vehicles, medical devices"),
    ("E", "Enterprise and service-provider networking"),
    ("M", "Mobile phones, tablets, watches and other portables"),
    ("P", "PCs, laptops and servers"),
    ("A", "Other appliances: printing, storage, recording"),
)


@dataclass(frozen=True)
class ClassLabel:
    code: str
    description: str = ""


@dataclass(frozen=True)
class Taxonomy:
    classes: tuple[ClassLabel, ...]

    def __post_init__(self) -> None:
        codes = [c.code for c in self.classes]
        if len(set(codes)) != len(codes):
            raise ValueError(f"duplicate class codes: {codes}")

    @classmethod
    def default(cls) -> "Taxonomy":
        return cls(tuple(ClassLabel(c, d) for c, d in _DEFAULT_CLASSES))

    @classmethod
    def from_codes(cls, codes: Iterable[str]) -> "Taxonomy":
        return cls(tuple(ClassLabel(c) for c in codes))

    def with_extra(self, code: str, description: str = "") -> "Taxonomy":
        return Taxonomy(self.classes + (ClassLabel(code, description),))

    def codes(self) -> tuple[str, ...]:
        return tuple(c.code for c in self.classes)

    def __contains__(self, code: str) -> bool:
        return any(c.code == code for c in self.classes)


@dataclass(frozen=True)
class TextFields:
    """The text a classifier sees for one record."""

    vendors: tuple[str, ...]
    products: tuple[str, ...]
    versions: tuple[str, ...]
    summary: str
    cwe_id: str | None


def extract_text_fields(rec: VulnerabilityRecord) -> TextFields:
    """Pull vendor/product/version strings from every CPE on the record."""
    names = list(rec.software_list)
    if rec.config is not None:
        names = collect_cpes(rec.config) + names
    vendors: list[str] = []
    products: list[str] = []
    versions: list[str] = []
    for name in names:
        if not isinstance(name.vendor, Logical):
            vendors.append(name.vendor)
        if not isinstance(name.product, Logical):
            products.append(name.product)
        if not isinstance(name.version, Logical):
            versions.append(name.version)
    return TextFields(
        vendors=tuple(vendors),
        products=tuple(products),
        versions=tuple(versions),
        summary=rec.summary,
        cwe_id=rec.cwe_id,
    )


@dataclass(frozen=True)
class LabeledExample:
    cve_id: str
    label: str
    fields: TextFields
    year: int

    def token_stream(
        self,
        *,
        include_versions: bool = False,
        stopwords: frozenset[str] | None = None,
    ) -> TokenStream:
        return preprocess_fields(
            list(self.fields.vendors),
            list(self.fields.products),
            self.fields.summary,
            self.fields.cwe_id,
            list(self.fields.versions),
            include_versions=include_versions,
            stopwords=stopwords,
        )


@dataclass(frozen=True)
class LabeledDataset:
    examples: tuple[LabeledExample, ...]
    taxonomy: Taxonomy
    year_range: tuple[int, int] | None
    unlabeled: int = 0
    unmatched_labels: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.examples)

    def class_counts(self) -> dict[str, int]:
        counts = {code: 0 for code in self.taxonomy.codes()}
        for ex in self.examples:
            counts[ex.label] += 1
        return counts

    def present_classes(self) -> list[str]:
        return sorted({ex.label for ex in self.examples})


def is_hardware(rec: VulnerabilityRecord) -> bool:
    """True iff any CPE on the record names a hardware product."""
    return any(name.part is Part.HARDWARE for name in rec.cpes())


def select_hardware(
    records: Iterable[VulnerabilityRecord],
) -> list[VulnerabilityRecord]:
    return [rec for rec in records if is_hardware(rec)]


def filter_years(
    records: Iterable[VulnerabilityRecord], start_year: int, end_year: int
) -> list[VulnerabilityRecord]:
    """Records whose CVE-id year falls in [start_year, end_year], order kept."""
    if start_year > end_year:
        raise BadRange(f"year range inverted: {start_year}..{end_year}")
    return [rec for rec in records if start_year <= record_year(rec) <= end_year]


def load_labels(path: str | Path, taxonomy: Taxonomy) -> dict[str, str]:
    """Read a ``cve_id,class`` CSV into a map; reject unknown codes and dupes."""
    labels: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        lines = handle.read().split("\n")
    if not lines or lines[0].strip() != "cve_id,class":
        raise MalformedRow("line 1: expected header 'cve_id,class'")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise MalformedRow(f"line {lineno}: expected 'cve_id,class', got {line!r}")
        cve_id, code = parts[0].strip(), parts[1].strip()
        if code not in taxonomy:
            raise UnknownClassCode(f"line {lineno}: unknown class code {code!r}")
        if cve_id in labels:
            raise DuplicateCveId(f"line {lineno}: duplicate cve_id {cve_id!r}")
        labels[cve_id] = code
    return labels


def build_dataset(
    records: Sequence[VulnerabilityRecord],
    labels: dict[str, str],
    taxonomy: Taxonomy,
) -> LabeledDataset:
    """Pair selected records with their labels.

    Records without a label are counted, not dropped silently: they are
    the prediction targets in deployment. Labels pointing at CVE ids
    absent from ``records`` are reported via ``unmatched_labels``.
    """
    examples: list[LabeledExample] = []
    unlabeled = 0
    seen_ids: set[str] = set()
    for rec in records:
        seen_ids.add(rec.cve_id)
        code = labels.get(rec.cve_id)
        if code is None:
            unlabeled += 1
            continue
        if code not in taxonomy:
            raise UnknownClassCode(f"label {code!r} for {rec.cve_id} not in taxonomy")
        examples.append(
            LabeledExample(
                cve_id=rec.cve_id,
                label=code,
                fields=extract_text_fields(rec),
                year=record_year(rec),
            )
        )
    unmatched = tuple(sorted(set(labels) - seen_ids))
    years = [ex.year for ex in examples]
    year_range = (min(years), max(years)) if years else None
    return LabeledDataset(
        examples=tuple(examples),
        taxonomy=taxonomy,
        year_range=year_range,
        unlabeled=unlabeled,
        unmatched_labels=unmatched,
    )


def count_by_year_and_class(dataset: LabeledDataset) -> dict[int, dict[str, int]]:
    """Support counts per year, plus a ``total`` entry per row."""
    table: dict[int, dict[str, int]] = {}
    for ex in dataset.examples:
        row = table.setdefault(ex.year, {})
        row[ex.label] = row.get(ex.label, 0) + 1
    out: dict[int, dict[str, int]] = {}
    for year, row in sorted(table.items()):
        out[year] = dict(sorted(row.items()))
        out[year]["total"] = sum(row.values())
    return out


# --- dataset export ---------------------------------------------------------


def write_dataset(dataset: LabeledDataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for ex in dataset.examples:
            row = {
                "cve_id": ex.cve_id,
                "label": ex.label,
                "vendors": list(ex.fields.vendors),
                "products": list(ex.fields.products),
                "versions": list(ex.fields.versions),
                "summary": ex.fields.summary,
                "cwe_id": ex.fields.cwe_id,
                "year": ex.year,
            }
            handle.write(json.dumps(row, sort_keys=True))
            handle.write("\n")


def read_dataset(path: str | Path, taxonomy: Taxonomy) -> LabeledDataset:
    examples: list[LabeledExample] = []
    for line in Path(path).read_text(encoding="utf-8").split("\n"):
        if not line.strip():
            continue
        row = json.loads(line)
        if row["label"] not in taxonomy:
            raise UnknownClassCode(f"label {row['label']!r} not in taxonomy")
        examples.append(
            LabeledExample(
                cve_id=row["cve_id"],
                label=row["label"],
                fields=TextFields(
                    vendors=tuple(row.get("vendors", [])),
                    products=tuple(row.get("products", [])),
                    versions=tuple(row.get("versions", [])),
                    summary=row.get("summary", ""),
                    cwe_id=row.get("cwe_id"),
                ),
                year=row["year"],
            )
        )
    years = [ex.year for ex in examples]
    return LabeledDataset(
        examples=tuple(examples),
        taxonomy=taxonomy,
        year_range=(min(years), max(years)) if years else None,
    )
