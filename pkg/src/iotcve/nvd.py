"""Feed ingestion: NVD XML and JSON feeds into normalized records.

The feeds are decades old and internally inconsistent, so parsing is
lenient by design: a malformed entry is skipped and counted, never
aborting the rest of the file. Only document-level failures (a file
that is not XML/JSON at all) raise.

Both feed formats normalize onto the same ``VulnerabilityRecord``;
equivalent entries produce equal records regardless of source format.
In JSON feeds, which carry no explicit vulnerable-software list, the
configuration entries flagged ``vulnerable`` play that role.
"""
from __future__ import annotations

import gzip
import io
import json
import re
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import IO, Any, Iterable, Iterator

from .cpe import (
    CpeName,
    ConfigExpr,
    Leaf,
    Operator,
    LogicalTest,
    collect_cpes,
    format_cpe_formatted,
    parse_cpe_any,
)
from .errors import FeedUnreadable, MalformedCpe

__all__ = [
    "Reference",
    "Impact",
    "VulnerabilityRecord",
    "IngestStats",
    "parse_feed_xml",
    "parse_feed_json",
    "read_feed",
    "record_year",
    "published_quarter",
    "record_to_dict",
    "dict_to_record",
    "write_store",
    "read_store",
]

CVE_ID_RE = re.compile(r"^CVE-\d{4}-\d{4,}$")
_CWE_RE = re.compile(r"CWE-\d+")
_IMPACT_VALUES = frozenset({"NONE", "PARTIAL", "COMPLETE"})

SKIP_NO_ID = "no-id"
SKIP_EMPTY = "empty-entry"
SKIP_BAD_CPE = "bad-cpe"


@dataclass(frozen=True)
class Reference:
    source: str | None
    url: str | None


@dataclass(frozen=True)
class Impact:
    confidentiality: str | None = None
    integrity: str | None = None
    availability: str | None = None


@dataclass(frozen=True)
class VulnerabilityRecord:
    """One normalized vulnerability entry."""

    cve_id: str
    published: datetime | None = None
    modified: datetime | None = None
    cvss_score: float | None = None
    impact: Impact | None = None
    cwe_id: str | None = None
    references: tuple[Reference, ...] = ()
    summary: str = ""
    config: ConfigExpr | None = None
    software_list: tuple[CpeName, ...] = ()

    def __post_init__(self) -> None:
        if not CVE_ID_RE.match(self.cve_id):
            raise ValueError(f"bad CVE id: {self.cve_id!r}")
        if self.cvss_score is not None and not 0.0 <= self.cvss_score <= 10.0:
            raise ValueError(f"CVSS score out of range: {self.cvss_score}")
        if self.config is None and not self.software_list and not self.summary:
            raise ValueError(f"{self.cve_id}: no configuration, software list or summary")

    def cpes(self) -> list[CpeName]:
        """Names from the configuration, else the software list."""
        if self.config is not None:
            return collect_cpes(self.config)
        return list(self.software_list)


@dataclass
class IngestStats:
    """Per-feed bookkeeping: skipped entries and degraded parses.

    ``skip_reasons`` counts the reason codes for skipped entries plus
    the ``bad-cpe`` code for entries kept with their configuration
    dropped because none of its CPEs parsed.
    """

    records_ok: int = 0
    records_skipped: int = 0
    skip_reasons: Counter = field(default_factory=Counter)

    def merge(self, other: "IngestStats") -> None:
        self.records_ok += other.records_ok
        self.records_skipped += other.records_skipped
        self.skip_reasons.update(other.skip_reasons)

    def as_dict(self) -> dict[str, Any]:
        return {
            "records_ok": self.records_ok,
            "records_skipped": self.records_skipped,
            "skip_reasons": dict(sorted(self.skip_reasons.items())),
        }


def record_year(rec: VulnerabilityRecord) -> int:
    """The year embedded in the CVE id (stable under republication)."""
    return int(rec.cve_id[4:8])


def published_quarter(rec: VulnerabilityRecord) -> int | None:
    if rec.published is None:
        return None
    return (rec.published.month - 1) // 3 + 1


def _parse_datetime(text: str | None) -> datetime | None:
    if not text:
        return None
    raw = text.strip().replace("Z", "+00:00")
    try:
        return datetime.fromisoformat(raw)
    except ValueError:
        return None


def _parse_score(raw: Any) -> float | None:
    try:
        score = float(raw)
    except (TypeError, ValueError):
        return None
    return score if 0.0 <= score <= 10.0 else None


def _make_impact(conf: Any, integ: Any, avail: Any) -> Impact | None:
    def clean(v: Any) -> str | None:
        return v if isinstance(v, str) and v in _IMPACT_VALUES else None

    impact = Impact(clean(conf), clean(integ), clean(avail))
    if impact == Impact(None, None, None):
        return None
    return impact


# --- XML feed --------------------------------------------------------------


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _xml_logical_test(elem: ET.Element) -> tuple[ConfigExpr | None, int, int]:
    """Parse one logical-test; returns (expr, leaves seen, leaves dropped)."""
    seen = dropped = 0
    children: list[ConfigExpr] = []
    for child in elem:
        name = _local(child.tag)
        if name == "fact-ref":
            seen += 1
            try:
                children.append(Leaf(parse_cpe_any(child.get("name") or "")))
            except MalformedCpe:
                dropped += 1
        elif name == "logical-test":
            sub, sub_seen, sub_dropped = _xml_logical_test(child)
            seen += sub_seen
            dropped += sub_dropped
            if sub is not None:
                children.append(sub)
    if not children:
        return None, seen, dropped
    try:
        operator = Operator((elem.get("operator") or "OR").upper())
    except ValueError:
        return None, seen, dropped + len(children)
    negate = (elem.get("negate") or "false").lower() == "true"
    return LogicalTest(operator, tuple(children), negate), seen, dropped


def _wrap_or(exprs: list[ConfigExpr]) -> ConfigExpr | None:
    if not exprs:
        return None
    if len(exprs) == 1:
        return exprs[0]
    return LogicalTest(Operator.OR, tuple(exprs))


def _xml_entry_to_record(
    entry: ET.Element,
) -> tuple[VulnerabilityRecord | None, str | None, bool]:
    """Returns (record, skip_reason, had_bad_cpe)."""
    cve_id = entry.get("id") or ""
    published = modified = None
    cvss_score = None
    impact = None
    cwe_id = None
    references: list[Reference] = []
    summary = ""
    config_exprs: list[ConfigExpr] = []
    cpe_sources = 0
    cpes_parsed = 0
    software: list[CpeName] = []

    for child in entry:
        name = _local(child.tag)
        if name == "cve-id":
            cve_id = (child.text or "").strip() or cve_id
        elif name == "published-datetime":
            published = _parse_datetime(child.text)
        elif name == "last-modified-datetime":
            modified = _parse_datetime(child.text)
        elif name == "cvss":
            for metric in child.iter():
                metric_name = _local(metric.tag)
                if metric_name == "score":
                    cvss_score = _parse_score(metric.text)
                elif metric_name == "base_metrics":
                    values = {
                        _local(m.tag): (m.text or "").strip() for m in metric
                    }
                    impact = _make_impact(
                        values.get("confidentiality-impact"),
                        values.get("integrity-impact"),
                        values.get("availability-impact"),
                    )
        elif name == "cwe":
            raw = child.get("id") or ""
            if _CWE_RE.fullmatch(raw):
                cwe_id = raw
        elif name == "references":
            source = None
            urls: list[str | None] = []
            for sub in child:
                sub_name = _local(sub.tag)
                if sub_name == "source":
                    source = (sub.text or "").strip() or None
                elif sub_name == "reference":
                    urls.append(sub.get("href") or (sub.text or "").strip() or None)
            if not urls:
                urls = [None]
            references.extend(Reference(source, url) for url in urls)
        elif name == "summary":
            summary = " ".join((child.text or "").split())
        elif name == "vulnerable-configuration":
            cpe_sources += 1
            for test in child:
                if _local(test.tag) == "logical-test":
                    expr, seen, bad = _xml_logical_test(test)
                    cpes_parsed += seen - bad
                    if expr is not None:
                        config_exprs.append(expr)
        elif name == "vulnerable-software-list":
            cpe_sources += 1
            for product in child:
                if _local(product.tag) != "product":
                    continue
                try:
                    software.append(parse_cpe_any((product.text or "").strip()))
                    cpes_parsed += 1
                except MalformedCpe:
                    pass

    if not CVE_ID_RE.match(cve_id):
        return None, SKIP_NO_ID, False

    config = _wrap_or(config_exprs)
    had_bad_cpe = cpe_sources > 0 and cpes_parsed == 0
    if config is None and not software and not summary:
        return None, SKIP_EMPTY, had_bad_cpe

    record = VulnerabilityRecord(
        cve_id=cve_id,
        published=published,
        modified=modified,
        cvss_score=cvss_score,
        impact=impact,
        cwe_id=cwe_id,
        references=tuple(references),
        summary=summary,
        config=config,
        software_list=tuple(software),
    )
    return record, None, had_bad_cpe


def parse_feed_xml(stream: IO[bytes]) -> tuple[list[VulnerabilityRecord], IngestStats]:
    """Stream-parse an NVD XML feed; per-entry failures never abort."""
    stats = IngestStats()
    records: list[VulnerabilityRecord] = []
    try:
        for _event, elem in ET.iterparse(stream, events=("end",)):
            if _local(elem.tag) != "entry":
                continue
            try:
                record, reason, had_bad_cpe = _xml_entry_to_record(elem)
            except ValueError:
                record, reason, had_bad_cpe = None, SKIP_EMPTY, False
            if had_bad_cpe:
                stats.skip_reasons[SKIP_BAD_CPE] += 1
            if record is None:
                stats.records_skipped += 1
                stats.skip_reasons[reason] += 1
            else:
                stats.records_ok += 1
                records.append(record)
            elem.clear()
    except ET.ParseError as exc:
        raise FeedUnreadable(f"XML feed unreadable: {exc}") from exc
    return records, stats


# --- JSON feed -------------------------------------------------------------


def _json_node(node: dict) -> tuple[ConfigExpr | None, int, int, list[CpeName]]:
    """Parse one configuration node; also gathers vulnerable-flagged names."""
    seen = dropped = 0
    children: list[ConfigExpr] = []
    vulnerable: list[CpeName] = []
    for match in node.get("cpe_match") or []:
        if not isinstance(match, dict):
            continue
        uri = match.get("cpe23Uri") or match.get("cpe22Uri") or ""
        seen += 1
        try:
            name = parse_cpe_any(uri)
        except MalformedCpe:
            dropped += 1
            continue
        children.append(Leaf(name))
        if match.get("vulnerable"):
            vulnerable.append(name)
    for sub in node.get("children") or []:
        if not isinstance(sub, dict):
            continue
        expr, sub_seen, sub_dropped, sub_vuln = _json_node(sub)
        seen += sub_seen
        dropped += sub_dropped
        vulnerable.extend(sub_vuln)
        if expr is not None:
            children.append(expr)
    if not children:
        return None, seen, dropped, vulnerable
    try:
        operator = Operator(str(node.get("operator") or "OR").upper())
    except ValueError:
        return None, seen, dropped + len(children), []
    negate = bool(node.get("negate"))
    return LogicalTest(operator, tuple(children), negate), seen, dropped, vulnerable


def _json_item_to_record(
    item: dict,
) -> tuple[VulnerabilityRecord | None, str | None, bool]:
    cve = item.get("cve") or {}
    meta = cve.get("CVE_data_meta") or {}
    cve_id = str(meta.get("ID") or "")
    if not CVE_ID_RE.match(cve_id):
        return None, SKIP_NO_ID, False

    summary = ""
    descriptions = (cve.get("description") or {}).get("description_data") or []
    for entry in descriptions:
        if isinstance(entry, dict) and str(entry.get("lang", "")).startswith("en"):
            summary = " ".join(str(entry.get("value") or "").split())
            break
    if not summary and descriptions and isinstance(descriptions[0], dict):
        summary = " ".join(str(descriptions[0].get("value") or "").split())

    cwe_id = None
    for problem in (cve.get("problemtype") or {}).get("problemtype_data") or []:
        for desc in (problem.get("description") or []) if isinstance(problem, dict) else []:
            value = str(desc.get("value") or "") if isinstance(desc, dict) else ""
            match = _CWE_RE.fullmatch(value)
            if match:
                cwe_id = value
                break
        if cwe_id:
            break

    references: list[Reference] = []
    for ref in (cve.get("references") or {}).get("reference_data") or []:
        if isinstance(ref, dict):
            references.append(
                Reference(ref.get("refsource") or None, ref.get("url") or None)
            )

    impact_block = item.get("impact") or {}
    cvss2 = (impact_block.get("baseMetricV2") or {}).get("cvssV2") or {}
    cvss_score = _parse_score(cvss2.get("baseScore"))
    impact = _make_impact(
        cvss2.get("confidentialityImpact"),
        cvss2.get("integrityImpact"),
        cvss2.get("availabilityImpact"),
    )

    nodes = (item.get("configurations") or {}).get("nodes") or []
    cpe_sources = 1 if nodes else 0
    cpes_parsed = 0
    exprs: list[ConfigExpr] = []
    software: list[CpeName] = []
    for node in nodes:
        if not isinstance(node, dict):
            continue
        expr, seen, dropped, vulnerable = _json_node(node)
        cpes_parsed += seen - dropped
        software.extend(vulnerable)
        if expr is not None:
            exprs.append(expr)

    config = _wrap_or(exprs)
    had_bad_cpe = cpe_sources > 0 and cpes_parsed == 0
    if config is None and not software and not summary:
        return None, SKIP_EMPTY, had_bad_cpe

    record = VulnerabilityRecord(
        cve_id=cve_id,
        published=_parse_datetime(item.get("publishedDate")),
        modified=_parse_datetime(item.get("lastModifiedDate")),
        cvss_score=cvss_score,
        impact=impact,
        cwe_id=cwe_id,
        references=tuple(references),
        summary=summary,
        config=config,
        software_list=tuple(software),
    )
    return record, None, had_bad_cpe


def parse_feed_json(stream: IO[bytes]) -> tuple[list[VulnerabilityRecord], IngestStats]:
    """Parse an NVD JSON feed into the same record model as the XML path."""
    try:
        document = json.load(stream)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FeedUnreadable(f"JSON feed unreadable: {exc}") from exc
    if not isinstance(document, dict) or not isinstance(
        document.get("CVE_Items"), list
    ):
        raise FeedUnreadable("JSON feed has no CVE_Items list")

    stats = IngestStats()
    records: list[VulnerabilityRecord] = []
    for item in document["CVE_Items"]:
        if not isinstance(item, dict):
            stats.records_skipped += 1
            stats.skip_reasons[SKIP_NO_ID] += 1
            continue
        try:
            record, reason, had_bad_cpe = _json_item_to_record(item)
        except ValueError:
            record, reason, had_bad_cpe = None, SKIP_EMPTY, False
        if had_bad_cpe:
            stats.skip_reasons[SKIP_BAD_CPE] += 1
        if record is None:
            stats.records_skipped += 1
            stats.skip_reasons[reason] += 1
        else:
            stats.records_ok += 1
            records.append(record)
    return records, stats


# --- file-level entry point -------------------------------------------------

_GZIP_MAGIC = b"\x1f\x8b"


def read_feed(path: str | Path) -> tuple[list[VulnerabilityRecord], IngestStats]:
    """Read one feed file; gzip and XML/JSON detected by content."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise FeedUnreadable(f"cannot read {path}: {exc}") from exc
    if raw[:2] == _GZIP_MAGIC:
        try:
            raw = gzip.decompress(raw)
        except OSError as exc:
            raise FeedUnreadable(f"bad gzip stream in {path}: {exc}") from exc
    head = raw.lstrip()[:1]
    if head == b"<":
        return parse_feed_xml(io.BytesIO(raw))
    if head in (b"{", b"["):
        return parse_feed_json(io.BytesIO(raw))
    raise FeedUnreadable(f"{path} is neither XML nor JSON")


# --- NDJSON record store -----------------------------------------------------


def _config_to_json(expr: ConfigExpr) -> dict[str, Any]:
    if isinstance(expr, Leaf):
        return {"cpe": format_cpe_formatted(expr.cpe)}
    return {
        "operator": expr.operator.value,
        "negate": expr.negate,
        "children": [_config_to_json(c) for c in expr.children],
    }


def _config_from_json(data: dict[str, Any]) -> ConfigExpr:
    if "cpe" in data:
        return Leaf(parse_cpe_any(data["cpe"]))
    return LogicalTest(
        Operator(data["operator"]),
        tuple(_config_from_json(c) for c in data["children"]),
        bool(data.get("negate", False)),
    )


def record_to_dict(rec: VulnerabilityRecord) -> dict[str, Any]:
    """Stable store schema; absent optional fields are omitted."""
    out: dict[str, Any] = {"cve_id": rec.cve_id}
    if rec.published is not None:
        out["published"] = rec.published.isoformat()
    if rec.modified is not None:
        out["modified"] = rec.modified.isoformat()
    if rec.cvss_score is not None:
        out["cvss_score"] = rec.cvss_score
    if rec.impact is not None:
        out["impact"] = {
            "confidentiality": rec.impact.confidentiality,
            "integrity": rec.impact.integrity,
            "availability": rec.impact.availability,
        }
    if rec.cwe_id is not None:
        out["cwe_id"] = rec.cwe_id
    if rec.references:
        out["references"] = [
            {"source": r.source, "url": r.url} for r in rec.references
        ]
    if rec.summary:
        out["summary"] = rec.summary
    if rec.config is not None:
        out["config"] = _config_to_json(rec.config)
    if rec.software_list:
        out["software_list"] = [format_cpe_formatted(c) for c in rec.software_list]
    return out


def dict_to_record(data: dict[str, Any]) -> VulnerabilityRecord:
    impact = None
    if "impact" in data:
        block = data["impact"]
        impact = _make_impact(
            block.get("confidentiality"),
            block.get("integrity"),
            block.get("availability"),
        )
    return VulnerabilityRecord(
        cve_id=data["cve_id"],
        published=_parse_datetime(data.get("published")),
        modified=_parse_datetime(data.get("modified")),
        cvss_score=data.get("cvss_score"),
        impact=impact,
        cwe_id=data.get("cwe_id"),
        references=tuple(
            Reference(r.get("source"), r.get("url"))
            for r in data.get("references", [])
        ),
        summary=data.get("summary", ""),
        config=_config_from_json(data["config"]) if "config" in data else None,
        software_list=tuple(
            parse_cpe_any(c) for c in data.get("software_list", [])
        ),
    )


def write_store(records: Iterable[VulnerabilityRecord], path: str | Path) -> int:
    """Write one record per line; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for rec in records:
            handle.write(json.dumps(record_to_dict(rec), sort_keys=True))
            handle.write("\n")
            count += 1
    return count


def read_store(path: str | Path) -> Iterator[VulnerabilityRecord]:
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield dict_to_record(json.loads(line))
