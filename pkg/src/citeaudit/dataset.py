"""On-disk data model: the released master table and replay over it.

The master table has 20 columns per evaluable citation: identity, query and
response metadata, source metadata, the five classification labels, and the
three derived scores. Row invariants tie derived scores to the label pairs
through the shipped matrices, so reading the table doubles as a validation
of both the data and the matrices.

Supported formats by suffix: .parquet (columnar, via polars when installed),
.jsonl (line-delimited JSON), .csv / .tsv (delimited text).
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

from . import metrics
from .metrics import (
    CitationLabels,
    PoolRecord,
    Thresholds,
    pool_report,
    threshold_sensitivity,
)
from .taxonomy import (
    ALIGNMENT_MATRIX,
    SUITABILITY_MATRIX,
    DomainLabel,
    FidelityLabel,
    IntentLabel,
    PurposeLabel,
    ScoreMatrix,
    TypeLabel,
)

try:  # parquet support is optional; jsonl/csv always work
    import polars as _polars
except ImportError:  # pragma: no cover
    _polars = None


class SchemaMismatchError(ValueError):
    """File lacks the expected columns or is empty."""


class MasterIoError(OSError):
    """Master table could not be read or written."""


class ValidationFailedError(ValueError):
    """Strict mode: at least one row violates the schema invariants."""


#: Release column order.
MASTER_COLUMNS = (
    "cit_id",
    "query_id",
    "site",
    "category",
    "model_short",
    "provider",
    "cited_sentence",
    "url_id",
    "source_url",
    "clen",
    "cited_len",
    "crawl_yn",
    "QI_label",
    "SP_label",
    "ASF_label",
    "SD_label",
    "ST_label",
    "ipam_score",
    "asf_score",
    "ssm_score",
)

_INT_COLUMNS = {"cit_id", "clen", "cited_len", "ipam_score", "asf_score", "ssm_score"}


@dataclass(frozen=True)
class MasterRecord:
    cit_id: int
    query_id: str
    site: str
    category: str
    model_short: str
    provider: str
    cited_sentence: str
    url_id: str
    source_url: str
    clen: int
    cited_len: int
    crawl_yn: str
    qi_label: str
    sp_label: str
    asf_label: str
    sd_label: str
    st_label: str
    ipam_score: int
    asf_score: int
    ssm_score: int

    def to_row(self) -> dict:
        row = asdict(self)
        for column in ("QI_label", "SP_label", "ASF_label", "SD_label", "ST_label"):
            row[column] = row.pop(column.lower())
        return {column: row[column] for column in MASTER_COLUMNS}

    @classmethod
    def from_row(cls, row: dict) -> "MasterRecord":
        missing = [c for c in MASTER_COLUMNS if c not in row]
        if missing:
            raise SchemaMismatchError(f"missing columns: {missing}")
        values = dict(row)
        for column in _INT_COLUMNS:
            values[column] = int(values[column])
        return cls(
            cit_id=values["cit_id"],
            query_id=str(values["query_id"]),
            site=str(values["site"]),
            category=str(values["category"]),
            model_short=str(values["model_short"]),
            provider=str(values["provider"]),
            cited_sentence=str(values["cited_sentence"]),
            url_id=str(values["url_id"]),
            source_url=str(values["source_url"]),
            clen=values["clen"],
            cited_len=values["cited_len"],
            crawl_yn=str(values["crawl_yn"]),
            qi_label=str(values["QI_label"]),
            sp_label=str(values["SP_label"]),
            asf_label=str(values["ASF_label"]),
            sd_label=str(values["SD_label"]),
            st_label=str(values["ST_label"]),
            ipam_score=values["ipam_score"],
            asf_score=values["asf_score"],
            ssm_score=values["ssm_score"],
        )

    def labels(self) -> CitationLabels:
        return CitationLabels(
            qi=IntentLabel(self.qi_label),
            sp=PurposeLabel(self.sp_label),
            sd=DomainLabel(self.sd_label),
            st=TypeLabel(self.st_label),
            asf=FidelityLabel(self.asf_label),
        )


def validate_record(
    record: MasterRecord,
    alignment_matrix: ScoreMatrix = ALIGNMENT_MATRIX,
    suitability_matrix: ScoreMatrix = SUITABILITY_MATRIX,
) -> list[str]:
    """Invariant violations for one row (empty list when valid)."""
    problems: list[str] = []
    try:
        labels = record.labels()
    except ValueError as exc:
        return [f"invalid label: {exc}"]
    expected_ipam = alignment_matrix.score(labels.qi.value, labels.sp.value)
    if record.ipam_score != expected_ipam:
        problems.append(f"ipam_score {record.ipam_score} != matrix {expected_ipam}")
    expected_ssm = suitability_matrix.score(labels.sd.value, labels.st.value)
    if record.ssm_score != expected_ssm:
        problems.append(f"ssm_score {record.ssm_score} != matrix {expected_ssm}")
    if record.asf_score != labels.asf.ordinal:
        problems.append(f"asf_score {record.asf_score} != ordinal {labels.asf.ordinal}")
    if record.cited_len != len(record.cited_sentence):
        problems.append(
            f"cited_len {record.cited_len} != len(cited_sentence) {len(record.cited_sentence)}"
        )
    if record.crawl_yn != "Y":
        problems.append(f"crawl_yn {record.crawl_yn!r} != 'Y'")
    return problems


@dataclass
class ReadResult:
    records: list[MasterRecord]
    violations: list[tuple[int, str]]  # (cit_id or row index, message)

    @property
    def n_read(self) -> int:
        return len(self.records) + len({i for i, _ in self.violations})


def _iter_rows(path: Path) -> Iterable[dict]:
    suffix = path.suffix.lower()
    if suffix == ".parquet":
        if _polars is None:
            raise MasterIoError("parquet support requires the polars extra")
        frame = _polars.read_parquet(path)
        yield from frame.iter_rows(named=True)
    elif suffix == ".jsonl":
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)
    elif suffix in (".csv", ".tsv"):
        delimiter = "\t" if suffix == ".tsv" else ","
        with path.open("r", encoding="utf-8", newline="") as fh:
            yield from csv.DictReader(fh, delimiter=delimiter)
    else:
        raise MasterIoError(f"unsupported master format: {path.suffix!r}")


def read_master(path: str | Path, strict: bool = False) -> ReadResult:
    """Read and validate a master table.

    Rows violating schema invariants are reported with their ids and dropped
    (or raise ValidationFailedError under ``strict``). An empty or
    column-deficient file raises SchemaMismatchError.
    """
    path = Path(path)
    if not path.exists():
        raise MasterIoError(f"no such file: {path}")
    records: list[MasterRecord] = []
    violations: list[tuple[int, str]] = []
    count = 0
    for index, row in enumerate(_iter_rows(path)):
        count += 1
        try:
            record = MasterRecord.from_row(row)
        except SchemaMismatchError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            violations.append((index, f"unparseable row: {exc}"))
            continue
        problems = validate_record(record)
        if problems:
            violations.extend((record.cit_id, p) for p in problems)
        else:
            records.append(record)
    if count == 0:
        raise SchemaMismatchError(f"{path} contains no rows")
    if strict and violations:
        preview = "; ".join(f"row {i}: {m}" for i, m in violations[:5])
        raise ValidationFailedError(
            f"{len(violations)} invariant violations (strict mode): {preview}"
        )
    return ReadResult(records=records, violations=violations)


def write_master(records: Sequence[MasterRecord], path: str | Path) -> None:
    """Write records in the format implied by the path suffix."""
    path = Path(path)
    rows = [record.to_row() for record in records]
    suffix = path.suffix.lower()
    if suffix == ".parquet":
        if _polars is None:
            raise MasterIoError("parquet support requires the polars extra")
        _polars.DataFrame(rows, schema={c: None for c in MASTER_COLUMNS}).write_parquet(path)
    elif suffix == ".jsonl":
        with path.open("w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    elif suffix in (".csv", ".tsv"):
        delimiter = "\t" if suffix == ".tsv" else ","
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(MASTER_COLUMNS), delimiter=delimiter)
            writer.writeheader()
            writer.writerows(rows)
    else:
        raise MasterIoError(f"unsupported master format: {path.suffix!r}")


def to_pool_records(records: Sequence[MasterRecord]) -> list[PoolRecord]:
    return [
        PoolRecord(
            labels=record.labels(),
            response_key=f"{record.query_id}::{record.model_short}",
            model=record.model_short,
            provider=record.provider,
        )
        for record in records
    ]


@dataclass
class ReplayReport:
    pool: metrics.PoolReport
    variants: list[metrics.VariantResult]
    n_records: int
    n_violations: int

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "n_violations": self.n_violations,
            "pool": self.pool.to_dict(),
            "threshold_variants": [v.to_dict() for v in self.variants],
        }


def replay(
    records: Sequence[MasterRecord],
    thresholds: Thresholds = Thresholds(),
    n_violations: int = 0,
) -> ReplayReport:
    """Recompute the full metric battery from validated master records.

    Deterministic: identical records and thresholds produce identical
    reports (and byte-identical JSON when serialized with sorted keys).
    """
    pool_records = to_pool_records(records)
    variants = dict(metrics.THRESHOLD_VARIANTS)
    variants["baseline"] = thresholds
    return ReplayReport(
        pool=pool_report(pool_records, thresholds),
        variants=threshold_sensitivity(pool_records, variants),
        n_records=len(records),
        n_violations=n_violations,
    )
