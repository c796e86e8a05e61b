"""Admission records, the diagnosis code hierarchy, and audit category labels.

Diagnosis codes are dash-separated numeric paths (up to six levels); each
code maps to one colon-separated audit category, usually a coarser label
shared by several sibling codes. Code identity is the numeric segment list;
the human-readable labels are decorative.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
from dataclasses import dataclass, field


class RecordError(ValueError):
    """Malformed code, category, or table content."""


class UnmappedCodeError(LookupError):
    """A diagnosis code with no mapped ancestor in the code table."""


MAX_CODE_DEPTH = 6


@dataclass(frozen=True)
class DiagnosisCode:
    """A hierarchical numeric diagnosis path, e.g. 218-224-309-310-315."""

    segments: tuple[int, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.segments:
            raise RecordError("diagnosis code needs at least one segment")
        if len(self.segments) > MAX_CODE_DEPTH:
            raise RecordError(
                f"diagnosis code deeper than {MAX_CODE_DEPTH} levels: {self.segments}"
            )
        if self.labels and len(self.labels) != len(self.segments):
            raise RecordError(
                f"label count {len(self.labels)} does not match "
                f"segment count {len(self.segments)}"
            )

    def __eq__(self, other):
        # Identity is the numeric path only; labels never participate.
        if not isinstance(other, DiagnosisCode):
            return NotImplemented
        return self.segments == other.segments

    def __hash__(self):
        return hash(self.segments)

    @property
    def parent(self) -> DiagnosisCode | None:
        if len(self.segments) == 1:
            return None
        return DiagnosisCode(self.segments[:-1], self.labels[:-1] if self.labels else ())

    def format(self) -> str:
        return "-".join(str(s) for s in self.segments)

    def format_labels(self) -> str:
        return ">".join(self.labels)

    def __str__(self):
        return self.format()


@dataclass(frozen=True, order=True)
class AuditCategory:
    """A colon-separated hierarchical audit label, e.g. CRANIAL:TRAUMA:SDH."""

    parts: tuple[str, ...]

    def __post_init__(self):
        if not self.parts:
            raise RecordError("audit category needs at least one part")
        for part in self.parts:
            if not part or part != part.strip():
                raise RecordError(f"blank or padded category part in {self.parts!r}")
            if part != part.upper():
                raise RecordError(f"category part not uppercase: {part!r}")

    @classmethod
    def parse(cls, text: str) -> AuditCategory:
        return cls(tuple(p.strip() for p in text.split(":")))

    @property
    def text(self) -> str:
        return ":".join(self.parts)

    def root(self, depth: int) -> AuditCategory:
        return audit_root(self, depth)

    def is_prefix_of(self, other: AuditCategory) -> bool:
        return (
            len(self.parts) <= len(other.parts)
            and other.parts[: len(self.parts)] == self.parts
        )

    def is_strict_prefix_of(self, other: AuditCategory) -> bool:
        return len(self.parts) < len(other.parts) and self.is_prefix_of(other)

    def __str__(self):
        return self.text


OTHER = AuditCategory(("OTHER",))

# The audit category inventory the department currently reports against.
# Rules may extend beyond it; validation warns rather than rejects.
STANDARD_CATEGORIES: tuple[AuditCategory, ...] = tuple(
    AuditCategory.parse(t)
    for t in (
        "ANEURYSM",
        "AVM",
        "CSF:LEAK",
        "CRANIAL:TRAUMA",
        "CRANIAL:TRAUMA:SKULL FRACTURE",
        "CRANIAL:TRAUMA:CONTUSIONS",
        "CRANIAL:TRAUMA:EDH",
        "CRANIAL:TRAUMA:ICH",
        "CRANIAL:TRAUMA:IVH",
        "CRANIAL:TRAUMA:SAH",
        "CRANIAL:TRAUMA:SDH",
        "CRANIAL:TRAUMA:TBI",
        "HYDROCEPHALUS",
        "SPINE:TRAUMA",
        "SPINE:TRAUMA:FRACTURE",
        "SPINE:TRAUMA:CORD",
        "SPINE:TRAUMA:DISCO-LIGAMENTOUS",
        "SPINE:CANAL STENOSIS",
        "SPINE:CAVERNOMA",
        "SPINE:DEGENERATIVE",
        "SPINE:OTHER",
        "OTHER:FRACTURE",
        "OTHER",
        "CRANIAL:NEOPLASIA",
        "CRANIAL:NEOPLASIA:CYST",
        "CRANIAL:NEOPLASIA:GLIOMA",
        "CRANIAL:NEOPLASIA:MENINGIOMA",
        "CRANIAL:NEOPLASIA:METASTASIS",
        "CRANIAL:NEOPLASIA:PITUITARY",
        "CRANIAL:NEOPLASIA:SCHWANNOMA",
        "CRANIAL:CAVERNOMA",
        "SPINE:NEOPLASIA",
        "FISTULA",
        "LESION",
        "COMPLICATION:INFECTION",
    )
)


def parse_diagnosis_code(text: str, labels: str | None = None) -> DiagnosisCode:
    """Parse a dash-separated numeric code, optionally with a '>' label path.

    Raises RecordError naming the 1-based offending segment on bad input.
    """
    raw_segments = text.strip().split("-")
    segments = []
    for i, seg in enumerate(raw_segments, start=1):
        seg = seg.strip()
        if not seg or not seg.isdigit():
            raise RecordError(f"malformed diagnosis code {text!r}: segment {i} ({seg!r})")
        segments.append(int(seg))
    label_parts: tuple[str, ...] = ()
    if labels:
        label_parts = tuple(p.strip() for p in labels.split(">"))
    return DiagnosisCode(tuple(segments), label_parts)


def audit_root(category: AuditCategory, depth: int) -> AuditCategory:
    """The first min(depth, len) parts of a category."""
    if depth < 1:
        raise RecordError(f"root depth must be >= 1, got {depth}")
    return AuditCategory(category.parts[: min(depth, len(category.parts))])


@dataclass(frozen=True)
class AdmissionRecord:
    """One admission row: id, date, optional diagnosis code, free-text note."""

    admission_id: str
    date: dt.date | None = None
    diagnosis: DiagnosisCode | None = None
    note: str = ""
    raw_diagnosis: str = ""
    flag: str | None = None  # why this row was flagged at ingestion, if it was


class CodeTable:
    """Diagnosis code -> (labels, audit category), closed under parents."""

    def __init__(self):
        self._entries: dict[tuple[int, ...], tuple[tuple[str, ...], AuditCategory]] = {}

    def add(self, code: DiagnosisCode, category: AuditCategory) -> None:
        self._entries[code.segments] = (code.labels, category)

    def __len__(self):
        return len(self._entries)

    def __contains__(self, code: DiagnosisCode) -> bool:
        return code.segments in self._entries

    def codes(self) -> list[DiagnosisCode]:
        return [DiagnosisCode(seg, labels) for seg, (labels, _) in sorted(self._entries.items())]

    def category_for(self, code: DiagnosisCode) -> AuditCategory | None:
        entry = self._entries.get(code.segments)
        return entry[1] if entry else None

    def validate(self) -> None:
        """Every non-root entry must have its parent present."""
        for segments in self._entries:
            if len(segments) > 1 and segments[:-1] not in self._entries:
                raise RecordError(
                    f"code table not closed: {'-'.join(map(str, segments))} "
                    f"has no parent entry"
                )


def map_to_audit(code: DiagnosisCode, table: CodeTable) -> AuditCategory:
    """Map a code to its audit category, falling back to the nearest
    mapped ancestor when the exact code is absent."""
    segments = code.segments
    while segments:
        entry = table._entries.get(segments)
        if entry:
            return entry[1]
        segments = segments[:-1]
    raise UnmappedCodeError(f"no audit category mapped for {code.format()} or any ancestor")


def load_code_table(path: str) -> CodeTable:
    """Load a delimited code table with columns code, labels, audit_category."""
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    table = CodeTable()
    reader = csv.DictReader(io.StringIO(text), delimiter=_sniff_delimiter(text))
    required = {"code", "labels", "audit_category"}
    fields = set(reader.fieldnames or ())
    if not required <= fields:
        raise RecordError(f"code table missing columns: {sorted(required - fields)}")
    for row in reader:
        code = parse_diagnosis_code(row["code"], row.get("labels") or None)
        table.add(code, AuditCategory.parse(row["audit_category"]))
    table.validate()
    return table


def _sniff_delimiter(text: str) -> str:
    header = text.splitlines()[0] if text else ""
    return "\t" if "\t" in header else ","


ADMISSION_COLUMNS = ("admission_id", "date", "diagnosis_code", "diagnosis_labels", "note")


def ingest_admissions(path: str) -> list[AdmissionRecord]:
    """Read admissions from a comma- or tab-delimited file.

    Rows with unparseable diagnosis codes or dates keep their raw text and
    are flagged, never dropped: audit totals must see every row.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IOError(f"cannot read admissions file {path}: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text), delimiter=_sniff_delimiter(text))
    fields = set(reader.fieldnames or ())
    mandatory = {"admission_id", "date", "diagnosis_code", "note"}
    if not mandatory <= fields:
        raise RecordError(f"admissions file missing columns: {sorted(mandatory - fields)}")

    records = []
    for row in reader:
        flag = None
        raw_code = (row.get("diagnosis_code") or "").strip()
        diagnosis = None
        if raw_code:
            try:
                diagnosis = parse_diagnosis_code(raw_code, row.get("diagnosis_labels") or None)
            except RecordError as exc:
                flag = f"diagnosis: {exc}"
        date = None
        raw_date = (row.get("date") or "").strip()
        if raw_date:
            try:
                date = dt.date.fromisoformat(raw_date)
            except ValueError:
                flag = (flag + "; " if flag else "") + f"date: not ISO-8601 ({raw_date!r})"
        records.append(
            AdmissionRecord(
                admission_id=row["admission_id"].strip(),
                date=date,
                diagnosis=diagnosis,
                note=row.get("note") or "",
                raw_diagnosis=raw_code,
                flag=flag,
            )
        )
    return records


def write_admissions(path: str, records: list[AdmissionRecord]) -> None:
    """Write admissions in the same delimited layout ingest_admissions reads."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ADMISSION_COLUMNS)
        for rec in records:
            writer.writerow(
                [
                    rec.admission_id,
                    rec.date.isoformat() if rec.date else "",
                    rec.diagnosis.format() if rec.diagnosis else rec.raw_diagnosis,
                    rec.diagnosis.format_labels() if rec.diagnosis else "",
                    rec.note,
                ]
            )
