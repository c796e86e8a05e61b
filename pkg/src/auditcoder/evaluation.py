"""Reference standards, tiered matching, and precision/recall scoring.

Three reference standards share one scorer. Type A covers every record
whose diagnosis code maps to an audit category. Type B keeps only the
diagnosis groups whose notes share vocabulary (some canonical content
term present in at least half the group's notes), so it measures the
pipeline on records whose text plausibly supports classification at
all. Type C has Type A's membership but lets approved OTHER-mapped
records be re-credited when the pipeline calculated something more
specific that an expert signed off on.

Per-record accounting: a record's single mapped category is either
found (tiers EXACT / ROOT_GENERALIZED / VALID_ALTERNATIVE, counted TP)
or not (counted FN), while FP counts records whose calculated
categories were positively wrong (tier DIFFERENT). Recall's denominator
is therefore always the standard's full membership.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .concepts import _longest_match_spans
from .lexicon import LexiconKind, LexiconStore
from .preparation import prepare
from .preprocessing import annotate
from .records import (
    OTHER,
    AdmissionRecord,
    AuditCategory,
    CodeTable,
    UnmappedCodeError,
    map_to_audit,
)


class EvaluationError(ValueError):
    """Inputs that cannot be scored: missing results, malformed tables."""


class StandardKind(Enum):
    A = "A"
    B = "B"
    C = "C"


class MatchTier(Enum):
    EXACT = "EXACT"
    ROOT_GENERALIZED = "ROOT_GENERALIZED"
    VALID_ALTERNATIVE = "VALID_ALTERNATIVE"
    DIFFERENT = "DIFFERENT"
    NO_MATCH = "NO_MATCH"


@dataclass(frozen=True)
class ReferenceStandard:
    kind: StandardKind
    records: tuple[tuple[str, AuditCategory], ...]

    def member_ids(self) -> set[str]:
        return {admission_id for admission_id, _ in self.records}

    def __len__(self):
        return len(self.records)


class AlternativeTable:
    """Unordered category pairs an auditor accepts as interchangeable."""

    def __init__(self, pairs: list[tuple[AuditCategory, AuditCategory]] | None = None):
        self._pairs: set[frozenset[AuditCategory]] = set()
        for a, b in pairs or []:
            self.add(a, b)

    def add(self, a: AuditCategory, b: AuditCategory) -> None:
        if a == b:
            raise EvaluationError(f"alternative pair is degenerate: {a.text}")
        if a.is_prefix_of(b) or b.is_prefix_of(a):
            raise EvaluationError(
                f"{a.text} and {b.text} are prefix-related; that is generalization, "
                "not an alternative"
            )
        self._pairs.add(frozenset((a, b)))

    def contains(self, a: AuditCategory, b: AuditCategory) -> bool:
        return frozenset((a, b)) in self._pairs

    def __len__(self):
        return len(self._pairs)


def load_alternatives(path: str | Path) -> AlternativeTable:
    table = AlternativeTable()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "<->" not in line:
                raise EvaluationError(
                    f"{Path(path).name}:{lineno}: expected 'A <-> B', got {line!r}"
                )
            left, right = (part.strip() for part in line.split("<->", 1))
            table.add(AuditCategory.parse(left), AuditCategory.parse(right))
    return table


@dataclass(frozen=True)
class RecodeApprovals:
    """Expert-approved OTHER recodes. A record qualifies when one of its
    calculated categories is whitelisted outright or approved for that
    specific admission."""

    categories: frozenset[AuditCategory] = frozenset()
    per_record: frozenset[tuple[AuditCategory, str]] = frozenset()

    def approves(self, calculated: AuditCategory, admission_id: str) -> bool:
        return calculated in self.categories or (calculated, admission_id) in self.per_record


def load_approvals(path: str | Path) -> RecodeApprovals:
    categories: set[AuditCategory] = set()
    per_record: set[tuple[AuditCategory, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "@" in line:
                cat_text, admission_id = (part.strip() for part in line.split("@", 1))
                per_record.add((AuditCategory.parse(cat_text), admission_id))
            else:
                categories.add(AuditCategory.parse(line))
    return RecodeApprovals(frozenset(categories), frozenset(per_record))


# ---------------------------------------------------------------------------
# reference standards


def _mapped_category(record: AdmissionRecord, table: CodeTable) -> AuditCategory | None:
    if record.diagnosis is None:
        return None
    try:
        return map_to_audit(record.diagnosis, table)
    except UnmappedCodeError:
        return None


def _note_terms(record: AdmissionRecord, store: LexiconStore) -> set[str]:
    """Canonical content terms present in one note."""
    note = annotate(prepare(record.note, store), store)
    return {
        surface
        for _s, _e, surface in _longest_match_spans(
            note, store, LexiconKind.DOMAIN_CONCEPT, set()
        )
    }


def build_standard(
    records: list[AdmissionRecord],
    classifications: list | None,
    kind: StandardKind,
    *,
    table: CodeTable,
    store: LexiconStore | None = None,
) -> ReferenceStandard:
    """Membership and ground truth for one standard kind.

    classifications is accepted for symmetry with score's inputs (the two
    are built over the same corpus) but only the notes matter here.
    """
    mapped: list[tuple[AdmissionRecord, AuditCategory]] = []
    for record in records:
        category = _mapped_category(record, table)
        if category is not None:
            mapped.append((record, category))

    if kind in (StandardKind.A, StandardKind.C):
        return ReferenceStandard(
            kind=kind,
            records=tuple((r.admission_id, c) for r, c in mapped),
        )

    if store is None:
        raise EvaluationError("Type B needs a lexicon store for note term statistics")
    groups: dict[tuple[int, ...], list[tuple[AdmissionRecord, AuditCategory]]] = {}
    for record, category in mapped:
        groups.setdefault(record.diagnosis.segments, []).append((record, category))
    kept: list[tuple[str, AuditCategory]] = []
    for members in groups.values():
        term_counts: Counter[str] = Counter()
        for record, _ in members:
            for term in _note_terms(record, store):
                term_counts[term] += 1
        threshold = len(members) / 2
        if any(count >= threshold for count in term_counts.values()):
            kept.extend((r.admission_id, c) for r, c in members)
    order = {record.admission_id: i for i, record in enumerate(records)}
    kept.sort(key=lambda pair: order[pair[0]])
    return ReferenceStandard(kind=StandardKind.B, records=tuple(kept))


# ---------------------------------------------------------------------------
# tier matching and scoring


def tier_match(
    calculated: list[AuditCategory],
    mapped: AuditCategory,
    alts: AlternativeTable | None = None,
) -> MatchTier:
    """First satisfied tier, in strict priority order."""
    if any(c == mapped for c in calculated):
        return MatchTier.EXACT
    if any(mapped.is_strict_prefix_of(c) for c in calculated):
        return MatchTier.ROOT_GENERALIZED
    if alts is not None and any(alts.contains(c, mapped) for c in calculated):
        return MatchTier.VALID_ALTERNATIVE
    if calculated:
        return MatchTier.DIFFERENT
    return MatchTier.NO_MATCH


def _round1(value: float) -> float:
    return round(value, 1)


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    fn: int
    tn: int = 0

    @property
    def precision(self) -> float | None:
        total = self.tp + self.fp
        return self.tp / total if total else None

    @property
    def recall(self) -> float | None:
        total = self.tp + self.fn
        return self.tp / total if total else None

    @property
    def f_score(self) -> float | None:
        p, r = self.precision, self.recall
        if p is None or r is None or p + r == 0:
            return None
        return 2 * p * r / (p + r)

    @property
    def precision_pct(self) -> float | None:
        return None if self.precision is None else _round1(100 * self.precision)

    @property
    def recall_pct(self) -> float | None:
        return None if self.recall is None else _round1(100 * self.recall)

    @property
    def f_pct(self) -> float | None:
        # Matches hand-reported figures: the F percentage is computed from
        # the already-rounded precision and recall percentages, not from
        # the exact ratios.
        p, r = self.precision_pct, self.recall_pct
        if p is None or r is None or p + r == 0:
            return None
        return _round1(2 * p * r / (p + r))


def metrics_from_counts(tp: int, fp: int, fn: int, tn: int = 0) -> Metrics:
    if min(tp, fp, fn, tn) < 0:
        raise EvaluationError("negative tier counts")
    return Metrics(tp=tp, fp=fp, fn=fn, tn=tn)


@dataclass(frozen=True)
class EvaluationReport:
    standard: StandardKind
    tier_counts: dict[str, int]
    metrics: Metrics
    recoded: int = 0
    unmapped_suggestions: int = 0
    record_count: int = 0

    def row(self) -> dict:
        m = self.metrics
        return {
            "standard": self.standard.value,
            "tp": m.tp,
            "fp": m.fp,
            "fn": m.fn,
            "tn": m.tn,
            "precision_pct": m.precision_pct,
            "recall_pct": m.recall_pct,
            "f_pct": m.f_pct,
            "recoded": self.recoded,
            "records": self.record_count,
            "tiers": dict(self.tier_counts),
        }


def _categories_of(result) -> list[AuditCategory]:
    """Calculated categories from a ClassificationResult or a parsed
    results-file row."""
    if isinstance(result, dict):
        return [AuditCategory.parse(item["category"]) for item in result.get("categories", [])]
    return [match.category for match in result.categories]


def _id_of(result) -> str:
    if isinstance(result, dict):
        return result["admission_id"]
    return result.admission_id


def _is_specific(calculated: list[AuditCategory]) -> bool:
    return any(category != OTHER for category in calculated)


def score(
    standard: ReferenceStandard,
    classifications: list,
    alts: AlternativeTable | None = None,
    approvals: RecodeApprovals | None = None,
) -> EvaluationReport:
    """Aggregate tier counts and derive the headline metrics.

    Every standard record must have a classification (an empty category
    list is fine; a missing record is a corpus misalignment and raises).
    Classifications for records outside the standard contribute TN when
    empty; non-empty ones are reported separately and kept out of FP so
    the tier identities stay exact.
    """
    by_id: dict[str, list[AuditCategory]] = {}
    for result in classifications:
        by_id[_id_of(result)] = _categories_of(result)

    tier_counts: Counter[str] = Counter({tier.value: 0 for tier in MatchTier})
    recoded = 0
    for admission_id, mapped in standard.records:
        if admission_id not in by_id:
            raise EvaluationError(f"no classification for record {admission_id!r}")
        calculated = by_id[admission_id]
        tier = tier_match(calculated, mapped, alts)
        tier_counts[tier.value] += 1
        if (
            standard.kind is StandardKind.C
            and approvals is not None
            and mapped == OTHER
            and tier is MatchTier.DIFFERENT
            and _is_specific(calculated)
            and any(approvals.approves(c, admission_id) for c in calculated if c != OTHER)
        ):
            recoded += 1

    tp = (
        tier_counts[MatchTier.EXACT.value]
        + tier_counts[MatchTier.ROOT_GENERALIZED.value]
        + tier_counts[MatchTier.VALID_ALTERNATIVE.value]
        + recoded
    )
    fp = tier_counts[MatchTier.DIFFERENT.value] - recoded
    fn = len(standard.records) - tp

    members = standard.member_ids()
    tn = 0
    unmapped_suggestions = 0
    for admission_id, calculated in by_id.items():
        if admission_id in members:
            continue
        if calculated:
            unmapped_suggestions += 1
        else:
            tn += 1

    return EvaluationReport(
        standard=standard.kind,
        tier_counts=dict(tier_counts),
        metrics=Metrics(tp=tp, fp=fp, fn=fn, tn=tn),
        recoded=recoded,
        unmapped_suggestions=unmapped_suggestions,
        record_count=len(standard.records),
    )


@dataclass(frozen=True)
class OtherRecodeRow:
    admission_id: str
    calculated: tuple[AuditCategory, ...]
    approved: bool


@dataclass(frozen=True)
class OtherRecodeReport:
    other_total: int
    specific_calculated: int
    approved: int
    rows: tuple[OtherRecodeRow, ...] = field(default_factory=tuple)


def other_recode_report(
    standard: ReferenceStandard,
    classifications: list,
    approvals: RecodeApprovals | None = None,
) -> OtherRecodeReport:
    """How many OTHER-mapped records the pipeline gave a specific
    category, and how many of those an expert has approved for recode."""
    by_id = {_id_of(result): _categories_of(result) for result in classifications}
    rows: list[OtherRecodeRow] = []
    other_total = 0
    specific = 0
    approved = 0
    for admission_id, mapped in standard.records:
        if mapped != OTHER:
            continue
        other_total += 1
        calculated = tuple(by_id.get(admission_id, []))
        if not _is_specific(list(calculated)):
            continue
        specific += 1
        ok = approvals is not None and any(
            approvals.approves(c, admission_id) for c in calculated if c != OTHER
        )
        if ok:
            approved += 1
        rows.append(OtherRecodeRow(admission_id, calculated, ok))
    return OtherRecodeReport(
        other_total=other_total,
        specific_calculated=specific,
        approved=approved,
        rows=tuple(rows),
    )


def format_report(reports: list[EvaluationReport]) -> str:
    """Delimited summary table, one row per standard."""
    headers = ["standard", "records", "tp", "fp", "fn", "tn", "precision", "recall", "f-score"]
    lines = ["\t".join(headers)]
    for report in reports:
        m = report.metrics

        def pct(value: float | None) -> str:
            return "-" if value is None else f"{value:.1f}"

        lines.append(
            "\t".join(
                [
                    report.standard.value,
                    str(report.record_count),
                    str(m.tp),
                    str(m.fp),
                    str(m.fn),
                    str(m.tn),
                    pct(m.precision_pct),
                    pct(m.recall_pct),
                    pct(m.f_pct),
                ]
            )
        )
        tiers = ", ".join(f"{name}={count}" for name, count in sorted(report.tier_counts.items()))
        lines.append(f"  tiers: {tiers}; recoded={report.recoded}")
    return "\n".join(lines)
