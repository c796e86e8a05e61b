"""Concept identification: the final pipeline stage.

Orchestrates admission-cause masking, rule-based audit-category
identification, and domain tagging of whatever text remains. By the end
every non-delimiter token carries exactly one tag kind; UNRESOLVED is
the explicit fallback for words the lexicons do not know, which makes
them visible as refinement candidates instead of silently dropped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .lexicon import LexiconKind, LexiconStore, normalize_term
from .preparation import prepare
from .preprocessing import _CLAUSE_DELIMS, AnnotatedNote, annotate
from .records import AdmissionRecord
from .rules import CategoryMatch, RuleSet, apply_rules


class TagKind(Enum):
    ADMISSION_CAUSE = "ADMISSION_CAUSE"
    AUDIT_EVIDENCE = "AUDIT_EVIDENCE"
    DOMAIN_CONCEPT = "DOMAIN_CONCEPT"
    MODIFIER = "MODIFIER"
    MEASUREMENT = "MEASUREMENT"
    UNRESOLVED = "UNRESOLVED"


@dataclass(frozen=True)
class ConceptTag:
    start: int  # token index, inclusive
    end: int  # exclusive
    kind: TagKind
    payload: str  # cause phrase / category / domain label / marker detail


# Function words that need no domain entry of their own. Anything here is
# tagged DOMAIN_CONCEPT "function-word" rather than UNRESOLVED so that the
# unresolved list stays a useful refinement queue.
STOP_WORDS = frozenset(
    """
    a an the of on in at to for with and or but nor by from as is are was
    were be been being has have had this that these those it its his her
    their then than so if after before during since also both each per
    """.split()
)

FUNCTION_WORD = "function-word"


class _TagBuilder:
    """Claims token ranges one kind at a time; first claim wins.

    Later claims that partially overlap an earlier one keep only their
    free sub-ranges, so the final tag list partitions the claimed tokens
    and rendered spans can never overlap.
    """

    def __init__(self, note: AnnotatedNote):
        self.note = note
        self.owner: list[ConceptTag | None] = [None] * len(note.tokens)
        self.tags: list[ConceptTag] = []

    def claim(self, start: int, end: int, kind: TagKind, payload: str) -> None:
        i = start
        while i < end:
            if self.owner[i] is not None or self.note.tokens[i].text in _CLAUSE_DELIMS:
                i += 1
                continue
            j = i
            while (
                j < end
                and self.owner[j] is None
                and self.note.tokens[j].text not in _CLAUSE_DELIMS
            ):
                j += 1
            tag = ConceptTag(start=i, end=j, kind=kind, payload=payload)
            self.tags.append(tag)
            for k in range(i, j):
                self.owner[k] = tag
            i = j

    def claimed(self) -> set[int]:
        return {i for i, tag in enumerate(self.owner) if tag is not None}

    def finished(self) -> tuple[ConceptTag, ...]:
        return tuple(sorted(self.tags, key=lambda t: (t.start, t.end)))


def _longest_match_spans(
    note: AnnotatedNote,
    store: LexiconStore,
    kind: LexiconKind,
    skip: set[int],
) -> list[tuple[int, int, str]]:
    """Left-to-right longest-first dictionary scan over unclaimed tokens.

    Returns (start, end, canonical surface) triples. Matching goes through
    effective_text so resolved abbreviations count as their expansions.
    """
    width = store.max_term_tokens(kind)
    spans: list[tuple[int, int, str]] = []
    n = len(note.tokens)
    i = 0
    while i < n:
        if i in skip or note.tokens[i].text in _CLAUSE_DELIMS:
            i += 1
            continue
        hit = None
        for length in range(width, 0, -1):
            j = i + length
            if j > n:
                continue
            window = range(i, j)
            if any(k in skip or note.tokens[k].text in _CLAUSE_DELIMS for k in window):
                continue
            phrase = " ".join(note.effective_text(k) for k in window)
            entries = store.lookup(phrase, kind)
            if entries:
                hit = (i, j, entries[0].surface)
                break
        if hit:
            spans.append(hit)
            i = hit[1]
        else:
            i += 1
    return spans


def identify_admission_cause(note: AnnotatedNote, store: LexiconStore) -> list[ConceptTag]:
    """Tag mechanism-of-admission phrases and mask them from rule triggers.

    Phrase dictionary first, then single keywords over whatever the
    phrases did not cover, so "fall from height" beats "fall".
    """
    covered: set[int] = set()
    tags: list[ConceptTag] = []
    for start, end, surface in _longest_match_spans(
        note, store, LexiconKind.ADMISSION_CAUSE_PHRASE, covered
    ):
        tags.append(ConceptTag(start, end, TagKind.ADMISSION_CAUSE, surface))
        covered.update(range(start, end))
    for start, end, surface in _longest_match_spans(
        note, store, LexiconKind.ADMISSION_CAUSE_KEYWORD, covered
    ):
        tags.append(ConceptTag(start, end, TagKind.ADMISSION_CAUSE, surface))
        covered.update(range(start, end))
    note.masked_positions |= covered
    return sorted(tags, key=lambda t: t.start)


def identify_audit_categories(note: AnnotatedNote, rules: RuleSet) -> list[CategoryMatch]:
    """Run the rule engine. Cause spans must already be masked."""
    return apply_rules(note, rules)


def identify_domain_concepts(
    note: AnnotatedNote,
    store: LexiconStore,
    claimed: set[int] | None = None,
) -> list[ConceptTag]:
    """Tag leftover tokens with domain labels, falling back to UNRESOLVED.

    Stop-words and bare punctuation become "function-word" so the
    unresolved list only ever contains genuine vocabulary gaps.
    """
    claimed = set(claimed or ())
    tags: list[ConceptTag] = []
    for start, end, surface in _longest_match_spans(
        note, store, LexiconKind.DOMAIN_CONCEPT, claimed
    ):
        entry = store.lookup(surface, LexiconKind.DOMAIN_CONCEPT)[0]
        tags.append(ConceptTag(start, end, TagKind.DOMAIN_CONCEPT, entry.domain_tag))
        claimed.update(range(start, end))
    for i, token in enumerate(note.tokens):
        if i in claimed or token.text in _CLAUSE_DELIMS:
            continue
        if normalize_term(note.effective_text(i)) in STOP_WORDS or token.is_punct:
            tags.append(ConceptTag(i, i + 1, TagKind.DOMAIN_CONCEPT, FUNCTION_WORD))
        else:
            tags.append(ConceptTag(i, i + 1, TagKind.UNRESOLVED, token.text))
    return sorted(tags, key=lambda t: (t.start, t.end))


@dataclass
class ClassificationResult:
    admission_id: str
    categories: tuple[CategoryMatch, ...]
    tags: tuple[ConceptTag, ...]
    flags: tuple[str, ...]
    versions: dict[str, str]
    note: AnnotatedNote | None = field(default=None, repr=False, compare=False)

    def _of_kind(self, kind: TagKind) -> tuple[ConceptTag, ...]:
        return tuple(t for t in self.tags if t.kind is kind)

    @property
    def cause_spans(self) -> tuple[ConceptTag, ...]:
        return self._of_kind(TagKind.ADMISSION_CAUSE)

    @property
    def domain_tags(self) -> tuple[ConceptTag, ...]:
        return self._of_kind(TagKind.DOMAIN_CONCEPT)

    @property
    def unresolved(self) -> tuple[ConceptTag, ...]:
        return self._of_kind(TagKind.UNRESOLVED)

    def category_texts(self) -> set[str]:
        return {m.category.text for m in self.categories}

    def to_dict(self) -> dict:
        return {
            "admission_id": self.admission_id,
            "categories": [
                {
                    "category": m.category.text,
                    "rule_id": m.rule_id,
                    "flags": sorted(m.flags),
                }
                for m in self.categories
            ],
            "flags": list(self.flags),
            "cause_spans": [
                {"start": t.start, "end": t.end, "phrase": t.payload}
                for t in self.cause_spans
            ],
            "domain_tags": [
                {"start": t.start, "end": t.end, "domain": t.payload}
                for t in self.domain_tags
            ],
            "unresolved": [
                {"start": t.start, "end": t.end, "text": t.payload}
                for t in self.unresolved
            ],
            "versions": dict(self.versions),
        }


def classify_note(
    record: AdmissionRecord,
    store: LexiconStore,
    rules: RuleSet,
    *,
    modifier_window: int = 6,
    spell_distance1_len: int = 5,
    spell_distance2_len: int = 8,
) -> ClassificationResult:
    """Full pipeline for one record: prepare, annotate, tag, classify.

    Never raises for note content; an empty note yields an empty result
    and processing diagnostics travel out through the flags field.
    """
    prepared = prepare(
        record.note,
        store,
        spell_distance1_len=spell_distance1_len,
        spell_distance2_len=spell_distance2_len,
    )
    note = annotate(prepared, store, modifier_window=modifier_window)

    cause_tags = identify_admission_cause(note, store)
    matches = identify_audit_categories(note, rules)

    builder = _TagBuilder(note)
    for tag in cause_tags:
        builder.claim(tag.start, tag.end, tag.kind, tag.payload)
    for match in matches:
        for ev in match.evidence:
            builder.claim(
                ev.trigger_start, ev.trigger_end, TagKind.AUDIT_EVIDENCE, match.category.text
            )
            for _term, index in ev.satisfied:
                builder.claim(index, index + 1, TagKind.AUDIT_EVIDENCE, match.category.text)
    for span in note.modifiers:
        builder.claim(span.start, span.end, TagKind.MODIFIER, span.polarity.value)
    for span in note.measurements:
        builder.claim(span.start, span.end, TagKind.MEASUREMENT, f"{span.kind.value}={span.value}")
    for tag in identify_domain_concepts(note, store, builder.claimed()):
        builder.claim(tag.start, tag.end, tag.kind, tag.payload)

    note.concept_tags = list(builder.finished())
    flags = []
    if record.flag:
        flags.append(record.flag)
    flags.extend(note.diagnostics)
    return ClassificationResult(
        admission_id=record.admission_id,
        categories=tuple(matches),
        tags=builder.finished(),
        flags=tuple(flags),
        versions={"lexicon": store.version, "ruleset": rules.version},
        note=note,
    )


def classify_corpus(
    records: list[AdmissionRecord],
    store: LexiconStore,
    rules: RuleSet,
    **tuning,
) -> tuple[list[ClassificationResult], dict]:
    """Classify every record, in order, isolating per-record failures.

    Returns the results plus a summary: record/category counts and the
    ids of any records that failed internally (they still get an empty
    result so downstream totals stay aligned with the corpus).
    Keyword tuning arguments pass straight through to classify_note.
    """
    results: list[ClassificationResult] = []
    category_counts: dict[str, int] = {}
    failed: list[str] = []
    for record in records:
        try:
            result = classify_note(record, store, rules, **tuning)
        except Exception as exc:  # noqa: BLE001 - batch isolation by contract
            failed.append(record.admission_id)
            result = ClassificationResult(
                admission_id=record.admission_id,
                categories=(),
                tags=(),
                flags=(f"classification error: {exc}",),
                versions={"lexicon": store.version, "ruleset": rules.version},
            )
        results.append(result)
        for text in sorted(result.category_texts()):
            category_counts[text] = category_counts.get(text, 0) + 1
    summary = {
        "records": len(records),
        "failed": failed,
        "category_counts": dict(sorted(category_counts.items())),
    }
    return results, summary


def write_results(results: list[ClassificationResult], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for result in results:
            fh.write(json.dumps(result.to_dict(), ensure_ascii=False) + "\n")


def read_results(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows
