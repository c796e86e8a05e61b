"""Rule language and engine for audit-category identification.

A rule fires when one of its trigger terms appears unmasked in a note,
subject to negation and uncertainty modifiers and to supporting
conditions evaluated within a declared scope (the trigger phrase itself,
its sentence, or the whole note). Rules are expert-authored text files,
compiled and applied deterministically: priority descending, id
ascending, independent of file order.

Condition terms may be plain canonical terms or measurement classes:
`<VERTEBRAL>` and `<GCS>` are satisfied by a vertebral-level or GCS
measurement span inside the scope.
"""

from __future__ import annotations

import csv
import hashlib
import io
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .lexicon import ModifierPolarity, normalize_term
from .preprocessing import AnnotatedNote, MeasurementKind
from .records import AuditCategory, RecordError


class RuleError(ValueError):
    """Malformed rule file or inconsistent rule set."""


class ExplanationError(ValueError):
    """A match that does not fit the note it is explained against."""


class RuleScope(Enum):
    WORD = "WORD"
    SENTENCE = "SENTENCE"
    NOTE = "NOTE"


class UncertaintyPolicy(Enum):
    FIRE = "FIRE"
    FIRE_FLAGGED = "FIRE_FLAGGED"
    SUPPRESS = "SUPPRESS"


UNCERTAIN = "UNCERTAIN"

_CLASS_TERMS = {
    "<VERTEBRAL>": MeasurementKind.VERTEBRAL_LEVEL,
    "<GCS>": MeasurementKind.GCS_SCORE,
}


@dataclass(frozen=True)
class Rule:
    id: str
    category: AuditCategory
    triggers: tuple[str, ...]
    scope: RuleScope = RuleScope.SENTENCE
    requires: tuple[tuple[str, ...], ...] = ()
    excludes: tuple[str, ...] = ()
    negation_guard: bool = True
    uncertainty: UncertaintyPolicy = UncertaintyPolicy.FIRE_FLAGGED
    priority: int = 0

    def __post_init__(self):
        if not self.triggers:
            raise RuleError(f"rule {self.id!r} has no triggers")


@dataclass(frozen=True)
class Evidence:
    """One trigger occurrence plus the condition terms that let it fire."""

    trigger_start: int  # token index, inclusive
    trigger_end: int  # exclusive
    trigger_text: str
    satisfied: tuple[tuple[str, int], ...]  # (term, token index of the witness)
    uncertain: bool


@dataclass(frozen=True)
class CategoryMatch:
    category: AuditCategory
    rule_id: str
    evidence: tuple[Evidence, ...]
    flags: frozenset[str] = frozenset()


class RuleSet:
    def __init__(self, rules: list[Rule], version: str | None = None):
        seen: dict[str, Rule] = {}
        for rule in rules:
            if rule.id in seen:
                raise RuleError(f"duplicate rule id {rule.id!r}")
            seen[rule.id] = rule
        # Total evaluation order: priority desc, id asc.
        self.rules: tuple[Rule, ...] = tuple(
            sorted(rules, key=lambda r: (-r.priority, r.id))
        )
        self.version = version or self._hash()

    def _hash(self) -> str:
        digest = hashlib.sha256()
        for rule in self.rules:
            digest.update(repr((rule.id, rule.category.text, rule.triggers, rule.scope.value,
                                rule.requires, rule.excludes, rule.negation_guard,
                                rule.uncertainty.value, rule.priority)).encode())
        return digest.hexdigest()[:16]

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def get(self, rule_id: str) -> Rule | None:
        for rule in self.rules:
            if rule.id == rule_id:
                return rule
        return None


# ---------------------------------------------------------------------------
# compiling rule files

_SECTION_RE = re.compile(r"^\[rule\s+([^\]\s]+)\]\s*$")
_FIELD_RE = re.compile(r"^(\w+)\s*=\s*(.*)$")

_DEFAULTS = {
    "scope": RuleScope.SENTENCE,
    "negation_guard": True,
    "priority": 0,
}


def _parse_terms(value: str) -> tuple[str, ...]:
    """Comma-separated terms; quoted phrases allowed."""
    if not value.strip():
        return ()
    row = next(csv.reader(io.StringIO(value), skipinitialspace=True))
    return tuple(t.strip() for t in row if t.strip())


def compile_rules(
    path: str | Path,
    default_uncertainty: UncertaintyPolicy = UncertaintyPolicy.FIRE_FLAGGED,
) -> RuleSet:
    path = Path(path)
    rules: list[Rule] = []
    current: dict | None = None
    ids: dict[str, int] = {}

    def finish(block: dict) -> None:
        lineno = block["line"]
        if "category" not in block:
            raise RuleError(f"{path.name}:{lineno}: rule {block['id']!r} has no category")
        try:
            category = AuditCategory.parse(block["category"])
        except RecordError as exc:
            raise RuleError(f"{path.name}:{block.get('category_line', lineno)}: {exc}") from None
        triggers = _parse_terms(block.get("triggers", ""))
        if not triggers:
            raise RuleError(f"{path.name}:{lineno}: rule {block['id']!r} has no triggers")
        requires = tuple(
            group
            for part in block.get("requires", "").split(";")
            if (group := _parse_terms(part))
        )
        rules.append(
            Rule(
                id=block["id"],
                category=category,
                triggers=triggers,
                scope=block.get("scope", _DEFAULTS["scope"]),
                requires=requires,
                excludes=_parse_terms(block.get("excludes", "")),
                negation_guard=block.get("negation_guard", _DEFAULTS["negation_guard"]),
                uncertainty=block.get("uncertainty", default_uncertainty),
                priority=block.get("priority", _DEFAULTS["priority"]),
            )
        )

    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            section = _SECTION_RE.match(line)
            if section:
                if current is not None:
                    finish(current)
                rule_id = section.group(1)
                if rule_id in ids:
                    raise RuleError(
                        f"{path.name}:{lineno}: duplicate rule id {rule_id!r} "
                        f"(first defined at line {ids[rule_id]})"
                    )
                ids[rule_id] = lineno
                current = {"id": rule_id, "line": lineno}
                continue
            if current is None:
                raise RuleError(f"{path.name}:{lineno}: content outside any [rule ...] section")
            field_match = _FIELD_RE.match(line.strip())
            if not field_match:
                raise RuleError(f"{path.name}:{lineno}: expected key=value, got {line.strip()!r}")
            key, value = field_match.group(1), field_match.group(2).strip()
            if key == "scope":
                try:
                    current[key] = RuleScope(value.upper())
                except ValueError:
                    raise RuleError(f"{path.name}:{lineno}: unknown scope {value!r}") from None
            elif key == "uncertainty":
                try:
                    current[key] = UncertaintyPolicy(value.upper())
                except ValueError:
                    raise RuleError(f"{path.name}:{lineno}: unknown uncertainty policy {value!r}") from None
            elif key == "negation_guard":
                if value.lower() not in ("true", "false"):
                    raise RuleError(f"{path.name}:{lineno}: negation_guard must be true/false")
                current[key] = value.lower() == "true"
            elif key == "priority":
                try:
                    current[key] = int(value)
                except ValueError:
                    raise RuleError(f"{path.name}:{lineno}: priority must be an integer") from None
            elif key in ("category", "triggers", "requires", "excludes"):
                current[key] = value
                if key == "category":
                    current["category_line"] = lineno
            else:
                raise RuleError(f"{path.name}:{lineno}: unknown field {key!r}")
    if current is not None:
        finish(current)
    return RuleSet(rules)


# ---------------------------------------------------------------------------
# applying rules


def _term_occurrences(
    note: AnnotatedNote, term: str, region: range, masked: set[int], max_tokens: int = 4
) -> list[tuple[int, int]]:
    """Token windows inside `region` whose effective text equals the term.
    A single token may satisfy a multi-word term through its resolved
    abbreviation expansion."""
    target = normalize_term(term)
    hits = []
    indices = [i for i in region if i not in masked]
    for pos, i in enumerate(indices):
        joined = ""
        for n in range(max_tokens):
            if pos + n >= len(indices):
                break
            j = indices[pos + n]
            # Windows must be contiguous token runs.
            if n and j != indices[pos + n - 1] + 1:
                break
            joined = f"{joined} {note.effective_text(j)}" if joined else note.effective_text(j)
            if normalize_term(joined) == target:
                hits.append((i, j + 1))
                break
            if len(normalize_term(joined)) > len(target):
                break
    return hits


def _class_witness(note: AnnotatedNote, kind: MeasurementKind, region: range) -> int | None:
    for span in note.measurements:
        if span.kind is kind and span.start in region:
            return span.start
    return None


def _scope_region(note: AnnotatedNote, scope: RuleScope, trigger: tuple[int, int]) -> range:
    if scope is RuleScope.WORD:
        return range(trigger[0], trigger[1])
    if scope is RuleScope.NOTE:
        return range(0, len(note.tokens))
    for sentence in note.sentences:
        if sentence.start <= trigger[0] < sentence.end:
            return range(sentence.start, sentence.end)
    return range(0, len(note.tokens))


def _conditions_hold(
    note: AnnotatedNote, rule: Rule, region: range
) -> tuple[bool, tuple[tuple[str, int], ...]]:
    # Conditions deliberately ignore cause masking: a masked mechanism
    # phrase cannot trigger a rule but may still witness requires/excludes.
    no_mask: set[int] = set()
    satisfied: list[tuple[str, int]] = []
    for group in rule.requires:
        witness: tuple[str, int] | None = None
        for term in group:
            if term in _CLASS_TERMS:
                index = _class_witness(note, _CLASS_TERMS[term], region)
                if index is not None:
                    witness = (term, index)
                    break
            else:
                hits = _term_occurrences(note, term, region, no_mask)
                if hits:
                    witness = (term, hits[0][0])
                    break
        if witness is None:
            return False, ()
        satisfied.append(witness)
    for term in rule.excludes:
        if term in _CLASS_TERMS:
            if _class_witness(note, _CLASS_TERMS[term], region) is not None:
                return False, ()
        elif _term_occurrences(note, term, region, no_mask):
            return False, ()
    return True, tuple(satisfied)


def apply_rules(note: AnnotatedNote, rules: RuleSet) -> list[CategoryMatch]:
    """Evaluate every rule against the note and return one match per
    surviving category.

    Admission-cause masking must already be recorded on the note
    (masked_positions); masked tokens never match triggers but remain
    visible to requires/excludes. Results are de-duplicated by category
    and pruned so no category is a strict prefix of another in the
    output. A category is flagged UNCERTAIN only when every contributing
    occurrence was.
    """
    masked = note.masked_positions
    negated = note.negated_positions()
    uncertain = note.uncertain_positions()
    all_tokens = range(0, len(note.tokens))

    per_category: dict[AuditCategory, dict] = {}
    for rule in rules:
        for trigger in rule.triggers:
            for start, end in _term_occurrences(note, trigger, all_tokens, masked):
                positions = range(start, end)
                if rule.negation_guard and any(p in negated for p in positions):
                    continue
                is_uncertain = any(p in uncertain for p in positions)
                if is_uncertain and rule.uncertainty is UncertaintyPolicy.SUPPRESS:
                    continue
                if is_uncertain and rule.uncertainty is UncertaintyPolicy.FIRE:
                    is_uncertain = False
                region = _scope_region(note, rule.scope, (start, end))
                ok, satisfied = _conditions_hold(note, rule, region)
                if not ok:
                    continue
                evidence = Evidence(
                    trigger_start=start,
                    trigger_end=end,
                    trigger_text=" ".join(t.text for t in note.tokens[start:end]),
                    satisfied=satisfied,
                    uncertain=is_uncertain,
                )
                slot = per_category.setdefault(
                    rule.category, {"rule_id": rule.id, "evidence": []}
                )
                slot["evidence"].append(evidence)

    matches = [
        CategoryMatch(
            category=category,
            rule_id=slot["rule_id"],
            evidence=tuple(slot["evidence"]),
            flags=frozenset({UNCERTAIN})
            if all(e.uncertain for e in slot["evidence"])
            else frozenset(),
        )
        for category, slot in per_category.items()
    ]
    # Specificity pruning: drop any category that is a strict prefix of
    # another surviving category.
    categories = {m.category for m in matches}
    matches = [
        m
        for m in matches
        if not any(m.category.is_strict_prefix_of(other) for other in categories)
    ]
    return matches


def explain(match: CategoryMatch, note: AnnotatedNote) -> str:
    """Human-readable evidence trace for one category match."""
    lines = [f"rule {match.rule_id} -> {match.category.text}"]
    for ev in match.evidence:
        if not (0 <= ev.trigger_start < ev.trigger_end <= len(note.tokens)):
            raise ExplanationError(
                f"match evidence {ev.trigger_start}:{ev.trigger_end} does not fit a "
                f"note of {len(note.tokens)} tokens"
            )
        first = note.tokens[ev.trigger_start]
        last = note.tokens[ev.trigger_end - 1]
        lines.append(
            f"  trigger '{ev.trigger_text}' tokens {ev.trigger_start}-{ev.trigger_end - 1} "
            f"chars {first.start}-{last.end}"
        )
        for term, index in ev.satisfied:
            if not 0 <= index < len(note.tokens):
                raise ExplanationError(f"condition witness index {index} out of range")
            sentence_index = next(
                (k for k, s in enumerate(note.sentences) if s.start <= index < s.end), -1
            )
            lines.append(
                f"    requires '{term}' satisfied by '{note.tokens[index].text}' "
                f"at token {index} (sentence {sentence_index})"
            )
        if ev.uncertain:
            marker = _uncertainty_source(note, ev)
            lines.append(f"    UNCERTAIN via {marker}")
    if UNCERTAIN in match.flags:
        lines.append("  flags: UNCERTAIN")
    return "\n".join(lines)


def _uncertainty_source(note: AnnotatedNote, ev: Evidence) -> str:
    for span in note.modifiers:
        if span.polarity is not ModifierPolarity.UNCERTAINTY:
            continue
        covered = set(range(span.scope[0], span.scope[1]))
        if span.retrospective and span.retro_scope:
            covered |= set(range(span.retro_scope[0], span.retro_scope[1]))
        if covered & set(range(ev.trigger_start, ev.trigger_end)):
            trigger_text = " ".join(t.text for t in note.tokens[span.start : span.end])
            return f"'{trigger_text}' at token {span.start}"
    return "modifier context"
