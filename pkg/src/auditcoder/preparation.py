"""Stage 1: make raw note text tokenization-ready.

Three passes run in order: boundary fixing (punctuation split off words,
uncertainty and fracture markers isolated), keyword regularization
(single-sense variants rewritten to canonical surfaces), and spelling
correction. Every pass logs its edits anchored in the ORIGINAL raw text,
so replaying the edit list over the raw input reproduces the prepared
text byte for byte.
"""

from __future__ import annotations

import difflib
import re
from dataclasses import dataclass
from enum import Enum

from .lexicon import LexiconKind, LexiconStore, normalize_term


class EditKind(Enum):
    BOUNDARY = "BOUNDARY"
    REGULARIZE = "REGULARIZE"
    EXPAND = "EXPAND"
    SPELL = "SPELL"


@dataclass(frozen=True)
class Edit:
    """Replace raw[start:end] with `replacement`. start == end is an insert."""

    start: int
    end: int
    replacement: str
    kind: EditKind


@dataclass(frozen=True)
class PreparedText:
    raw: str
    text: str
    edits: tuple[Edit, ...]


def apply_edits(raw: str, edits: tuple[Edit, ...]) -> str:
    out = []
    cursor = 0
    for edit in sorted(edits, key=lambda e: (e.start, e.end)):
        out.append(raw[cursor : edit.start])
        out.append(edit.replacement)
        cursor = edit.end
    out.append(raw[cursor:])
    return "".join(out)


# ---------------------------------------------------------------------------
# boundary fixing

# Shapes that must survive intact: vertebral levels (C7, T12, L4-5, C5/6)
# and decimal numbers. Split chars inside these spans are protected.
_PROTECTED_RE = re.compile(r"\d+\.\d+|[CTLS]\d{1,2}(?:[-/]\d{1,2})?(?![\w])", re.IGNORECASE)

_SPLIT_CHARS = set(",;:()?#")


def _protected_positions(chunk: str) -> set[int]:
    positions: set[int] = set()
    for match in _PROTECTED_RE.finditer(chunk):
        positions.update(range(match.start(), match.end()))
    return positions


def _split_chunk(chunk: str) -> list[str]:
    protected = _protected_positions(chunk)
    pieces: list[str] = []
    current: list[str] = []
    for i, ch in enumerate(chunk):
        if i in protected:
            current.append(ch)
            continue
        if ch in _SPLIT_CHARS:
            if current:
                pieces.append("".join(current))
                current = []
            pieces.append(ch)
        elif ch == "." and not (
            i > 0 and i + 1 < len(chunk) and chunk[i - 1].isdigit() and chunk[i + 1].isdigit()
        ):
            if current:
                pieces.append("".join(current))
                current = []
            pieces.append(ch)
        else:
            current.append(ch)
    if current:
        pieces.append("".join(current))
    return pieces


def _fix_line(line: str) -> str:
    pieces: list[str] = []
    for chunk in line.split():
        pieces.extend(_split_chunk(chunk))
    return " ".join(pieces)


def _diff_edits(before: str, after: str, kind: EditKind) -> list[Edit]:
    matcher = difflib.SequenceMatcher(a=before, b=after, autojunk=False)
    edits = []
    for op, i1, i2, j1, j2 in matcher.get_opcodes():
        if op != "equal":
            edits.append(Edit(i1, i2, after[j1:j2], kind))
    return edits


def fix_boundaries(raw: str) -> PreparedText:
    """Separate punctuation from words; keep protected shapes whole.

    `?` becomes a standalone marker before the word it qualifies, and `#`
    is isolated wherever it is attached. Newlines are preserved.
    """
    fixed = "\n".join(_fix_line(line) for line in raw.split("\n"))
    return PreparedText(raw=raw, text=fixed, edits=tuple(_diff_edits(raw, fixed, EditKind.BOUNDARY)))


# ---------------------------------------------------------------------------
# rebasing pass-local edits onto raw coordinates


def _rebase(prepared: PreparedText, new_edits: list[Edit]) -> PreparedText:
    """Fold edits expressed in prepared.text coordinates into the raw-anchored log."""
    raw = prepared.raw
    text = prepared.text
    edits = list(prepared.edits)
    for edit in sorted(new_edits, key=lambda e: (e.start, e.end), reverse=True):
        edits = _absorb(raw, text, edits, edit)
        text = apply_edits(raw, tuple(edits))
    return PreparedText(raw=raw, text=text, edits=tuple(sorted(edits, key=lambda e: (e.start, e.end))))


def _absorb(raw: str, text: str, edits: list[Edit], new: Edit) -> list[Edit]:
    """Map one text-coordinate edit into raw coordinates, merging any
    existing edits whose output its span covers."""
    # Alternating regions: (out_start, out_end, raw_start, raw_end, edit or None).
    regions: list[tuple[int, int, int, int, Edit | None]] = []
    out_pos = 0
    raw_pos = 0
    for e in sorted(edits, key=lambda x: (x.start, x.end)):
        if e.start > raw_pos:
            length = e.start - raw_pos
            regions.append((out_pos, out_pos + length, raw_pos, e.start, None))
            out_pos += length
        regions.append((out_pos, out_pos + len(e.replacement), e.start, e.end, e))
        out_pos += len(e.replacement)
        raw_pos = e.end
    regions.append((out_pos, out_pos + len(raw) - raw_pos, raw_pos, len(raw), None))

    def region_at_char(pos: int) -> tuple[int, int, int, int, Edit | None] | None:
        for r in regions:
            if r[0] <= pos < r[1]:
                return r
        return None

    absorbed: set[int] = set()
    window_s, window_e = new.start, new.end
    if new.start < new.end:
        first = region_at_char(new.start)
        last = region_at_char(new.end - 1)
        if first is None or last is None:
            raise IndexError(f"span {new.start}:{new.end} outside output text")
        if first[4] is None:
            raw_s = first[2] + (new.start - first[0])
        else:
            absorbed.add(id(first[4]))
            raw_s, window_s = first[2], first[0]
        if last[4] is None:
            raw_e = last[2] + (new.end - 1 - last[0]) + 1
        else:
            absorbed.add(id(last[4]))
            raw_e, window_e = last[3], last[1]
        for r in regions:
            if r[4] is None or not (window_s <= r[0] and r[1] <= window_e):
                continue
            # Zero-width deletions exactly at the window edge stay outside.
            if r[0] == r[1] and r[0] in (window_s, window_e):
                continue
            absorbed.add(id(r[4]))
            raw_s = min(raw_s, r[2])
            raw_e = max(raw_e, r[3])
    else:
        # Pure insertion: map the point, preferring untouched regions.
        inside = region_at_char(new.start)
        if inside is not None and inside[4] is None:
            raw_s = inside[2] + (new.start - inside[0])
        elif inside is not None:
            absorbed.add(id(inside[4]))
            raw_s, window_s, window_e = inside[2], inside[0], inside[1]
        else:
            ending_here = [r for r in regions if r[1] == new.start]
            raw_s = max(r[3] for r in ending_here) if ending_here else len(raw)
        raw_e = max(raw_s, *(r[3] for r in regions if id(r[4]) in absorbed)) if absorbed else raw_s

    replacement = text[window_s : new.start] + new.replacement + text[new.end : window_e]
    kept = [e for e in edits if id(e) not in absorbed]
    merged = Edit(raw_s, raw_e, replacement, new.kind)
    if merged.replacement != raw[merged.start : merged.end]:
        kept.append(merged)
    return sorted(kept, key=lambda e: (e.start, e.end))


# ---------------------------------------------------------------------------
# keyword regularization


def _token_spans(text: str) -> list[tuple[int, int, str]]:
    return [(m.start(), m.end(), m.group()) for m in re.finditer(r"\S+", text)]


# Kinds whose variants are rewritten to the canonical surface.
_REGULARIZED_KINDS = (
    LexiconKind.DOMAIN_CONCEPT,
    LexiconKind.ADMISSION_CAUSE_PHRASE,
    LexiconKind.ADMISSION_CAUSE_KEYWORD,
)


def regularize_keywords(prepared: PreparedText, store: LexiconStore) -> PreparedText:
    """Rewrite unambiguous variants to canonical surfaces and expand
    single-sense abbreviations. Multi-sense abbreviations are deferred to
    the disambiguator, untouched here."""
    tokens = _token_spans(prepared.text)
    max_len = store.max_term_tokens()
    new_edits: list[Edit] = []
    i = 0
    while i < len(tokens):
        matched = False
        for n in range(min(max_len, len(tokens) - i), 0, -1):
            window = tokens[i : i + n]
            phrase = " ".join(t[2] for t in window)
            hits = store.lookup(phrase)
            if not hits:
                continue
            start, end = window[0][0], window[-1][1]
            ambiguous = any(
                e.kind is LexiconKind.ABBREVIATION and len(e.senses) > 1 for e in hits
            )
            if ambiguous:
                # Leave the span for the disambiguator, but still consume it
                # so sub-spans are not rewritten out from under it.
                i += n
                matched = True
                break
            rewrites = []
            for entry in hits:
                if entry.kind is LexiconKind.ABBREVIATION:
                    rewrites.append((EditKind.EXPAND, entry.senses[0].expansion))
                elif entry.kind in _REGULARIZED_KINDS:
                    if normalize_term(phrase) != entry.surface_key:
                        rewrites.append((EditKind.REGULARIZE, entry.surface))
            distinct = {r[1] for r in rewrites}
            if len(distinct) == 1:
                kind, replacement = rewrites[0]
                if replacement != phrase:
                    new_edits.append(Edit(start, end, replacement, kind))
            # Multiple conflicting rewrites: leave the text alone.
            i += n
            matched = True
            break
        if not matched:
            i += 1
    return _rebase(prepared, new_edits)


# ---------------------------------------------------------------------------
# spelling correction


def osa_distance(a: str, b: str, cap: int) -> int:
    """Damerau-Levenshtein distance (optimal string alignment), capped."""
    if abs(len(a) - len(b)) > cap:
        return cap + 1
    prev2: list[int] | None = None
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        row = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            row[j] = min(prev[j] + 1, row[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and a[i - 1] == b[j - 2] and a[i - 2] == b[j - 1]:
                row[j] = min(row[j], prev2[j - 2] + 1)
        if min(row) > cap:
            return cap + 1
        prev2, prev = prev, row
    return prev[-1]


def _spell_eligible(token: str, store: LexiconStore, min_len: int = 5) -> bool:
    return (
        len(token) >= min_len
        and token.isalpha()
        and token[1:].islower()
        and not store.contains_term(token)
    )


def correct_spelling(
    prepared: PreparedText,
    store: LexiconStore,
    distance1_len: int = 5,
    distance2_len: int = 8,
) -> PreparedText:
    """Correct misspellings against the spell-target lexicon.

    Distance 1 is allowed from distance1_len, distance 2 only from
    distance2_len. Ties on distance fall to the most frequent target
    (lowest rank); a rank tie leaves the token unchanged.
    """
    targets = store.entries_of_kind(LexiconKind.SPELL_TARGET)
    if not targets:
        return prepared
    new_edits: list[Edit] = []
    for start, end, token in _token_spans(prepared.text):
        if not _spell_eligible(token, store, distance1_len):
            continue
        cap = 2 if len(token) >= distance2_len else 1
        lowered = token.lower()
        best: list[tuple[int, int, str]] = []  # (distance, rank, surface)
        for entry in targets:
            d = osa_distance(lowered, entry.surface_key, cap)
            if d <= cap:
                best.append((d, entry.spell_rank or 0, entry.surface))
        if not best:
            continue
        best.sort()
        min_d = best[0][0]
        at_min = [b for b in best if b[0] == min_d]
        if len(at_min) > 1 and at_min[0][1] == at_min[1][1]:
            continue  # rank tie: leave unchanged
        replacement = at_min[0][2]
        if replacement != token:
            new_edits.append(Edit(start, end, replacement, EditKind.SPELL))
    return _rebase(prepared, new_edits)


def prepare(
    raw: str,
    store: LexiconStore,
    *,
    spell_distance1_len: int = 5,
    spell_distance2_len: int = 8,
) -> PreparedText:
    """Boundary fixing, regularization, spelling correction, in that order."""
    return correct_spelling(
        regularize_keywords(fix_boundaries(raw), store),
        store,
        distance1_len=spell_distance1_len,
        distance2_len=spell_distance2_len,
    )
