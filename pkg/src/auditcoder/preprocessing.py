"""Stage 2: tokenization, sentence structuring, modifiers, measurements,
and abbreviation disambiguation.

Tokens carry exact offsets into the prepared text. Sentences break at
newlines, semicolons, and sentence periods; commas partition a sentence
into clauses, which bound modifier scope. Multi-sense abbreviations are
resolved by cue counting (sentence first, then whole note, then frequency
rank) and the basis of each resolution is recorded.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .lexicon import LexiconKind, LexiconStore, ModifierPolarity, normalize_term
from .preparation import PreparedText


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int
    has_digit: bool
    all_caps: bool
    is_punct: bool
    is_uncertainty_marker: bool
    is_fracture_symbol: bool


@dataclass(frozen=True)
class Sentence:
    start: int  # token index, inclusive
    end: int  # token index, exclusive
    clauses: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ModifierSpan:
    start: int  # token index of the trigger, inclusive
    end: int  # exclusive
    polarity: ModifierPolarity
    scope: tuple[int, int]  # forward token range; empty when retrospective
    retrospective: bool = False
    retro_scope: tuple[int, int] | None = None  # preceding clause/sentence range


class MeasurementKind(Enum):
    GCS_SCORE = "GCS_SCORE"
    VERTEBRAL_LEVEL = "VERTEBRAL_LEVEL"
    DOSE = "DOSE"
    SIZE = "SIZE"


@dataclass(frozen=True)
class MeasurementSpan:
    start: int  # token index, inclusive
    end: int  # exclusive
    kind: MeasurementKind
    value: str  # parsed numeric text or level descriptor, e.g. "3", "C5-C6"


class ResolutionBasis(Enum):
    SENTENCE_CUE = "SENTENCE_CUE"
    NOTE_CUE = "NOTE_CUE"
    FREQUENCY = "FREQUENCY"


@dataclass(frozen=True)
class SenseResolution:
    surface: str
    expansion: str
    rank: int
    basis: ResolutionBasis


@dataclass
class AnnotatedNote:
    prepared: PreparedText
    tokens: list[Token]
    sentences: list[Sentence]
    modifiers: list[ModifierSpan] = field(default_factory=list)
    measurements: list[MeasurementSpan] = field(default_factory=list)
    sense_resolutions: dict[int, SenseResolution] = field(default_factory=dict)
    concept_tags: list = field(default_factory=list)  # filled by concept identification
    masked_positions: set[int] = field(default_factory=set)  # admission-cause tokens
    diagnostics: list[str] = field(default_factory=list)

    def effective_text(self, index: int) -> str:
        """Token text with any abbreviation resolution applied."""
        resolution = self.sense_resolutions.get(index)
        return resolution.expansion if resolution else self.tokens[index].text

    def clause_of(self, index: int) -> tuple[int, int] | None:
        for sentence in self.sentences:
            if sentence.start <= index < sentence.end:
                for clause in sentence.clauses:
                    if clause[0] <= index < clause[1]:
                        return clause
        return None

    def negated_positions(self) -> set[int]:
        return self._governed(ModifierPolarity.NEGATION)

    def uncertain_positions(self) -> set[int]:
        return self._governed(ModifierPolarity.UNCERTAINTY)

    def _governed(self, polarity: ModifierPolarity) -> set[int]:
        positions: set[int] = set()
        for span in self.modifiers:
            if span.polarity is not polarity:
                continue
            positions.update(range(span.scope[0], span.scope[1]))
            if span.retrospective and span.retro_scope:
                positions.update(range(span.retro_scope[0], span.retro_scope[1]))
        return positions


# ---------------------------------------------------------------------------
# tokenization

_TOKEN_RE = re.compile(r"\n|[^\s]+")


def tokenize(prepared: PreparedText) -> list[Token]:
    """Whitespace-delimited tokens with exact offsets. Newlines are kept as
    their own tokens because they act as sentence breaks."""
    tokens = []
    for match in _TOKEN_RE.finditer(prepared.text):
        text = match.group()
        tokens.append(
            Token(
                text=text,
                start=match.start(),
                end=match.end(),
                has_digit=any(c.isdigit() for c in text),
                all_caps=text.isupper(),
                is_punct=not any(c.isalnum() for c in text),
                is_uncertainty_marker=text == "?",
                is_fracture_symbol=text == "#",
            )
        )
    return tokens


# ---------------------------------------------------------------------------
# sentence and clause structure

_SENTENCE_BREAKS = {";", "\n"}
_CLAUSE_DELIMS = {",", ";", ".", "\n"}


def _is_sentence_period(tokens: list[Token], index: int) -> bool:
    """A period ends a sentence unless it follows an abbreviation-like token
    (single letter, or a token that itself contains periods)."""
    if index == 0:
        return False
    prev = tokens[index - 1].text
    if len(prev) == 1 and prev.isalpha():
        return False
    if "." in prev:
        return False
    return True


def segment_sentences(tokens: list[Token]) -> list[Sentence]:
    if not tokens:
        return []
    breaks: list[int] = []  # index AFTER which a sentence ends
    for i, token in enumerate(tokens):
        if token.text in _SENTENCE_BREAKS:
            breaks.append(i)
        elif token.text == "." and _is_sentence_period(tokens, i):
            breaks.append(i)
    ranges: list[tuple[int, int]] = []
    start = 0
    for b in breaks:
        ranges.append((start, b + 1))
        start = b + 1
    if start < len(tokens):
        ranges.append((start, len(tokens)))

    sentences: list[Sentence] = []
    for s, e in ranges:
        clauses = _clauses_for(tokens, s, e)
        if not clauses and sentences:
            # Delimiter-only run: fold into the previous sentence's range.
            prev = sentences.pop()
            sentences.append(Sentence(prev.start, e, prev.clauses))
            continue
        sentences.append(Sentence(s, e, clauses))
    return sentences


def _clauses_for(tokens: list[Token], start: int, end: int) -> tuple[tuple[int, int], ...]:
    clauses = []
    clause_start: int | None = None
    for i in range(start, end):
        if tokens[i].text in _CLAUSE_DELIMS:
            if clause_start is not None:
                clauses.append((clause_start, i))
                clause_start = None
        elif clause_start is None:
            clause_start = i
    if clause_start is not None:
        clauses.append((clause_start, end))
    return tuple(clauses)


# ---------------------------------------------------------------------------
# modifiers

_FORWARD_WINDOW = 6


def identify_modifiers(
    note: AnnotatedNote, store: LexiconStore, window: int = _FORWARD_WINDOW
) -> list[ModifierSpan]:
    """Match MODIFIER lexicon triggers and compute their scopes.

    Scope runs forward to min(clause end, trigger + window tokens); the
    `?` marker scopes to the clause end. A trigger with an empty forward
    scope is retrospective: it governs the previous clause in its
    sentence, or failing that the whole previous sentence.
    """
    tokens = note.tokens
    max_len = store.max_term_tokens(LexiconKind.MODIFIER)
    spans: list[ModifierSpan] = []
    for s_index, sentence in enumerate(note.sentences):
        for clause in sentence.clauses:
            i = clause[0]
            while i < clause[1]:
                matched_len = 0
                entry = None
                for n in range(min(max_len, clause[1] - i), 0, -1):
                    phrase = " ".join(t.text for t in tokens[i : i + n])
                    hits = store.lookup(phrase, LexiconKind.MODIFIER)
                    if hits:
                        matched_len = n
                        entry = hits[0]
                        break
                if entry is None:
                    i += 1
                    continue
                trigger_end = i + matched_len
                if tokens[i].is_uncertainty_marker and matched_len == 1:
                    scope = (trigger_end, clause[1])
                else:
                    scope = (trigger_end, min(clause[1], trigger_end + window))
                retrospective = scope[0] >= scope[1]
                retro_scope = None
                if retrospective:
                    scope = (trigger_end, trigger_end)
                    retro_scope = _previous_scope(note, s_index, clause)
                spans.append(
                    ModifierSpan(
                        start=i,
                        end=trigger_end,
                        polarity=entry.modifier_polarity,
                        scope=scope,
                        retrospective=True if retrospective else False,
                        retro_scope=retro_scope,
                    )
                )
                i = trigger_end
    return spans


def _previous_scope(
    note: AnnotatedNote, sentence_index: int, clause: tuple[int, int]
) -> tuple[int, int] | None:
    sentence = note.sentences[sentence_index]
    previous = [c for c in sentence.clauses if c[1] <= clause[0]]
    if previous:
        return previous[-1]
    if sentence_index > 0:
        prev_sentence = note.sentences[sentence_index - 1]
        if prev_sentence.clauses:
            return (prev_sentence.clauses[0][0], prev_sentence.clauses[-1][1])
    return None


# ---------------------------------------------------------------------------
# measurements

_VERTEBRAL_RE = re.compile(r"^([CTLS])(\d{1,2})(?:[-/]([CTLS]?)(\d{1,2}))?$", re.IGNORECASE)
_LEVEL_BOUNDS = {"C": 7, "T": 12, "L": 5, "S": 5}
_NUMBER_RE = re.compile(r"^\d+(?:\.\d+)?$")
_DOSE_UNITS = {"mg", "g", "mcg", "ug", "ml", "mmol", "unit", "units"}
_SIZE_UNITS = {"mm", "cm"}
_INLINE_DOSE_RE = re.compile(r"^(\d+(?:\.\d+)?)(mg|g|mcg|ug|ml|mmol|units?)$", re.IGNORECASE)
_INLINE_SIZE_RE = re.compile(r"^(\d+(?:\.\d+)?)(mm|cm)$", re.IGNORECASE)

GCS_MIN, GCS_MAX = 3, 15


def _vertebral_value(match: re.Match, diagnostics: list[str], text: str) -> str | None:
    first_region = match.group(1).upper()
    first_level = int(match.group(2))
    if first_level < 1 or first_level > _LEVEL_BOUNDS[first_region]:
        diagnostics.append(f"vertebral level out of bounds: {text}")
        return None
    if match.group(4) is None:
        return f"{first_region}{first_level}"
    second_region = (match.group(3) or first_region).upper()
    second_level = int(match.group(4))
    if second_level < 1 or second_level > _LEVEL_BOUNDS[second_region]:
        diagnostics.append(f"vertebral level out of bounds: {text}")
        return None
    return f"{first_region}{first_level}-{second_region}{second_level}"


def identify_measurements(note: AnnotatedNote) -> list[MeasurementSpan]:
    """Pattern-match GCS scores, vertebral levels, doses, and sizes.
    Out-of-bounds values produce a diagnostic instead of a span."""
    tokens = note.tokens
    spans: list[MeasurementSpan] = []
    taken: set[int] = set()
    for i, token in enumerate(tokens):
        if i in taken:
            continue
        if token.text.upper() == "GCS":
            j = i + 1
            if j < len(tokens) and tokens[j].text.lower() == "of":
                j += 1
            if j < len(tokens) and tokens[j].text.isdigit():
                value = int(tokens[j].text)
                if GCS_MIN <= value <= GCS_MAX:
                    spans.append(MeasurementSpan(i, j + 1, MeasurementKind.GCS_SCORE, str(value)))
                    taken.update(range(i, j + 1))
                else:
                    note.diagnostics.append(f"GCS score out of bounds: {tokens[j].text}")
            continue
        match = _VERTEBRAL_RE.match(token.text)
        if match and token.has_digit:
            value = _vertebral_value(match, note.diagnostics, token.text)
            if value is not None:
                spans.append(MeasurementSpan(i, i + 1, MeasurementKind.VERTEBRAL_LEVEL, value))
                taken.add(i)
            continue
        inline = _INLINE_SIZE_RE.match(token.text)
        if inline:
            spans.append(MeasurementSpan(i, i + 1, MeasurementKind.SIZE, inline.group(1)))
            continue
        inline = _INLINE_DOSE_RE.match(token.text)
        if inline:
            spans.append(MeasurementSpan(i, i + 1, MeasurementKind.DOSE, inline.group(1)))
            continue
        if _NUMBER_RE.match(token.text) and i + 1 < len(tokens):
            unit = tokens[i + 1].text.lower()
            if unit in _SIZE_UNITS:
                spans.append(MeasurementSpan(i, i + 2, MeasurementKind.SIZE, token.text))
                taken.update((i, i + 1))
            elif unit in _DOSE_UNITS:
                spans.append(MeasurementSpan(i, i + 2, MeasurementKind.DOSE, token.text))
                taken.update((i, i + 1))
    return spans


def vertebral_levels(span: MeasurementSpan) -> list[str]:
    """Expand a VERTEBRAL_LEVEL span to the individual levels it covers."""
    if span.kind is not MeasurementKind.VERTEBRAL_LEVEL:
        return []
    if "-" not in span.value:
        return [span.value]
    first, second = span.value.split("-")
    region, lo = first[0], int(first[1:])
    hi = int(second[1:])
    if second[0] != region or hi < lo:
        return [first, second]
    return [f"{region}{n}" for n in range(lo, hi + 1)]


# ---------------------------------------------------------------------------
# abbreviation disambiguation


def _cue_counts(note: AnnotatedNote, cues: tuple[str, ...], token_range: range, skip: int) -> int:
    if not cues:
        return 0
    cue_set = set(cues)
    count = 0
    for j in token_range:
        if j == skip:
            continue
        if normalize_term(note.tokens[j].text) in cue_set:
            count += 1
    return count


def disambiguate_abbreviations(note: AnnotatedNote, store: LexiconStore) -> AnnotatedNote:
    """Resolve each abbreviation token to one sense.

    Senses are scored by cue occurrences in the same sentence; a tie is
    re-scored over the whole note; a remaining tie falls to the most
    frequent sense (lowest rank). The basis of every decision is recorded.
    """
    for sentence in note.sentences:
        for i in range(sentence.start, sentence.end):
            token = note.tokens[i]
            if token.is_punct:
                continue
            hits = store.lookup(token.text, LexiconKind.ABBREVIATION)
            if not hits:
                continue
            entry = hits[0]
            if len(hits) > 1:
                exact = [e for e in hits if e.surface_key == normalize_term(token.text)]
                if exact:
                    entry = exact[0]
            senses = sorted(entry.senses, key=lambda s: s.rank)
            if len(senses) == 1:
                chosen, basis = senses[0], ResolutionBasis.FREQUENCY
            else:
                sentence_scores = [
                    _cue_counts(note, s.cues, range(sentence.start, sentence.end), i)
                    for s in senses
                ]
                chosen, basis = _pick(senses, sentence_scores, ResolutionBasis.SENTENCE_CUE)
                if chosen is None:
                    note_scores = [
                        _cue_counts(note, s.cues, range(0, len(note.tokens)), i) for s in senses
                    ]
                    chosen, basis = _pick(senses, note_scores, ResolutionBasis.NOTE_CUE)
                if chosen is None:
                    chosen, basis = senses[0], ResolutionBasis.FREQUENCY
            note.sense_resolutions[i] = SenseResolution(
                surface=entry.surface,
                expansion=chosen.expansion,
                rank=chosen.rank,
                basis=basis,
            )
    return note


def _pick(senses, scores, basis):
    best = max(scores)
    if best > 0 and scores.count(best) == 1:
        return senses[scores.index(best)], basis
    return None, None


# ---------------------------------------------------------------------------
# one-shot annotation


def annotate(
    prepared: PreparedText, store: LexiconStore, *, modifier_window: int = _FORWARD_WINDOW
) -> AnnotatedNote:
    """Run the full pre-processing stage over prepared text."""
    tokens = tokenize(prepared)
    note = AnnotatedNote(prepared=prepared, tokens=tokens, sentences=segment_sentences(tokens))
    note.modifiers = identify_modifiers(note, store, modifier_window)
    note.measurements = identify_measurements(note)
    return disambiguate_abbreviations(note, store)
