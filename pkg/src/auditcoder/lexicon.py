"""Dictionary store for every pipeline stage.

One store holds six kinds of entries: abbreviations (with senses),
domain concepts, admission-cause phrases and keywords, modifiers, and
spelling-correction targets. Stores are immutable; expert refinements
produce a new version and are journaled so the dictionary's evolution
stays auditable.

File format, one entry per line:

    surface | variant1, variant2 | KIND | payload

Payload by kind: ABBREVIATION senses separated by `;`, each sense
`expansion @ cue1 cue2 @ rank`; DOMAIN_CONCEPT the domain tag;
MODIFIER the polarity (NEGATION or UNCERTAINTY); SPELL_TARGET the
frequency rank (1 = most frequent). Lines starting with `#` in column 1
are comments.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable


class LexiconError(ValueError):
    """Malformed lexicon line or store-level validation failure."""


class RefinementConflict(LexiconError):
    """A refinement contradicts an existing entry."""


class LexiconKind(Enum):
    ABBREVIATION = "ABBREVIATION"
    DOMAIN_CONCEPT = "DOMAIN_CONCEPT"
    ADMISSION_CAUSE_PHRASE = "ADMISSION_CAUSE_PHRASE"
    ADMISSION_CAUSE_KEYWORD = "ADMISSION_CAUSE_KEYWORD"
    MODIFIER = "MODIFIER"
    SPELL_TARGET = "SPELL_TARGET"


class ModifierPolarity(Enum):
    NEGATION = "NEGATION"
    UNCERTAINTY = "UNCERTAINTY"


def normalize_term(text: str) -> str:
    """Lowercase and collapse internal whitespace; the index key."""
    return " ".join(text.lower().split())


@dataclass(frozen=True)
class Sense:
    """One reading of an abbreviation."""

    expansion: str
    cues: tuple[str, ...] = ()
    rank: int = 1

    def __post_init__(self):
        if not self.expansion.strip():
            raise LexiconError("sense expansion is blank")
        if self.rank < 1:
            raise LexiconError(f"sense rank must be >= 1, got {self.rank}")


@dataclass(frozen=True)
class LexiconEntry:
    surface: str
    variants: tuple[str, ...] = ()
    kind: LexiconKind = LexiconKind.DOMAIN_CONCEPT
    senses: tuple[Sense, ...] = ()
    domain_tag: str = ""
    modifier_polarity: ModifierPolarity | None = None
    spell_rank: int | None = None
    # Where the entry came from, for diagnostics only.
    source: str = ""
    line: int | None = None

    def __post_init__(self):
        if not self.surface.strip():
            raise LexiconError("entry surface is blank")
        for v in self.variants:
            if not v.strip():
                raise LexiconError(f"blank variant on entry {self.surface!r}")
        if self.kind is LexiconKind.ABBREVIATION:
            if not self.senses:
                raise LexiconError(f"abbreviation {self.surface!r} has no senses")
            ranks = [s.rank for s in self.senses]
            if len(set(ranks)) != len(ranks):
                raise LexiconError(f"abbreviation {self.surface!r} has duplicate sense ranks")
        elif self.senses:
            raise LexiconError(f"{self.kind.value} entry {self.surface!r} cannot carry senses")
        if self.kind is LexiconKind.MODIFIER and self.modifier_polarity is None:
            raise LexiconError(f"modifier {self.surface!r} needs a polarity")
        if self.kind is LexiconKind.SPELL_TARGET and self.spell_rank is None:
            raise LexiconError(f"spell target {self.surface!r} needs a frequency rank")

    @property
    def surface_key(self) -> str:
        return normalize_term(self.surface)

    def all_terms(self) -> list[str]:
        return [self.surface, *self.variants]

    def content_key(self) -> tuple:
        """Everything that matters for store identity; source/line excluded."""
        return (
            self.kind.value,
            self.surface_key,
            tuple(sorted(normalize_term(v) for v in self.variants)),
            tuple(sorted((s.expansion, s.cues, s.rank) for s in self.senses)),
            self.domain_tag,
            self.modifier_polarity.value if self.modifier_polarity else None,
            self.spell_rank,
        )


@dataclass(frozen=True)
class Provenance:
    reviewer: str
    timestamp: str


class LexiconStore:
    """Immutable indexed collection of lexicon entries.

    `version` is a hash of the content, so identical stores built by
    different routes (fresh load vs journal replay) compare equal.
    """

    def __init__(self, entries: Iterable[LexiconEntry] = ()):
        self._entries: tuple[LexiconEntry, ...] = tuple(entries)
        self._by_term: dict[str, list[LexiconEntry]] = {}
        self._by_kind_surface: dict[tuple[LexiconKind, str], LexiconEntry] = {}
        for entry in self._entries:
            key = (entry.kind, entry.surface_key)
            if key in self._by_kind_surface:
                prior = self._by_kind_surface[key]
                raise LexiconError(
                    f"duplicate {entry.kind.value} entry {entry.surface!r}: "
                    f"{prior.source}:{prior.line} and {entry.source}:{entry.line}"
                )
            self._by_kind_surface[key] = entry
            for term in entry.all_terms():
                self._by_term.setdefault(normalize_term(term), []).append(entry)
        self._version = self._hash_content()

    def _hash_content(self) -> str:
        digest = hashlib.sha256()
        for key in sorted(e.content_key() for e in self._entries):
            digest.update(repr(key).encode("utf-8"))
        return digest.hexdigest()[:16]

    @property
    def version(self) -> str:
        return self._version

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def entries_of_kind(self, kind: LexiconKind) -> list[LexiconEntry]:
        return [e for e in self._entries if e.kind is kind]

    def lookup(self, term: str, kind: LexiconKind | None = None) -> list[LexiconEntry]:
        hits = self._by_term.get(normalize_term(term), [])
        if kind is not None:
            hits = [e for e in hits if e.kind is kind]
        return list(hits)

    def get(self, kind: LexiconKind, surface: str) -> LexiconEntry | None:
        return self._by_kind_surface.get((kind, normalize_term(surface)))

    def contains_term(self, term: str) -> bool:
        return normalize_term(term) in self._by_term

    def max_term_tokens(self, kind: LexiconKind | None = None) -> int:
        """Longest surface/variant length in tokens; phrase scanners use it."""
        longest = 1
        for entry in self._entries:
            if kind is not None and entry.kind is not kind:
                continue
            for term in entry.all_terms():
                longest = max(longest, len(term.split()))
        return longest


def lookup(store: LexiconStore, term: str, kind: LexiconKind | None = None) -> list[LexiconEntry]:
    return store.lookup(term, kind)


# ---------------------------------------------------------------------------
# file parsing


def parse_entry_line(line: str, *, source: str = "", lineno: int | None = None) -> LexiconEntry:
    columns = [c.strip() for c in line.split("|")]
    if len(columns) != 4:
        raise LexiconError(f"{source}:{lineno}: expected 4 |-separated columns, got {len(columns)}")
    surface, variants_col, kind_col, payload = columns
    try:
        kind = LexiconKind(kind_col)
    except ValueError:
        raise LexiconError(f"{source}:{lineno}: unknown kind {kind_col!r}") from None
    variants = tuple(v.strip() for v in variants_col.split(",") if v.strip())

    senses: tuple[Sense, ...] = ()
    domain_tag = ""
    polarity: ModifierPolarity | None = None
    spell_rank: int | None = None
    if kind is LexiconKind.ABBREVIATION:
        senses = _parse_senses(payload, source=source, lineno=lineno)
    elif kind is LexiconKind.DOMAIN_CONCEPT:
        domain_tag = payload or "concept"
    elif kind is LexiconKind.MODIFIER:
        try:
            polarity = ModifierPolarity(payload)
        except ValueError:
            raise LexiconError(
                f"{source}:{lineno}: modifier polarity must be NEGATION or "
                f"UNCERTAINTY, got {payload!r}"
            ) from None
    elif kind is LexiconKind.SPELL_TARGET:
        try:
            spell_rank = int(payload)
        except ValueError:
            raise LexiconError(f"{source}:{lineno}: spell rank must be an integer, got {payload!r}") from None
    # ADMISSION_CAUSE_* payloads are currently unused; ignore free text there.

    return LexiconEntry(
        surface=surface,
        variants=variants,
        kind=kind,
        senses=senses,
        domain_tag=domain_tag,
        modifier_polarity=polarity,
        spell_rank=spell_rank,
        source=source,
        line=lineno,
    )


def _parse_senses(payload: str, *, source: str = "", lineno: int | None = None) -> tuple[Sense, ...]:
    if not payload.strip():
        raise LexiconError(f"{source}:{lineno}: abbreviation payload is empty")
    senses = []
    for position, block in enumerate(payload.split(";"), start=1):
        parts = [p.strip() for p in block.split("@")]
        if len(parts) == 1:
            expansion, cues_text, rank_text = parts[0], "", ""
        elif len(parts) == 2:
            expansion, cues_text, rank_text = parts[0], parts[1], ""
        elif len(parts) == 3:
            expansion, cues_text, rank_text = parts
        else:
            raise LexiconError(f"{source}:{lineno}: sense block has too many '@' fields: {block!r}")
        if not expansion:
            raise LexiconError(f"{source}:{lineno}: sense {position} has no expansion")
        cues = tuple(normalize_term(c) for c in cues_text.split())
        if rank_text:
            try:
                rank = int(rank_text)
            except ValueError:
                raise LexiconError(
                    f"{source}:{lineno}: sense rank must be an integer, got {rank_text!r}"
                ) from None
        else:
            rank = position
        senses.append(Sense(expansion=expansion, cues=cues, rank=rank))
    return tuple(senses)


def load_lexicon(path: str | Path, kind: LexiconKind | None = None) -> LexiconStore:
    """Load one lexicon file into a partial store.

    When `kind` is given, every line must declare that kind; it guards
    against entries landing in the wrong file.
    """
    path = Path(path)
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip() or raw.startswith("#"):
                continue
            entry = parse_entry_line(raw.rstrip("\n"), source=path.name, lineno=lineno)
            if kind is not None and entry.kind is not kind:
                raise LexiconError(
                    f"{path.name}:{lineno}: expected {kind.value} entries, found {entry.kind.value}"
                )
            entries.append(entry)
    return LexiconStore(entries)


def load_store(paths: Iterable[str | Path]) -> LexiconStore:
    """Load several lexicon files into one store, validated together."""
    entries: list[LexiconEntry] = []
    for path in paths:
        entries.extend(load_lexicon(path))
    return LexiconStore(entries)


def load_directory(directory: str | Path) -> LexiconStore:
    """Load every .lex file under a directory (sorted for determinism)."""
    files = sorted(Path(directory).glob("*.lex"))
    if not files:
        raise LexiconError(f"no .lex files under {directory}")
    return load_store(files)


# ---------------------------------------------------------------------------
# refinements


def format_entry_line(entry: LexiconEntry) -> str:
    """Inverse of parse_entry_line: a line load_lexicon accepts back."""
    if entry.kind is LexiconKind.ABBREVIATION:
        payload = " ; ".join(
            f"{s.expansion} @ {' '.join(s.cues)} @ {s.rank}" for s in entry.senses
        )
    elif entry.kind is LexiconKind.DOMAIN_CONCEPT:
        payload = entry.domain_tag
    elif entry.kind is LexiconKind.MODIFIER:
        payload = entry.modifier_polarity.value if entry.modifier_polarity else ""
    elif entry.kind is LexiconKind.SPELL_TARGET:
        payload = str(entry.spell_rank) if entry.spell_rank is not None else ""
    else:
        payload = ""
    return f"{entry.surface} | {', '.join(entry.variants)} | {entry.kind.value} | {payload}"


def entry_to_dict(entry: LexiconEntry) -> dict:
    return {
        "surface": entry.surface,
        "variants": list(entry.variants),
        "kind": entry.kind.value,
        "senses": [
            {"expansion": s.expansion, "cues": list(s.cues), "rank": s.rank}
            for s in entry.senses
        ],
        "domain_tag": entry.domain_tag,
        "modifier_polarity": entry.modifier_polarity.value if entry.modifier_polarity else None,
        "spell_rank": entry.spell_rank,
    }


def entry_from_dict(data: dict) -> LexiconEntry:
    return LexiconEntry(
        surface=data["surface"],
        variants=tuple(data.get("variants", ())),
        kind=LexiconKind(data["kind"]),
        senses=tuple(
            Sense(expansion=s["expansion"], cues=tuple(s.get("cues", ())), rank=s.get("rank", 1))
            for s in data.get("senses", ())
        ),
        domain_tag=data.get("domain_tag", "") or "",
        modifier_polarity=(
            ModifierPolarity(data["modifier_polarity"]) if data.get("modifier_polarity") else None
        ),
        spell_rank=data.get("spell_rank"),
    )


def _merge_entry(existing: LexiconEntry, incoming: LexiconEntry) -> LexiconEntry:
    """Fold a refinement into an existing entry, or raise on contradiction."""
    if existing.kind is not incoming.kind:
        raise RefinementConflict(
            f"{incoming.surface!r}: kind {incoming.kind.value} vs existing {existing.kind.value}"
        )
    known = {normalize_term(t) for t in existing.all_terms()}
    merged_variants = list(existing.variants)
    for v in incoming.variants:
        if normalize_term(v) not in known:
            merged_variants.append(v)
            known.add(normalize_term(v))

    merged_senses = list(existing.senses)
    by_expansion = {normalize_term(s.expansion): s for s in existing.senses}
    used_ranks = {s.rank for s in existing.senses}
    for sense in incoming.senses:
        prior = by_expansion.get(normalize_term(sense.expansion))
        if prior is not None:
            if prior.rank != sense.rank and sense.rank != 1:
                raise RefinementConflict(
                    f"{incoming.surface!r}: sense {sense.expansion!r} rank "
                    f"{sense.rank} vs existing rank {prior.rank}"
                )
            if set(sense.cues) - set(prior.cues):
                merged = replace(prior, cues=tuple(dict.fromkeys((*prior.cues, *sense.cues))))
                merged_senses[merged_senses.index(prior)] = merged
                by_expansion[normalize_term(sense.expansion)] = merged
            continue
        rank = sense.rank
        if rank in used_ranks:
            rank = max(used_ranks) + 1
            sense = replace(sense, rank=rank)
        used_ranks.add(rank)
        merged_senses.append(sense)
        by_expansion[normalize_term(sense.expansion)] = sense

    if incoming.domain_tag and existing.domain_tag and incoming.domain_tag != existing.domain_tag:
        raise RefinementConflict(
            f"{incoming.surface!r}: domain tag {incoming.domain_tag!r} vs "
            f"existing {existing.domain_tag!r}"
        )
    if (
        incoming.modifier_polarity
        and existing.modifier_polarity
        and incoming.modifier_polarity is not existing.modifier_polarity
    ):
        raise RefinementConflict(
            f"{incoming.surface!r}: polarity {incoming.modifier_polarity.value} vs "
            f"existing {existing.modifier_polarity.value}"
        )
    if (
        incoming.spell_rank is not None
        and existing.spell_rank is not None
        and incoming.spell_rank != existing.spell_rank
    ):
        raise RefinementConflict(
            f"{incoming.surface!r}: spell rank {incoming.spell_rank} vs "
            f"existing {existing.spell_rank}"
        )

    return replace(
        existing,
        variants=tuple(merged_variants),
        senses=tuple(merged_senses),
        domain_tag=existing.domain_tag or incoming.domain_tag,
        modifier_polarity=existing.modifier_polarity or incoming.modifier_polarity,
        spell_rank=existing.spell_rank if existing.spell_rank is not None else incoming.spell_rank,
    )


def append_refinement(
    store: LexiconStore,
    entry: LexiconEntry,
    provenance: Provenance,
    journal: list | None = None,
) -> LexiconStore:
    """Apply an expert refinement, returning the resulting store version.

    Identical refinements are no-ops that still get journaled (the journal
    is the audit trail, not the state). New surfaces are added; existing
    surfaces are merged (extra variants, extra senses). Contradictions
    raise RefinementConflict and journal nothing.
    """
    existing = store.get(entry.kind, entry.surface)
    if existing is None:
        # A variant may not already belong to a different entry of the kind.
        for term in entry.all_terms():
            for hit in store.lookup(term, entry.kind):
                raise RefinementConflict(
                    f"term {term!r} already belongs to {hit.kind.value} entry {hit.surface!r}"
                )
        new_entries = (*store, entry)
        result = LexiconStore(new_entries)
    else:
        merged = _merge_entry(existing, entry)
        if merged.content_key() == existing.content_key():
            result = store  # idempotent no-op, same version
        else:
            result = LexiconStore(merged if e is existing else e for e in store)

    if journal is not None:
        journal.append(
            {
                "reviewer": provenance.reviewer,
                "timestamp": provenance.timestamp,
                "entry": entry_to_dict(entry),
                "store_version": result.version,
            }
        )
    return result


def replay_refinements(store: LexiconStore, records: Iterable[dict]) -> LexiconStore:
    """Rebuild the current store version from a journal."""
    for record in records:
        store = append_refinement(
            store,
            entry_from_dict(record["entry"]),
            Provenance(record.get("reviewer", ""), record.get("timestamp", "")),
        )
    return store


def read_journal(path: str | Path) -> list[dict]:
    records = []
    path = Path(path)
    if not path.exists():
        return records
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records


def write_journal_line(path: str | Path, record: dict) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, sort_keys=True) + "\n")
