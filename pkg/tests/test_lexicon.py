"""Lexicon store: file parsing, lookup, refinement semantics."""

import pytest

from auditcoder.lexicon import (
    LexiconEntry,
    LexiconError,
    LexiconKind,
    LexiconStore,
    ModifierPolarity,
    Provenance,
    RefinementConflict,
    Sense,
    append_refinement,
    entry_from_dict,
    entry_to_dict,
    load_lexicon,
    load_store,
    parse_entry_line,
    replay_refinements,
)

PROV = Provenance(reviewer="rev-1", timestamp="2016-06-01T10:00:00")


class TestParsing:
    def test_abbreviation_line(self):
        entry = parse_entry_line(
            "NAD | | ABBREVIATION | no abnormality detected @ @ 1", source="t", lineno=1
        )
        assert entry.kind is LexiconKind.ABBREVIATION
        assert len(entry.senses) == 1
        assert entry.senses[0].expansion == "no abnormality detected"
        assert entry.senses[0].rank == 1

    def test_multi_sense_line(self):
        entry = parse_entry_line(
            "PE | | ABBREVIATION | pulmonary embolism @ chest dvt @ 1 ; "
            "physical examination @ normal exam @ 2"
        )
        assert [s.rank for s in entry.senses] == [1, 2]
        assert entry.senses[0].cues == ("chest", "dvt")

    def test_sense_without_rank_defaults_to_position(self):
        entry = parse_entry_line("NAD | | ABBREVIATION | no abnormality detected")
        assert entry.senses[0].rank == 1

    def test_domain_concept_line(self):
        entry = parse_entry_line("fracture | fractures, # | DOMAIN_CONCEPT | pathology")
        assert entry.variants == ("fractures", "#")
        assert entry.domain_tag == "pathology"

    def test_modifier_line_requires_valid_polarity(self):
        entry = parse_entry_line("no | | MODIFIER | NEGATION")
        assert entry.modifier_polarity is ModifierPolarity.NEGATION
        with pytest.raises(LexiconError, match="polarity"):
            parse_entry_line("no | | MODIFIER | SOMETIMES")

    def test_spell_target_rank_must_be_int(self):
        assert parse_entry_line("fracture | | SPELL_TARGET | 3").spell_rank == 3
        with pytest.raises(LexiconError, match="integer"):
            parse_entry_line("fracture | | SPELL_TARGET | often")

    def test_wrong_column_count(self):
        with pytest.raises(LexiconError, match="4 .*columns"):
            parse_entry_line("fracture | DOMAIN_CONCEPT")

    def test_duplicate_sense_ranks_rejected(self):
        with pytest.raises(LexiconError, match="duplicate sense ranks"):
            parse_entry_line("XX | | ABBREVIATION | one @ @ 1 ; two @ @ 1")


class TestLoading:
    def test_load_file_skips_comments_and_blanks(self, tmp_path):
        path = tmp_path / "concepts.lex"
        path.write_text(
            "# a comment, ignored\n"
            "\n"
            "fracture | fractures | DOMAIN_CONCEPT | pathology\n"
        )
        store = load_lexicon(path)
        assert len(store) == 1

    def test_kind_filter_enforced(self, tmp_path):
        path = tmp_path / "mixed.lex"
        path.write_text("no | | MODIFIER | NEGATION\n")
        load_lexicon(path, LexiconKind.MODIFIER)
        with pytest.raises(LexiconError, match="expected DOMAIN_CONCEPT"):
            load_lexicon(path, LexiconKind.DOMAIN_CONCEPT)

    def test_empty_file_gives_empty_store(self, tmp_path):
        path = tmp_path / "empty.lex"
        path.write_text("")
        assert len(load_lexicon(path)) == 0

    def test_duplicate_surface_reports_both_lines(self, tmp_path):
        path = tmp_path / "dup.lex"
        path.write_text(
            "SDH | | DOMAIN_CONCEPT | pathology\n"
            "SDH | subdural | DOMAIN_CONCEPT | pathology\n"
        )
        with pytest.raises(LexiconError) as exc:
            load_lexicon(path)
        assert "dup.lex:1" in str(exc.value)
        assert "dup.lex:2" in str(exc.value)

    def test_cross_file_duplicates_caught(self, tmp_path):
        a = tmp_path / "a.lex"
        b = tmp_path / "b.lex"
        a.write_text("SDH | | DOMAIN_CONCEPT | pathology\n")
        b.write_text("sdh | | DOMAIN_CONCEPT | pathology\n")
        with pytest.raises(LexiconError, match="duplicate"):
            load_store([a, b])


class TestLookup:
    def build(self) -> LexiconStore:
        return LexiconStore(
            [
                LexiconEntry(
                    surface="NAD",
                    kind=LexiconKind.ABBREVIATION,
                    senses=(Sense("no abnormality detected"),),
                ),
                LexiconEntry(
                    surface="superior articular facet",
                    variants=("sup art facet",),
                    kind=LexiconKind.DOMAIN_CONCEPT,
                    domain_tag="anatomy",
                ),
            ]
        )

    def test_case_insensitive(self):
        store = self.build()
        assert store.lookup("nad")[0].surface == "NAD"

    def test_absent_term_gives_empty_list(self):
        assert self.build().lookup("no such term") == []

    def test_variant_resolves_to_canonical_entry(self):
        store = self.build()
        by_variant = store.lookup("sup art facet")
        by_surface = store.lookup("superior articular facet")
        assert by_variant == by_surface
        assert by_variant[0].surface == "superior articular facet"

    def test_kind_filter(self):
        store = self.build()
        assert store.lookup("NAD", LexiconKind.DOMAIN_CONCEPT) == []

    def test_every_variant_matches_its_surface(self):
        store = self.build()
        for entry in store:
            for term in entry.all_terms():
                assert store.lookup(term, entry.kind) == [entry]


class TestRefinements:
    def base(self) -> LexiconStore:
        return LexiconStore(
            [
                LexiconEntry(surface="fracture", kind=LexiconKind.DOMAIN_CONCEPT, domain_tag="pathology"),
                LexiconEntry(
                    surface="EDH",
                    kind=LexiconKind.ABBREVIATION,
                    senses=(Sense("extradural haematoma", ("trauma",), 1),),
                ),
            ]
        )

    def test_add_fracture_symbol_variant(self):
        store = self.base()
        refined = append_refinement(
            store,
            LexiconEntry(surface="fracture", variants=("#",), kind=LexiconKind.DOMAIN_CONCEPT),
            PROV,
        )
        assert refined.lookup("#")[0].surface == "fracture"
        assert refined.version != store.version

    def test_idempotent_reapply(self):
        store = self.base()
        entry = LexiconEntry(surface="fracture", variants=("#",), kind=LexiconKind.DOMAIN_CONCEPT)
        journal: list = []
        once = append_refinement(store, entry, PROV, journal)
        twice = append_refinement(once, entry, PROV, journal)
        assert once.version == twice.version
        assert len(journal) == 2  # both attempts audited, state unchanged

    def test_second_sense_merges(self):
        store = self.base()
        refined = append_refinement(
            store,
            LexiconEntry(
                surface="EDH",
                kind=LexiconKind.ABBREVIATION,
                senses=(Sense("epidural haematoma of the spine", ("spine",), 2),),
            ),
            PROV,
        )
        entry = refined.get(LexiconKind.ABBREVIATION, "EDH")
        assert len(entry.senses) == 2

    def test_conflicting_domain_tag_rejected(self):
        store = self.base()
        with pytest.raises(RefinementConflict):
            append_refinement(
                store,
                LexiconEntry(surface="fracture", kind=LexiconKind.DOMAIN_CONCEPT, domain_tag="anatomy"),
                PROV,
            )

    def test_variant_owned_elsewhere_rejected(self):
        store = LexiconStore(
            [
                LexiconEntry(surface="right", variants=("R",), kind=LexiconKind.DOMAIN_CONCEPT),
            ]
        )
        with pytest.raises(RefinementConflict):
            append_refinement(
                store,
                LexiconEntry(surface="rhesus", variants=("R",), kind=LexiconKind.DOMAIN_CONCEPT),
                PROV,
            )

    def test_new_store_version_on_change_old_store_untouched(self):
        store = self.base()
        before = store.version
        refined = append_refinement(
            store,
            LexiconEntry(surface="SDH", kind=LexiconKind.DOMAIN_CONCEPT, domain_tag="pathology"),
            PROV,
        )
        assert store.version == before
        assert store.lookup("SDH") == []
        assert refined.lookup("SDH")

    def test_journal_replay_reproduces_version(self):
        store = self.base()
        journal: list = []
        refined = append_refinement(
            store,
            LexiconEntry(surface="fracture", variants=("#",), kind=LexiconKind.DOMAIN_CONCEPT),
            PROV,
            journal,
        )
        refined = append_refinement(
            refined,
            LexiconEntry(
                surface="EDH",
                kind=LexiconKind.ABBREVIATION,
                senses=(Sense("epidural collection", ("collection",), 2),),
            ),
            PROV,
            journal,
        )
        replayed = replay_refinements(self.base(), journal)
        assert replayed.version == refined.version

    def test_entry_dict_round_trip(self):
        entry = LexiconEntry(
            surface="PE",
            kind=LexiconKind.ABBREVIATION,
            senses=(Sense("pulmonary embolism", ("chest",), 1), Sense("physical examination", (), 2)),
        )
        assert entry_from_dict(entry_to_dict(entry)).content_key() == entry.content_key()


class TestSeedData:
    def test_packaged_lexicons_load_and_validate(self):
        from auditcoder.resources import default_store

        store = default_store()
        assert store.lookup("NAD", LexiconKind.ABBREVIATION)
        assert store.lookup("#")[0].surface == "fracture"
        assert store.lookup("sup art facet")[0].surface == "superior articular facet"
        assert store.lookup("ped vs car")[0].surface == "Ped v car"
        assert store.lookup("?", LexiconKind.MODIFIER)

    def test_same_content_same_version(self):
        from auditcoder.resources import default_store

        assert default_store().version == default_store().version
