"""End-to-end concept identification and per-record classification."""

import datetime

from hypothesis import given, settings
from hypothesis import strategies as st

from auditcoder.concepts import (
    FUNCTION_WORD,
    ClassificationResult,
    ConceptTag,
    TagKind,
    classify_corpus,
    classify_note,
    identify_admission_cause,
    identify_audit_categories,
    identify_domain_concepts,
    read_results,
    write_results,
)
from auditcoder.lexicon import LexiconEntry, LexiconKind, LexiconStore
from auditcoder.preparation import prepare
from auditcoder.preprocessing import annotate
from auditcoder.records import AdmissionRecord
from auditcoder.resources import default_store, rules_path
from auditcoder.rules import compile_rules

STORE = default_store()
RULES = compile_rules(rules_path())
TABLE_NOTE = "Ped v car left frontal depressed fracture, GCS 3, ETOH"

DELIMS = {",", ";", ".", "\n"}


def note_for(text: str):
    return annotate(prepare(text, STORE), STORE)


def record_for(text: str, admission_id: str = "a1") -> AdmissionRecord:
    return AdmissionRecord(
        admission_id=admission_id,
        date=datetime.date(2020, 6, 15),
        diagnosis=None,
        note=text,
        raw_diagnosis="",
    )


def kinds_by_token(result: ClassificationResult) -> dict[int, TagKind]:
    mapping: dict[int, TagKind] = {}
    for tag in result.tags:
        for i in range(tag.start, tag.end):
            assert i not in mapping, f"token {i} tagged twice"
            mapping[i] = tag.kind
    return mapping


class TestAdmissionCause:
    def test_table_note_opens_with_mechanism(self):
        note = note_for(TABLE_NOTE)
        tags = identify_admission_cause(note, STORE)
        assert len(tags) == 1
        assert (tags[0].start, tags[0].end) == (0, 3)
        assert tags[0].payload == "Ped v car"
        assert note.masked_positions == {0, 1, 2}

    def test_no_cause_terms(self):
        note = note_for("left frontal depressed fracture")
        assert identify_admission_cause(note, STORE) == []
        assert note.masked_positions == set()

    def test_phrase_beats_contained_keyword(self):
        store = LexiconStore(
            [
                LexiconEntry(
                    kind=LexiconKind.ADMISSION_CAUSE_PHRASE,
                    surface="fall from ladder",
                ),
                LexiconEntry(kind=LexiconKind.ADMISSION_CAUSE_KEYWORD, surface="fall"),
            ]
        )
        note = annotate(prepare("fall from ladder at work", store), store)
        tags = identify_admission_cause(note, store)
        assert len(tags) == 1
        assert (tags[0].start, tags[0].end) == (0, 3)
        assert tags[0].payload == "fall from ladder"

    def test_seed_phrase_beats_seed_keyword(self):
        note = note_for("mechanical fall at home, SDH")
        tags = identify_admission_cause(note, STORE)
        assert [t.payload for t in tags] == ["mechanical fall"]

    def test_keyword_alone(self):
        note = note_for("assault with bat")
        tags = identify_admission_cause(note, STORE)
        assert [t.payload for t in tags] == ["assault"]

    def test_regularized_variant_found(self):
        # "ped vs car" regularizes to the canonical surface during
        # preparation, so the scan sees the canonical form.
        note = note_for("ped vs car, SDH")
        tags = identify_admission_cause(note, STORE)
        assert tags and tags[0].payload == "Ped v car"


class TestDomainConcepts:
    def test_laterality_and_anatomy(self):
        note = note_for("left frontal")
        tags = identify_domain_concepts(note, STORE)
        assert [t.payload for t in tags] == ["laterality", "anatomy"]

    def test_etoh_substance(self):
        note = note_for("ETOH")
        tags = identify_domain_concepts(note, STORE)
        assert tags[0].payload == "substance"

    def test_unknown_token_unresolved(self):
        note = note_for("zzqx")
        tags = identify_domain_concepts(note, STORE)
        assert tags[0].kind is TagKind.UNRESOLVED
        assert tags[0].payload == "zzqx"

    def test_stop_word_is_function_word(self):
        note = note_for("with zzqx")
        tags = identify_domain_concepts(note, STORE)
        assert tags[0].kind is TagKind.DOMAIN_CONCEPT
        assert tags[0].payload == FUNCTION_WORD
        assert tags[1].kind is TagKind.UNRESOLVED

    def test_multiword_concept_single_span(self):
        note = note_for("superior articular facet")
        tags = identify_domain_concepts(note, STORE)
        assert len(tags) == 1
        assert (tags[0].start, tags[0].end) == (0, 3)
        assert tags[0].payload == "anatomy"

    def test_claimed_tokens_skipped(self):
        note = note_for("left frontal")
        tags = identify_domain_concepts(note, STORE, claimed={0})
        assert [(t.start, t.payload) for t in tags] == [(1, "anatomy")]


class TestClassifyNote:
    def test_table_record(self):
        result = classify_note(record_for(TABLE_NOTE), STORE, RULES)
        assert result.category_texts() == {"CRANIAL:TRAUMA:SKULL FRACTURE"}
        assert [(t.start, t.end, t.payload) for t in result.cause_spans] == [(0, 3, "Ped v car")]
        measurements = [t for t in result.tags if t.kind is TagKind.MEASUREMENT]
        assert any(t.payload == "GCS_SCORE=3" for t in measurements)
        assert any(t.payload == "substance" for t in result.domain_tags)
        assert result.versions == {"lexicon": STORE.version, "ruleset": RULES.version}

    def test_empty_note(self):
        result = classify_note(record_for(""), STORE, RULES)
        assert result.categories == ()
        assert result.tags == ()

    def test_variant_equivalence(self):
        a = classify_note(record_for("C7 right superior articular facet #"), STORE, RULES)
        b = classify_note(record_for("#R C7 sup art facet"), STORE, RULES)
        assert a.category_texts() == b.category_texts()
        assert a.category_texts() == {"SPINE:TRAUMA:FRACTURE"}

    def test_every_content_token_tagged_once(self):
        for text in (
            TABLE_NOTE,
            "fall, no SDH; ? C5/6 #, zzqx 10 mg",
            "#R C7 sup art facet",
            "NAD",
        ):
            result = classify_note(record_for(text), STORE, RULES)
            mapping = kinds_by_token(result)
            note = result.note
            for i, token in enumerate(note.tokens):
                if token.text in DELIMS:
                    assert i not in mapping
                else:
                    assert i in mapping, f"token {i} ({token.text!r}) untagged in {text!r}"

    def test_cause_tokens_never_audit_evidence(self):
        result = classify_note(record_for("fall, SDH after fall"), STORE, RULES)
        cause = {i for t in result.cause_spans for i in range(t.start, t.end)}
        evidence = {
            i
            for t in result.tags
            if t.kind is TagKind.AUDIT_EVIDENCE
            for i in range(t.start, t.end)
        }
        assert cause
        assert not cause & evidence

    def test_masked_cause_still_counts_for_note_scope_requires(self):
        # The mechanism phrase cannot trigger a category by itself but may
        # support one triggered elsewhere in the note.
        note = note_for("fall, SDH")
        identify_admission_cause(note, STORE)
        assert "CRANIAL:TRAUMA:SDH" in {
            m.category.text for m in identify_audit_categories(note, RULES)
        }

    def test_modifier_and_measurement_tags_present(self):
        result = classify_note(record_for("? SAH, GCS 12"), STORE, RULES)
        kinds = {t.kind for t in result.tags}
        assert TagKind.MODIFIER in kinds
        assert TagKind.MEASUREMENT in kinds

    def test_reproducible(self):
        record = record_for(TABLE_NOTE)
        first = classify_note(record, STORE, RULES)
        second = classify_note(record, STORE, RULES)
        assert first.to_dict() == second.to_dict()

    def test_record_flag_carried(self):
        record = AdmissionRecord(
            admission_id="a9",
            date=None,
            diagnosis=None,
            note="SDH",
            raw_diagnosis="bogus",
            flag="unparseable diagnosis code 'bogus'",
        )
        result = classify_note(record, STORE, RULES)
        assert any("bogus" in f for f in result.flags)

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.sampled_from(
                "fall SDH no ? C7 fracture skull left GCS 3 zzqx with , ; . # NAD ETOH".split()
                + [","]
            ),
            min_size=0,
            max_size=12,
        )
    )
    def test_coverage_property(self, words):
        text = " ".join(words)
        result = classify_note(record_for(text), STORE, RULES)
        mapping = kinds_by_token(result)
        for i, token in enumerate(result.note.tokens):
            assert (i in mapping) == (token.text not in DELIMS)


class TestCorpus:
    def records(self):
        return [
            record_for(TABLE_NOTE, "r1"),
            record_for("", "r2"),
            record_for("C7 facet fracture", "r3"),
        ]

    def test_order_preserved(self):
        results, summary = classify_corpus(self.records(), STORE, RULES)
        assert [r.admission_id for r in results] == ["r1", "r2", "r3"]
        assert summary["records"] == 3
        assert summary["failed"] == []

    def test_empty_note_isolated(self):
        results, _ = classify_corpus(self.records(), STORE, RULES)
        assert results[1].categories == ()
        assert results[0].category_texts() == {"CRANIAL:TRAUMA:SKULL FRACTURE"}
        assert results[2].category_texts() == {"SPINE:TRAUMA:FRACTURE"}

    def test_summary_counts(self):
        results, summary = classify_corpus(self.records(), STORE, RULES)
        assert summary["category_counts"]["CRANIAL:TRAUMA:SKULL FRACTURE"] == 1
        assert summary["category_counts"]["SPINE:TRAUMA:FRACTURE"] == 1


class TestResultsFile:
    def test_round_trip_fixed_fields(self, tmp_path):
        results, _ = classify_corpus(
            [record_for(TABLE_NOTE, "r1"), record_for("? SAH", "r2")], STORE, RULES
        )
        path = tmp_path / "results.jsonl"
        write_results(results, path)
        rows = read_results(path)
        assert len(rows) == 2
        for row in rows:
            assert set(row) == {
                "admission_id",
                "categories",
                "flags",
                "cause_spans",
                "domain_tags",
                "unresolved",
                "versions",
            }
        assert rows[0]["admission_id"] == "r1"
        assert rows[0]["categories"][0]["category"] == "CRANIAL:TRAUMA:SKULL FRACTURE"
        assert rows[0]["cause_spans"][0]["phrase"] == "Ped v car"
        assert rows[1]["categories"][0]["flags"] == ["UNCERTAIN"]
