"""Boundary fixing, keyword regularization, spell correction, edit log."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from auditcoder.lexicon import LexiconKind
from auditcoder.preparation import (
    EditKind,
    apply_edits,
    correct_spelling,
    fix_boundaries,
    osa_distance,
    prepare,
    regularize_keywords,
)
from auditcoder.resources import default_store

STORE = default_store()

TABLE_NOTE = "Ped v car left frontal depressed fracture, GCS 3, ETOH"


class TestBoundaries:
    def test_uncertainty_prefix_split(self):
        out = fix_boundaries("?SAH")
        assert out.text == "? SAH"
        assert len(out.edits) == 1
        assert out.edits[0].kind is EditKind.BOUNDARY

    def test_fracture_symbol_isolated(self):
        assert fix_boundaries("#R C7 sup art facet").text == "# R C7 sup art facet"

    def test_empty_input(self):
        out = fix_boundaries("")
        assert out.text == ""
        assert out.edits == ()

    def test_repeated_markers(self):
        assert fix_boundaries("?SAH ?contusions").text == "? SAH ? contusions"

    def test_comma_separation(self):
        assert (
            fix_boundaries(TABLE_NOTE).text
            == "Ped v car left frontal depressed fracture , GCS 3 , ETOH"
        )

    @pytest.mark.parametrize("shape", ["L4-5", "C5/6", "T12", "C7", "3.5", "GCS 3"])
    def test_protected_shapes_survive(self, shape):
        assert fix_boundaries(shape).text == shape

    def test_trailing_symbol_isolated(self):
        assert fix_boundaries("C7 facet#").text == "C7 facet #"

    def test_parens_and_colons_split(self):
        assert fix_boundaries("(L) frontal: SDH").text == "( L ) frontal : SDH"

    def test_newlines_preserved(self):
        assert fix_boundaries("no SDH\nfall at home").text == "no SDH\nfall at home"


class TestRegularization:
    def run(self, raw: str) -> str:
        return regularize_keywords(fix_boundaries(raw), STORE).text

    def test_variant_to_canonical(self):
        assert self.run("sup art facet") == "superior articular facet"

    def test_single_sense_abbreviation_expands(self):
        assert self.run("NAD") == "no abnormality detected"

    def test_multi_sense_abbreviation_untouched(self):
        assert self.run("MS relapse") == "MS relapse"

    def test_edit_kinds_recorded(self):
        out = regularize_keywords(fix_boundaries("NAD with # noted"), STORE)
        kinds = {e.kind for e in out.edits}
        assert EditKind.EXPAND in kinds
        assert EditKind.REGULARIZE in kinds

    def test_canonical_case_left_alone(self):
        # A surface hit that differs only by case is not rewritten.
        assert self.run("Fracture") == "Fracture"
        assert self.run("etoh") == "etoh"


class TestSpelling:
    def run(self, raw: str) -> str:
        return prepare(raw, STORE).text

    def test_unique_candidate_oracle_then_correction(self):
        # Oracle: brute-force every spell target within distance 1 of the
        # misspelling, proving uniqueness before asserting the correction.
        targets = STORE.entries_of_kind(LexiconKind.SPELL_TARGET)
        hits = [t.surface for t in targets if osa_distance("fractre", t.surface_key, 2) <= 1]
        assert hits == ["fracture"]
        assert self.run("fractre displaced") == "fracture displaced"

    def test_uppercase_and_digit_tokens_untouched(self):
        assert self.run("GCS") == "GCS"
        assert self.run("C7") == "C7"

    def test_short_tokens_untouched(self):
        assert self.run("fals") == "fals"  # length 4: below correction floor

    def test_lexicon_tokens_untouched(self):
        # 'frontal' is a domain concept; same-spelled input must never move.
        assert self.run("frontal") == "frontal"

    def test_distance_two_needs_length_eight(self):
        # 'stenosi' (7 chars) is distance 1 from 'stenosis': corrected.
        # 'stenoi' (6 chars) is distance 2: left alone at that length.
        assert self.run("stenosi") == "stenosis"
        assert self.run("stenoi") == "stenoi"

    def test_distance_two_corrected_at_length_eight(self):
        assert osa_distance("hydrcephalus", "hydrocephalus", 2) == 1
        assert self.run("hydrcephlus") == "hydrocephalus"  # len 11, distance 2

    def test_transposition_counts_as_one(self):
        assert osa_distance("fracutre", "fracture", 2) == 1
        assert self.run("fracutre noted") == "fracture noted"


class TestPrepare:
    def test_table_note_prepared(self):
        out = prepare(TABLE_NOTE, STORE)
        assert out.text == "Ped v car left frontal depressed fracture , GCS 3 , ETOH"
        assert not [e for e in out.edits if e.kind is EditKind.SPELL]

    def test_edit_replay_reproduces_text(self):
        raw = "?SAH, fractre of C7 facet#, NAD"
        out = prepare(raw, STORE)
        assert apply_edits(raw, out.edits) == out.text

    def test_idempotent_on_table_note(self):
        once = prepare(TABLE_NOTE, STORE)
        twice = prepare(once.text, STORE)
        assert twice.text == once.text
        assert twice.edits == ()

    def test_all_edit_kinds_anchored_in_raw(self):
        raw = "?SAH, fractre of C7 facet#, NAD"
        out = prepare(raw, STORE)
        for edit in out.edits:
            assert 0 <= edit.start <= edit.end <= len(raw)
        starts = [e.start for e in out.edits]
        assert starts == sorted(starts)
        for a, b in zip(out.edits, out.edits[1:]):
            assert a.end <= b.start


# A vocabulary that exercises every preparation path: markers, protected
# shapes, lexicon variants, misspellings, punctuation glue.
_WORDS = st.sampled_from(
    [
        "?SAH", "fractre", "NAD", "sup", "art", "facet", "C5/6", "L4-5", "GCS",
        "3", "3.5", "fracture,", "no", "SDH;", "(L)", "#R", "C7", "etoh",
        "Ped", "v", "car", "hydrcephlus", "MS", "relapse", "a", "on",
    ]
)


@st.composite
def note_text(draw):
    words = draw(st.lists(_WORDS, min_size=0, max_size=12))
    sep = draw(st.sampled_from([" ", " ", " ", "\n"]))
    return sep.join(words)


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(note_text())
    def test_idempotence(self, raw):
        once = prepare(raw, STORE)
        twice = prepare(once.text, STORE)
        assert twice.text == once.text
        assert twice.edits == ()

    @settings(max_examples=200, deadline=None)
    @given(note_text())
    def test_replay_soundness(self, raw):
        out = prepare(raw, STORE)
        assert apply_edits(raw, out.edits) == out.text

    @settings(max_examples=200, deadline=None)
    @given(st.text(max_size=60))
    def test_replay_soundness_arbitrary_text(self, raw):
        out = prepare(raw, STORE)
        assert apply_edits(raw, out.edits) == out.text

    @settings(max_examples=100, deadline=None)
    @given(st.text(max_size=60))
    def test_boundary_idempotence_arbitrary_text(self, raw):
        once = fix_boundaries(raw)
        twice = fix_boundaries(once.text)
        assert twice.text == once.text
        assert twice.edits == ()

    @settings(max_examples=100, deadline=None)
    @given(st.text(alphabet="ab?#,.;:()5 \n", max_size=40))
    def test_full_idempotence_punctuation_soup(self, raw):
        once = prepare(raw, STORE)
        twice = prepare(once.text, STORE)
        assert twice.text == once.text
        assert twice.edits == ()
