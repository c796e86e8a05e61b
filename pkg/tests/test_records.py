"""Diagnosis code parsing, audit category mapping, admissions ingestion."""

import datetime as dt

import pytest
from hypothesis import given
from hypothesis import strategies as st

from auditcoder.records import (
    MAX_CODE_DEPTH,
    AuditCategory,
    CodeTable,
    DiagnosisCode,
    RecordError,
    UnmappedCodeError,
    audit_root,
    ingest_admissions,
    load_code_table,
    map_to_audit,
    parse_diagnosis_code,
    write_admissions,
    AdmissionRecord,
    STANDARD_CATEGORIES,
)


def small_table() -> CodeTable:
    table = CodeTable()
    rows = [
        ("218", "Cranial", "OTHER"),
        ("218-224", "Cranial>Trauma", "CRANIAL:TRAUMA"),
        ("218-224-309", "Cranial>Trauma>Osseous Injury", "CRANIAL:TRAUMA:SKULL FRACTURE"),
        (
            "218-224-309-310",
            "Cranial>Trauma>Osseous Injury>Skull",
            "CRANIAL:TRAUMA:SKULL FRACTURE",
        ),
        (
            "218-224-309-310-315",
            "Cranial>Trauma>Osseous Injury>Skull>Depressed",
            "CRANIAL:TRAUMA:SKULL FRACTURE",
        ),
        ("218-220", "Cranial>Neoplasia branch", "OTHER"),
        ("218-220-251", "Cranial>Neoplasia branch>Neoplasia", "CRANIAL:NEOPLASIA"),
        (
            "218-220-251-243",
            "Cranial>Neoplasia branch>Neoplasia>Acoustic Neuroma",
            "CRANIAL:NEOPLASIA",
        ),
        (
            "218-220-251-242",
            "Cranial>Neoplasia branch>Neoplasia>Meningioma",
            "CRANIAL:NEOPLASIA:MENINGIOMA",
        ),
        (
            "218-220-251-244",
            "Cranial>Neoplasia branch>Neoplasia>Pituitary",
            "CRANIAL:NEOPLASIA:PITUITARY",
        ),
    ]
    for code, labels, category in rows:
        table.add(parse_diagnosis_code(code, labels), AuditCategory.parse(category))
    table.validate()
    return table


class TestDiagnosisCode:
    def test_parse_five_level_code(self):
        code = parse_diagnosis_code(
            "218-224-309-310-315",
            "Cranial>Trauma>Osseous Injury>Skull>Depressed",
        )
        assert code.segments == (218, 224, 309, 310, 315)
        assert len(code.segments) == 5
        assert code.labels[0] == "Cranial"
        assert code.labels[-1] == "Depressed"

    def test_format_round_trip(self):
        code = parse_diagnosis_code("218-220-251-242")
        assert code.format() == "218-220-251-242"
        assert parse_diagnosis_code(code.format()) == code

    def test_six_levels_accepted_seven_rejected(self):
        parse_diagnosis_code("1-2-3-4-5-6")
        with pytest.raises(RecordError):
            parse_diagnosis_code("1-2-3-4-5-6-7")

    def test_error_names_offending_segment(self):
        with pytest.raises(RecordError, match="segment 2"):
            parse_diagnosis_code("218-x-309")
        with pytest.raises(RecordError, match="segment 3"):
            parse_diagnosis_code("218-224-")

    def test_label_count_must_match(self):
        with pytest.raises(RecordError):
            parse_diagnosis_code("218-224", "Cranial")

    def test_equality_ignores_labels(self):
        a = parse_diagnosis_code("218-224", "Cranial>Trauma")
        b = parse_diagnosis_code("218-224")
        assert a == b
        assert hash(a) == hash(b)

    def test_parent_chain(self):
        code = parse_diagnosis_code("218-224-309")
        assert code.parent.segments == (218, 224)
        assert code.parent.parent.segments == (218,)
        assert code.parent.parent.parent is None

    @given(st.lists(st.integers(min_value=0, max_value=999), min_size=1, max_size=MAX_CODE_DEPTH))
    def test_round_trip_any_segments(self, segments):
        code = DiagnosisCode(tuple(segments))
        assert parse_diagnosis_code(code.format()) == code


class TestAuditCategory:
    def test_parse_and_text(self):
        cat = AuditCategory.parse("CRANIAL:TRAUMA:SKULL FRACTURE")
        assert cat.parts == ("CRANIAL", "TRAUMA", "SKULL FRACTURE")
        assert cat.text == "CRANIAL:TRAUMA:SKULL FRACTURE"

    def test_rejects_lowercase(self):
        with pytest.raises(RecordError):
            AuditCategory(("Cranial",))

    def test_rejects_blank_part(self):
        with pytest.raises(RecordError):
            AuditCategory.parse("CRANIAL::TRAUMA")

    def test_prefix_relations(self):
        trauma = AuditCategory.parse("CRANIAL:TRAUMA")
        fracture = AuditCategory.parse("CRANIAL:TRAUMA:SKULL FRACTURE")
        assert trauma.is_prefix_of(fracture)
        assert trauma.is_strict_prefix_of(fracture)
        assert fracture.is_prefix_of(fracture)
        assert not fracture.is_strict_prefix_of(fracture)
        assert not fracture.is_prefix_of(trauma)

    def test_root_truncates(self):
        cat = AuditCategory.parse("CRANIAL:TRAUMA:SDH")
        assert audit_root(cat, 1).text == "CRANIAL"
        assert audit_root(cat, 2).text == "CRANIAL:TRAUMA"
        assert audit_root(cat, 5).text == "CRANIAL:TRAUMA:SDH"

    def test_standard_inventory_has_known_members(self):
        texts = {c.text for c in STANDARD_CATEGORIES}
        assert "CRANIAL:TRAUMA:SKULL FRACTURE" in texts
        assert "CRANIAL:NEOPLASIA:MENINGIOMA" in texts
        assert "SPINE:CANAL STENOSIS" in texts
        assert "OTHER" in texts


class TestMapping:
    def test_exact_mapping(self):
        table = small_table()
        code = parse_diagnosis_code("218-224-309-310-315")
        assert map_to_audit(code, table).text == "CRANIAL:TRAUMA:SKULL FRACTURE"

    def test_sibling_specificity(self):
        table = small_table()
        assert map_to_audit(parse_diagnosis_code("218-220-251-243"), table).text == "CRANIAL:NEOPLASIA"
        assert (
            map_to_audit(parse_diagnosis_code("218-220-251-242"), table).text
            == "CRANIAL:NEOPLASIA:MENINGIOMA"
        )
        assert (
            map_to_audit(parse_diagnosis_code("218-220-251-244"), table).text
            == "CRANIAL:NEOPLASIA:PITUITARY"
        )

    def test_ancestor_fallback(self):
        table = small_table()
        # 218-224-309-310-999 is absent; nearest mapped ancestor is 218-224-309.
        unknown_leaf = parse_diagnosis_code("218-224-309-310-999")
        assert map_to_audit(unknown_leaf, table).text == "CRANIAL:TRAUMA:SKULL FRACTURE"

    def test_unmapped_root_raises(self):
        table = small_table()
        with pytest.raises(UnmappedCodeError):
            map_to_audit(parse_diagnosis_code("999-1"), table)

    @given(
        st.lists(st.integers(min_value=0, max_value=40), min_size=1, max_size=MAX_CODE_DEPTH)
    )
    def test_fallback_never_deeper_than_code(self, segments):
        # Build a table mapping every strict ancestor of a random code, then
        # check mapping resolves to the deepest mapped prefix.
        table = CodeTable()
        code = DiagnosisCode(tuple(segments))
        prefixes = [tuple(segments[:i]) for i in range(1, len(segments) + 1)]
        for depth, prefix in enumerate(prefixes, start=1):
            table.add(DiagnosisCode(prefix), AuditCategory((f"D{depth}",)))
        got = map_to_audit(code, table)
        assert got.text == f"D{len(segments)}"

    def test_table_validation_requires_parents(self):
        table = CodeTable()
        table.add(parse_diagnosis_code("218-224"), AuditCategory.parse("CRANIAL:TRAUMA"))
        with pytest.raises(RecordError, match="not closed"):
            table.validate()


class TestIngestion:
    def test_ingest_flags_bad_rows(self, tmp_path):
        path = tmp_path / "admissions.csv"
        path.write_text(
            "admission_id,date,diagnosis_code,diagnosis_labels,note\n"
            "A1,2016-03-01,218-224,Cranial>Trauma,\"Fall, SDH\"\n"
            "A2,2016-03-02,garbage,,note two\n"
            "A3,not-a-date,218,Cranial,note three\n"
            "A4,2016-03-04,,,no code at all\n"
        )
        records = ingest_admissions(str(path))
        assert len(records) == 4
        assert records[0].diagnosis.segments == (218, 224)
        assert records[0].flag is None
        assert records[1].diagnosis is None
        assert records[1].raw_diagnosis == "garbage"
        assert "diagnosis" in records[1].flag
        assert records[2].diagnosis is not None
        assert "date" in records[2].flag
        assert records[3].diagnosis is None
        assert records[3].flag is None  # empty code is allowed, not an error

    def test_ingest_tab_delimited(self, tmp_path):
        path = tmp_path / "admissions.tsv"
        path.write_text(
            "admission_id\tdate\tdiagnosis_code\tdiagnosis_labels\tnote\n"
            "B1\t2016-05-01\t218-224\tCranial>Trauma\tfall, SDH noted\n"
        )
        records = ingest_admissions(str(path))
        assert records[0].note == "fall, SDH noted"

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("admission_id,note\nA1,hello\n")
        with pytest.raises(RecordError, match="missing columns"):
            ingest_admissions(str(path))

    def test_write_then_ingest_round_trip(self, tmp_path):
        path = tmp_path / "out.csv"
        original = [
            AdmissionRecord(
                admission_id="A1",
                date=dt.date(2016, 3, 1),
                diagnosis=parse_diagnosis_code("218-224", "Cranial>Trauma"),
                note="Ped v car, GCS 3",
            )
        ]
        write_admissions(str(path), original)
        back = ingest_admissions(str(path))
        assert back[0].admission_id == "A1"
        assert back[0].diagnosis == original[0].diagnosis
        assert back[0].note == original[0].note

    def test_load_code_table_file(self, tmp_path):
        path = tmp_path / "codes.csv"
        path.write_text(
            "code,labels,audit_category\n"
            "218,Cranial,OTHER\n"
            "218-224,Cranial>Trauma,CRANIAL:TRAUMA\n"
        )
        table = load_code_table(str(path))
        assert map_to_audit(parse_diagnosis_code("218-224-309"), table).text == "CRANIAL:TRAUMA"
