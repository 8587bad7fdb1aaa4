"""
Unit tests for dataset loading, conversion and statistics.
"""

import json
import os
from pathlib import Path

import pytest

from src.constants import InstanceLabel, NerTag, SummaryRating, Taxonomy, VerdictLabel
from src.dataset import (
    convert_upstream,
    dataset_statistics,
    decode_line,
    find_record,
    iter_jsonl,
    load_code_units,
    load_dataset,
    load_summaries,
    parse_gold_entity,
    parse_record,
    write_jsonl,
)
from src.errors import DatasetParseError, InvariantViolationError

SAMPLE = Path(__file__).parent / "fixtures" / "codesumeval_sample.jsonl"


def row(**overrides):
    base = {
        "id": "r1",
        "source_model": "gpt-4o",
        "code": "int f() { return 1; }",
        "summary": "f returns 1.",
        "summary_rating": "GOOD",
        "gold_instance_label": "NOT_HALLUCINATED",
        "gold_entities": [
            {"name": "f", "tag": "FUNCTION", "label": "CORRECT", "relevant_sentences": ["f returns 1."]}
        ],
    }
    base.update(overrides)
    return base


def write_rows(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return path


class TestSampleCorpus:
    """Test the bundled sample corpus."""

    def test_loads(self):
        records = load_dataset(SAMPLE)
        assert len(records) == 22
        assert records[0].id == "cse-001"
        assert records[-1].id == "cse-022"

    def test_first_record(self):
        record = load_dataset(SAMPLE)[0]
        assert record.source_model == "gpt-4o"
        assert record.summary_rating == SummaryRating.POOR
        assert record.gold_instance_label == InstanceLabel.HALLUCINATED
        assert [e.name for e in record.scored_entities()] == ["getJobID()", "jobName", "-1"]
        assert record.gold_entities[0].taxonomy == Taxonomy.HC2_CONTEXTUAL
        assert record.gold_entities[2].label == VerdictLabel.IRRELEVANT

    def test_statistics(self):
        """Test totals hand-counted from the sample file."""
        stats = dataset_statistics(load_dataset(SAMPLE))

        assert stats["summaries"] == 22
        assert stats["hallucinated"] == 11
        assert stats["hallucinated_percent"] == 50.0
        assert stats["entities"] == 90
        assert stats["labels"] == {"CORRECT": 78, "INCORRECT": 11, "IRRELEVANT": 1}
        assert stats["ratings"] == {"GOOD": 11, "FAIR": 5, "POOR": 6}
        assert stats["models"] == {"codellama": 7, "gpt-4o": 8, "granite": 7}
        assert stats["mean_incorrect_fair_poor"] == 1.0
        assert stats["taxonomy"] == {
            "HC1_LIBRARY": 1,
            "HC2_CONTEXTUAL": 2,
            "HC2_NONCONTEXTUAL": 1,
            "HC3_LENGTH": 1,
            "HC3_LEXICAL": 1,
            "HC3_LOGICAL": 5,
        }

    def test_round_trip_file(self, tmp_path):
        records = load_dataset(SAMPLE)
        out = tmp_path / "copy.jsonl"
        assert write_jsonl(out, (r.to_dict() for r in records)) == 22
        assert load_dataset(out) == records


class TestParsing:
    """Test line and record parsing."""

    def test_decode_line_errors(self):
        with pytest.raises(DatasetParseError, match="Line 3: invalid JSON"):
            decode_line(3, "{not json")
        with pytest.raises(DatasetParseError, match="JSON object"):
            decode_line(1, "[1, 2]")

    def test_missing_keys(self):
        data = row()
        del data["summary"]
        del data["gold_entities"]
        with pytest.raises(DatasetParseError, match="missing keys: summary, gold_entities"):
            parse_record(data, 7)

    def test_bad_enum_values(self):
        with pytest.raises(DatasetParseError):
            parse_record(row(summary_rating="EXCELLENT"))
        with pytest.raises(DatasetParseError):
            parse_record(row(gold_entities=[{"name": "f", "tag": "PERSON", "label": "CORRECT"}]))

    def test_gold_entity_sentences_as_string(self):
        entity = parse_gold_entity(
            {"name": "x", "tag": "variable", "label": "correct", "relevant_sentences": "A.\n\nB."}
        )
        assert entity.tag == NerTag.VARIABLE
        assert entity.label == VerdictLabel.CORRECT
        assert entity.relevant_sentences == ("A.", "B.")

    def test_gold_entity_needs_name(self):
        with pytest.raises(ValueError):
            parse_gold_entity({"name": " ", "tag": "VARIABLE", "label": "CORRECT"})

    def test_iter_jsonl_skips_blank_lines(self, tmp_path):
        path = tmp_path / "rows.jsonl"
        path.write_text('{"a": 1}\n\n{"a": 2}\n', encoding="utf-8")
        assert list(iter_jsonl(path)) == [(1, {"a": 1}), (3, {"a": 2})]


class TestValidation:
    """Test strict and lenient loading."""

    def test_label_consistency_strict(self, tmp_path):
        bad = row(gold_instance_label="HALLUCINATED")
        path = write_rows(tmp_path / "d.jsonl", [bad])
        with pytest.raises(InvariantViolationError) as exc_info:
            load_dataset(path)
        assert exc_info.value.line == 1
        assert "requires at least one INCORRECT" in exc_info.value.rule

    def test_incorrect_requires_hallucinated(self, tmp_path):
        entities = [{"name": "f", "tag": "FUNCTION", "label": "INCORRECT"}]
        path = write_rows(tmp_path / "d.jsonl", [row(gold_entities=entities)])
        with pytest.raises(InvariantViolationError, match="must be HALLUCINATED"):
            load_dataset(path)

    def test_taxonomy_only_on_incorrect(self, tmp_path):
        entities = [{"name": "f", "tag": "FUNCTION", "label": "CORRECT", "taxonomy": "HC4_LOG"}]
        path = write_rows(tmp_path / "d.jsonl", [row(gold_entities=entities)])
        with pytest.raises(InvariantViolationError, match="taxonomy"):
            load_dataset(path)

    def test_duplicate_id(self, tmp_path):
        path = write_rows(tmp_path / "d.jsonl", [row(), row()])
        with pytest.raises(InvariantViolationError, match="duplicate id"):
            load_dataset(path)

    def test_lenient_skips_bad_lines(self, tmp_path):
        """Test lenient mode keeps the valid records in order."""
        path = tmp_path / "d.jsonl"
        path.write_text(
            json.dumps(row(id="a")) + "\n"
            + "{broken\n"
            + json.dumps(row(id="b", summary="  ")) + "\n"
            + json.dumps(row(id="c")) + "\n",
            encoding="utf-8",
        )
        assert [r.id for r in load_dataset(path, strict=False)] == ["a", "c"]
        with pytest.raises(DatasetParseError):
            load_dataset(path)


class TestConvertUpstream:
    """Test grouping a tuple-per-row export."""

    ROWS = [
        {
            "summary_id": 7,
            "model": "granite",
            "code": "int f() { return 1; }",
            "summary": "f returns 1.",
            "rating": "FAIR",
            "entity": "f",
            "entity_type": "Function",
            "relevant_sentence": "f returns 1.",
            "label": "CORRECT",
        },
        {
            "summary_id": 7,
            "entity": "1",
            "entity_type": "VALUE",
            "label": "INCORRECT",
            "cause": "HC3_LOGICAL",
        },
        {
            "summary_id": 8,
            "model": "gpt-4o",
            "code": "void g() {}",
            "summary": "g does nothing.",
        },
    ]

    def test_grouped_records(self):
        first, second = convert_upstream(self.ROWS)

        assert first.id == "7"
        assert first.source_model == "granite"
        assert first.summary_rating == SummaryRating.FAIR
        assert first.gold_instance_label == InstanceLabel.HALLUCINATED
        assert [(e.name, e.tag, e.label) for e in first.gold_entities] == [
            ("f", NerTag.FUNCTION, VerdictLabel.CORRECT),
            ("1", NerTag.VALUE, VerdictLabel.INCORRECT),
        ]
        assert first.gold_entities[1].taxonomy == Taxonomy.HC3_LOGICAL

        assert second.id == "8"
        assert second.gold_entities == ()
        assert second.summary_rating == SummaryRating.GOOD
        assert second.gold_instance_label == InstanceLabel.NOT_HALLUCINATED

    def test_row_without_id(self):
        with pytest.raises(DatasetParseError, match="Line 2: row has no summary id"):
            convert_upstream([self.ROWS[0], {"entity": "x"}])

    def test_bad_tag(self):
        bad = dict(self.ROWS[0], entity_type="SPACESHIP")
        with pytest.raises(DatasetParseError):
            convert_upstream([bad])


class TestAuxiliaryFiles:
    """Test code-unit and summary files used by generation."""

    def test_load_code_units(self, tmp_path):
        path = write_rows(tmp_path / "codes.jsonl", [{"id": 1, "code": "void f() {}"}])
        [unit] = load_code_units(path)
        assert (unit.id, unit.text) == ("1", "void f() {}")

    def test_load_code_units_bad_row(self, tmp_path):
        path = write_rows(tmp_path / "codes.jsonl", [{"id": 1, "code": 5}])
        with pytest.raises(DatasetParseError):
            load_code_units(path)

    def test_load_summaries(self, tmp_path):
        path = write_rows(
            tmp_path / "out.jsonl",
            [
                {"id": "1", "source_model": "gpt-4o", "summary": "a"},
                {"id": "1", "source_model": "granite", "summary": "b"},
            ],
        )
        done = load_summaries(path)
        assert set(done) == {("1", "gpt-4o"), ("1", "granite")}
        assert load_summaries(tmp_path / "missing.jsonl") == {}

    def test_find_record(self):
        records = load_dataset(SAMPLE)
        assert find_record(records, "cse-010").source_model == "gpt-4o"
        assert find_record(records, "nope") is None


RELEASED = Path(
    os.getenv("ETF_CODESUMEVAL", Path(__file__).parent.parent / "data" / "codesumeval.jsonl")
)


@pytest.mark.skipif(
    not RELEASED.exists(),
    reason="released dataset not vendored; set ETF_CODESUMEVAL to its JSONL path",
)
class TestReleasedDataset:
    """Test the released annotations load with their published totals."""

    def test_published_totals(self):
        stats = dataset_statistics(load_dataset(RELEASED))

        assert stats["summaries"] == 411
        assert stats["hallucinated"] == 130
        assert stats["hallucinated_percent"] == 31.63
        assert stats["entities"] == 9933
        assert stats["labels"] == {"CORRECT": 9024, "INCORRECT": 303, "IRRELEVANT": 606}
