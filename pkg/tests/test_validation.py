"""
Unit tests for validation module.

Tests whitelist validation of dataset fields, backend blocks and records.
"""

import pytest

from src.constants import InstanceLabel, NerTag, RunMode, SummaryRating, Taxonomy, VerdictLabel
from src.models import DatasetRecord, GoldEntity
from src.validation import (
    BackendConfigValidator,
    DatasetRecordValidator,
    InstanceLabelValidator,
    RatingValidator,
    ValidationError,
    validate_format,
    validate_label,
    validate_macro_average,
    validate_mode,
    validate_tag,
    validate_taxonomy,
    validate_threshold,
)


def record(label, entities):
    return DatasetRecord(
        id="r1",
        source_model="m",
        code="int f() { return 1; }",
        summary="Returns one.",
        summary_rating=SummaryRating.GOOD,
        gold_instance_label=label,
        gold_entities=tuple(entities),
    )


class TestTagValidator:
    """Test NER tag validation."""

    def test_canonical(self):
        assert validate_tag("FUNCTION") == NerTag.FUNCTION

    @pytest.mark.parametrize("raw,expected", [
        ("data type", NerTag.DATA_TYPE),
        ("datatype", NerTag.DATA_TYPE),
        ("ui-element", NerTag.UI_ELEMENT),
        ("HTML/XML tag", NerTag.HTML_XML_TAG),
    ])
    def test_aliases(self, raw, expected):
        """Test spellings models actually produce."""
        assert validate_tag(raw) == expected

    def test_unknown(self):
        with pytest.raises(ValidationError) as exc_info:
            validate_tag("PERSON")
        assert exc_info.value.field == "tag"

    def test_empty(self):
        with pytest.raises(ValidationError):
            validate_tag("  ")


class TestLabelValidators:
    """Test label, rating and taxonomy validation."""

    def test_label_case_insensitive(self):
        assert validate_label("incorrect") == VerdictLabel.INCORRECT

    def test_unresolved_not_a_gold_label(self):
        """Test pipeline-only labels are rejected in gold data."""
        with pytest.raises(ValidationError):
            validate_label("UNRESOLVED")

    def test_indeterminate_not_a_gold_instance_label(self):
        with pytest.raises(ValidationError):
            InstanceLabelValidator.validate("INDETERMINATE")

    def test_rating(self):
        assert RatingValidator.validate("fair") == SummaryRating.FAIR

    def test_taxonomy(self):
        assert validate_taxonomy("hc2_contextual") == Taxonomy.HC2_CONTEXTUAL
        assert validate_taxonomy(None) is None
        assert validate_taxonomy("") is None
        with pytest.raises(ValidationError):
            validate_taxonomy("HC9")


class TestRunSettings:
    """Test run-level choices."""

    def test_mode(self):
        assert validate_mode("REPLAY") == RunMode.REPLAY

    def test_format(self):
        assert validate_format("JSON") == "json"
        with pytest.raises(ValidationError):
            validate_format("xml")

    def test_macro_average(self):
        assert validate_macro_average("all") == "all"

    @pytest.mark.parametrize("bad", [0, -1, 1.5, True, "2", None])
    def test_threshold_rejects(self, bad):
        with pytest.raises(ValidationError):
            validate_threshold(bad)

    def test_threshold_accepts(self):
        assert validate_threshold(3) == 3


class TestBackendConfigValidator:
    """Test backend block validation."""

    def test_valid_block(self):
        block = {"endpoint": "http://localhost:8080/v1", "temperature": 0.3,
                 "max_new_tokens": 4000, "api_key_env": "LOCAL_KEY"}
        assert BackendConfigValidator.validate("judge", block) is block

    @pytest.mark.parametrize("field", ["api_key", "token", "secret"])
    def test_raw_credentials_rejected(self, field):
        """Test secrets never live in config files."""
        with pytest.raises(ValidationError) as exc_info:
            BackendConfigValidator.validate("judge", {field: "sk-x"})
        assert exc_info.value.field == field

    @pytest.mark.parametrize("block,field", [
        ({"temperature": 3}, "temperature"),
        ({"max_new_tokens": 0}, "max_new_tokens"),
        ({"max_in_flight": -2}, "max_in_flight"),
        ({"max_retries": -1}, "max_retries"),
        ({"request_timeout": 0}, "request_timeout"),
        ({"endpoint": "ftp://x"}, "endpoint"),
        ({"api_key_env": "not-an-env"}, "api_key_env"),
    ])
    def test_out_of_range(self, block, field):
        with pytest.raises(ValidationError) as exc_info:
            BackendConfigValidator.validate("ner", block)
        assert exc_info.value.field == field


class TestDatasetRecordValidator:
    """Test record consistency rules."""

    def test_consistent_record(self):
        rows = [GoldEntity("f", NerTag.FUNCTION, VerdictLabel.CORRECT)]
        assert DatasetRecordValidator.violations(
            record(InstanceLabel.NOT_HALLUCINATED, rows)
        ) == []

    def test_incorrect_requires_hallucinated(self):
        rows = [GoldEntity("f", NerTag.FUNCTION, VerdictLabel.INCORRECT)]
        problems = DatasetRecordValidator.violations(
            record(InstanceLabel.NOT_HALLUCINATED, rows)
        )
        assert problems and "HALLUCINATED" in problems[0]

    def test_hallucinated_requires_incorrect(self):
        rows = [GoldEntity("f", NerTag.FUNCTION, VerdictLabel.IRRELEVANT)]
        assert DatasetRecordValidator.violations(record(InstanceLabel.HALLUCINATED, rows))

    def test_taxonomy_only_on_incorrect(self):
        rows = [
            GoldEntity("f", NerTag.FUNCTION, VerdictLabel.CORRECT,
                       taxonomy=Taxonomy.HC1_FUNCTION)
        ]
        problems = DatasetRecordValidator.violations(
            record(InstanceLabel.NOT_HALLUCINATED, rows)
        )
        assert any("taxonomy" in p for p in problems)
