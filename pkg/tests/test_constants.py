"""
Unit tests for constants module.

Tests the tagset partition, label alphabets and exit code mapping.
"""

from src.constants import (
    CODE_TAGS,
    ENTITY_CLASSES,
    FALLBACK_KINDS,
    INSTANCE_CLASSES,
    INSTANCE_EXIT_CODES,
    JAVA_KEYWORDS,
    JAVA_LITERAL_WORDS,
    KIND_PREFERENCE,
    NL_TAGS,
    POLYSEMOUS_WORDS,
    TAG_ALIASES,
    TAG_TO_KIND,
    BackendDefaults,
    CodeEntityKind,
    ExitCode,
    InstanceLabel,
    NerTag,
)


class TestNerTags:
    """Test the summary tagset."""

    def test_nineteen_tags(self):
        assert len(NerTag) == 19

    def test_code_and_nl_partition(self):
        assert len(CODE_TAGS) == 7
        assert len(NL_TAGS) == 12
        assert CODE_TAGS.isdisjoint(NL_TAGS)
        assert CODE_TAGS | NL_TAGS == set(NerTag)

    def test_tag_to_kind_covers_code_tags(self):
        """Every code tag but HTML/XML has a matching code kind."""
        assert set(TAG_TO_KIND) == CODE_TAGS - {NerTag.HTML_XML_TAG}
        for tag, kind in TAG_TO_KIND.items():
            assert kind.value == tag.value

    def test_aliases_are_normalized_keys(self):
        for key in TAG_ALIASES:
            assert key == key.upper()
            assert " " not in key and "-" not in key


class TestCodeKinds:
    """Test code entity kind tables."""

    def test_fallback_kinds(self):
        assert FALLBACK_KINDS == {
            CodeEntityKind.KEYWORD,
            CodeEntityKind.VALUE,
            CodeEntityKind.VARIABLE,
        }

    def test_preference_excludes_keywords(self):
        assert CodeEntityKind.KEYWORD not in KIND_PREFERENCE
        assert len(KIND_PREFERENCE) == len(set(KIND_PREFERENCE))
        assert KIND_PREFERENCE[0] == CodeEntityKind.FUNCTION

    def test_literal_words_are_not_keywords(self):
        assert JAVA_LITERAL_WORDS.isdisjoint(JAVA_KEYWORDS)
        assert "goto" in JAVA_KEYWORDS

    def test_polysemous_words_lowercase(self):
        assert all(w == w.lower() for w in POLYSEMOUS_WORDS)


class TestLabels:
    """Test label alphabets and exit codes."""

    def test_binary_alphabets(self):
        assert ENTITY_CLASSES == ["CORRECT", "INCORRECT"]
        assert INSTANCE_CLASSES == ["HALLUCINATED", "NOT_HALLUCINATED"]

    def test_exit_codes(self):
        assert INSTANCE_EXIT_CODES == {
            InstanceLabel.NOT_HALLUCINATED: 0,
            InstanceLabel.HALLUCINATED: 1,
            InstanceLabel.INDETERMINATE: 2,
        }
        assert ExitCode.OPERATIONAL_ERROR == 3
        assert ExitCode.USAGE_ERROR == 4

    def test_backend_defaults(self):
        assert BackendDefaults.TEMPERATURE == 0.3
        assert BackendDefaults.MAX_NEW_TOKENS == 4000
        assert 429 in BackendDefaults.RETRYABLE_STATUS_CODES
        assert 401 not in BackendDefaults.RETRYABLE_STATUS_CODES
