"""
Unit tests for summary-to-code entity matching.
"""

import random
import string

import pytest

from src.code_analysis import extract_code_entities
from src.constants import CodeEntityKind, NerTag, ParseMode
from src.matching import find_occurrences, match_entity, normalize, partition
from src.models import CodeEntity, CodeEntitySet, SourceUnit, SummaryEntity

GET_JOB_ID = "public int getJobID(String jobName) {\n    return -1;\n}\n"


def entity(surface, tag=NerTag.VARIABLE):
    return SummaryEntity(surface=surface, tag=tag)


def code_set(*entities):
    return CodeEntitySet("u", list(entities), ParseMode.FULL_AST)


class TestNormalize:
    """Test surface normalization."""

    @pytest.mark.parametrize("surface,expected", [
        ("`getJobID()`", "getJobID"),
        ("getJobID()", "getJobID"),
        ("args[]", "args"),
        ("“jobName”", "jobName"),
        ("'success'", "success"),
        ("matrix[][]", "matrix[]"),
        ("  name  ", "name"),
    ])
    def test_examples(self, surface, expected):
        assert normalize(surface) == expected

    def test_case_preserved(self):
        assert normalize("ColumnInt16") == "ColumnInt16"


class TestFindOccurrences:
    """Test identifier-boundary search."""

    def test_basic(self):
        assert find_occurrences("id", "id, not void or getJobID, but (id)") == [(0, 2), (31, 33)]

    def test_dollar_and_underscore_glue(self):
        assert find_occurrences("count", "$count _count count_ count") == [(21, 26)]

    def test_non_identifier_edges(self):
        """Test names with punctuation edges still match."""
        assert find_occurrences("-1", "returns -1.") == [(8, 10)]

    def test_case_insensitive(self):
        assert find_occurrences("Name", "name NAME", case_insensitive=True) == [(0, 4), (5, 9)]

    def test_empty_name(self):
        assert find_occurrences("", "anything") == []

    def test_boundary_fuzz(self):
        """Test a name never matches inside a longer identifier containing it."""
        rng = random.Random(1234)
        head = string.ascii_letters + "_$"
        tail = head + string.digits

        def ident(n):
            return rng.choice(head) + "".join(rng.choice(tail) for _ in range(n - 1))

        for _ in range(10_000):
            inner = ident(rng.randint(1, 6))
            prefix = "".join(rng.choice(tail) for _ in range(rng.randint(0, 3)))
            suffix = "".join(rng.choice(tail) for _ in range(rng.randint(0, 3)))
            if not prefix and not suffix:
                suffix = rng.choice(tail)
            outer = rng.choice(head) + prefix + inner + suffix if prefix else inner + suffix
            sentence = f"<{outer}>"
            assert find_occurrences(inner, sentence) == [], (inner, outer)
            assert find_occurrences(outer, sentence) == [(1, 1 + len(outer))]


class TestMatchEntity:
    """Test single-entity matching."""

    def test_exact_name(self):
        code = extract_code_entities(SourceUnit(GET_JOB_ID))
        match = match_entity(entity("getJobID()", NerTag.FUNCTION), code)
        assert match.name == "getJobID"
        assert match.kind == CodeEntityKind.FUNCTION

    def test_agreeing_kind_wins(self):
        code = code_set(
            CodeEntity("ColumnInt16", CodeEntityKind.DATA_TYPE, 3, 5),
            CodeEntity("ColumnInt16", CodeEntityKind.CLASS, 3, 30),
        )
        assert match_entity(entity("ColumnInt16", NerTag.CLASS), code).kind == CodeEntityKind.CLASS
        assert match_entity(entity("ColumnInt16", NerTag.DATA_TYPE), code).kind == CodeEntityKind.DATA_TYPE

    def test_preference_order_when_no_kind_agrees(self):
        code = code_set(
            CodeEntity("matcher", CodeEntityKind.VARIABLE, 1, 1),
            CodeEntity("matcher", CodeEntityKind.FUNCTION, 1, 9),
        )
        assert match_entity(entity("matcher", NerTag.VALUE), code).kind == CodeEntityKind.FUNCTION

    def test_keywords_never_match(self):
        code = code_set(CodeEntity("return", CodeEntityKind.KEYWORD, 2, 5))
        assert match_entity(entity("return", NerTag.FUNCTION), code) is None

    def test_case_sensitivity(self):
        code = code_set(CodeEntity("getJobID", CodeEntityKind.FUNCTION, 1, 12))
        assert match_entity(entity("getjobid", NerTag.FUNCTION), code) is None
        assert match_entity(entity("getjobid", NerTag.FUNCTION), code, case_insensitive=True)

    def test_empty_after_normalization(self):
        assert match_entity(entity("``"), code_set()) is None

    def test_formatting_invariance_fuzz(self):
        """Test backticks, quotes and a call suffix never change the match."""
        rng = random.Random(99)
        kinds = list(CodeEntityKind)
        tags = list(NerTag)
        pool = ["getJobID", "jobName", "size", "ColumnInt16", "run", "_id", "$x", "value2"]

        for _ in range(10_000):
            code = code_set(*(
                CodeEntity(rng.choice(pool), rng.choice(kinds), 1, i + 1)
                for i in range(rng.randint(0, 5))
            ))
            name = rng.choice(pool)
            tag = rng.choice(tags)
            case_insensitive = rng.random() < 0.5
            plain = match_entity(entity(name, tag), code, case_insensitive)
            for decorated in (f"`{name}()`", f"`{name}`", f"{name}()", f"\"{name}\""):
                found = match_entity(entity(decorated, tag), code, case_insensitive)
                assert found == plain, (decorated, code.entities)


class TestPartition:
    """Test the mapped / unmapped / natural-language split."""

    def test_get_job_id_scenario(self):
        """Test the database-access summary of a method that returns -1."""
        code = extract_code_entities(SourceUnit(GET_JOB_ID))
        entities = [
            entity("getJobID", NerTag.FUNCTION),
            entity("jobName", NerTag.VARIABLE),
            entity("jobStatus", NerTag.VARIABLE),
            entity("database", NerTag.VARIABLE),
            entity("Java", NerTag.LANGUAGE),
        ]
        result = partition(entities, code)
        assert [e.surface for e, _ in result.mapped] == ["getJobID", "jobName"]
        assert [e.surface for e in result.unmapped] == ["jobStatus", "database"]
        assert [e.surface for e in result.nl_entities] == ["Java"]
        assert result.total == 5

    def test_numeric_values(self):
        """Test integer literals match by value."""
        code = code_set(
            CodeEntity("1_000", CodeEntityKind.VALUE, 1, 9),
            CodeEntity("-1", CodeEntityKind.VALUE, 2, 12),
        )
        result = partition(
            [entity("1000", NerTag.VALUE), entity("-1L", NerTag.VALUE), entity("7", NerTag.VALUE)],
            code,
        )
        assert [(e.surface, c.name) for e, c in result.mapped] == [("1000", "1_000"), ("-1L", "-1")]
        assert [e.surface for e in result.unmapped] == ["7"]

    def test_numeric_only_for_value_tag(self):
        code = code_set(CodeEntity("1_000", CodeEntityKind.VALUE, 1, 9))
        assert partition([entity("1000", NerTag.VARIABLE)], code).unmapped

    def test_html_tag_is_code_but_never_in_java(self):
        result = partition([entity("<div>", NerTag.HTML_XML_TAG)], code_set())
        assert result.unmapped == [entity("<div>", NerTag.HTML_XML_TAG)]

    def test_every_entity_lands_in_exactly_one_set(self):
        code = extract_code_entities(SourceUnit(GET_JOB_ID))
        tags = list(NerTag)
        rng = random.Random(7)
        names = ["getJobID", "jobName", "x", "String", "1", "int", "Java", "return", "-1"]
        entities = [entity(rng.choice(names), rng.choice(tags)) for _ in range(10_000)]

        result = partition(entities, code)

        placed = (
            [id(e) for e, _ in result.mapped]
            + [id(e) for e in result.unmapped]
            + [id(e) for e in result.nl_entities]
        )
        assert len(placed) == len(set(placed)) == len(entities)
        assert set(placed) == {id(e) for e in entities}
        assert result.total == len(entities)
        assert all(not e.is_code for e in result.nl_entities)
        assert all(e.is_code for e in result.unmapped)
