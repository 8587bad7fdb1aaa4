"""
Unit tests for error module.

Tests the exception hierarchy, messages and status-code mapping.
"""

import pytest
from src.errors import (
    AlignmentError,
    BackendError,
    BackendUnavailableError,
    DatasetParseError,
    EmptySourceError,
    EtfError,
    InputDecodeError,
    InvariantViolationError,
    JavaParseError,
    LengthMismatchError,
    LexError,
    MalformedBackendOutputError,
    MissingFixtureError,
    OracleMissError,
    RateLimitError,
    RequestTimeoutError,
    TransientError,
    UnauthorizedError,
    map_status_code_to_error,
)


class TestEtfError:
    """Test base EtfError class."""

    def test_base_error_creation(self):
        """Test creating base error with message."""
        error = EtfError("Test error message")
        assert str(error) == "Test error message"
        assert error.status_code is None

    def test_base_error_with_status_code(self):
        """Test base error with status code."""
        error = EtfError("Test error", status_code=500)
        assert "[500]" in str(error)

    def test_to_dict(self):
        """Test serialization keeps class name and message."""
        data = EmptySourceError("summary", unit_id="u1").to_dict()
        assert data["error"] == "EmptySourceError"
        assert "u1" in data["message"]


class TestSourceErrors:
    """Test source analysis errors."""

    def test_empty_source_mentions_unit(self):
        """Test the unit id appears in the message."""
        error = EmptySourceError("source", unit_id="42")
        assert "'42'" in str(error)
        assert isinstance(error, EtfError)

    def test_java_parse_error_location(self):
        """Test the offending token and position are reported."""
        error = JavaParseError("Expected ';'", token="}", line=3, column=7)
        assert "line 3, column 7" in str(error)
        assert "'}'" in str(error)
        assert error.token == "}"

    def test_lex_error_str(self):
        """Test LexError describes kind and position."""
        error = LexError("UnterminatedString", line=2, column=5)
        assert str(error) == "UnterminatedString at line 2, column 5"

    def test_input_decode_error(self):
        """Test the path and reason are reported."""
        cause = ValueError("bad byte")
        error = InputDecodeError("summary.txt", "not UTF-8 text", original_error=cause)
        assert str(error) == "Cannot read summary.txt: not UTF-8 text"
        assert error.original_error is cause
        assert error.to_dict()["details"] == "{'path': 'summary.txt'}"


class TestBackendErrors:
    """Test backend errors carry role and fingerprint."""

    def test_role_and_fingerprint_in_str(self):
        """Test fingerprint is shortened in the string form."""
        error = BackendError("boom", role="judge", fingerprint="a" * 64)
        text = str(error)
        assert "role=judge" in text
        assert "fingerprint=" + "a" * 12 in text
        assert "a" * 13 not in text

    def test_missing_fixture(self):
        """Test missing fixture error keeps role and fingerprint."""
        error = MissingFixtureError("ner", "abc123", store_path="/tmp/fx")
        assert error.role == "ner"
        assert error.fingerprint == "abc123"
        assert "/tmp/fx" in str(error)
        assert isinstance(error, BackendError)

    def test_rate_limit_retry_after(self):
        """Test rate limit error reports the wait."""
        error = RateLimitError(retry_after=5.0)
        assert error.status_code == 429
        assert error.retry_after == 5.0
        assert "5.0 seconds" in str(error)

    def test_malformed_output_truncates_raw_text(self):
        """Test raw text is kept whole but clipped in details."""
        error = MalformedBackendOutputError("not JSON", raw_text="x" * 500)
        assert len(error.raw_text) == 500
        assert len(error.details["raw_text"]) == 200

    def test_unavailable_and_timeout(self):
        """Test wrappers used after retries and timeouts."""
        assert "unavailable" in str(BackendUnavailableError("refused")).lower()
        assert RequestTimeoutError(timeout_seconds=2).status_code == 408


class TestDatasetErrors:
    """Test dataset and metric errors."""

    def test_parse_error_line(self):
        """Test the line number leads the message."""
        error = DatasetParseError(7, "invalid JSON")
        assert error.line == 7
        assert str(error).startswith("Line 7:")

    def test_invariant_violation(self):
        """Test the broken rule is reported with the record id."""
        error = InvariantViolationError(3, "duplicate id 'x'", record_id="x")
        assert error.rule == "duplicate id 'x'"
        assert "'x'" in str(error)

    def test_alignment_and_length(self):
        """Test metric errors."""
        assert "('r1', 'foo', 0)" in str(AlignmentError(("r1", "foo", 0)))
        assert "3 vs 4" in str(LengthMismatchError(3, 4))

    def test_oracle_miss(self):
        """Test oracle miss names record and entity."""
        error = OracleMissError("r9", "getJobID")
        assert "getJobID" in str(error)
        assert "r9" in str(error)


class TestStatusCodeMapping:
    """Test map_status_code_to_error."""

    @pytest.mark.parametrize("code", [401, 403])
    def test_unauthorized(self, code):
        """Test credential failures."""
        error = map_status_code_to_error(code, role="judge")
        assert isinstance(error, UnauthorizedError)
        assert error.status_code == code
        assert error.role == "judge"

    def test_rate_limit(self):
        """Test 429 keeps retry_after."""
        error = map_status_code_to_error(429, retry_after=3.0)
        assert isinstance(error, RateLimitError)
        assert error.retry_after == 3.0

    @pytest.mark.parametrize("code", [500, 502, 503, 504])
    def test_transient(self, code):
        """Test server errors are transient."""
        assert isinstance(map_status_code_to_error(code), TransientError)

    def test_timeout(self):
        """Test 408 becomes a request timeout."""
        assert isinstance(map_status_code_to_error(408), RequestTimeoutError)

    def test_other(self):
        """Test unknown codes fall back to BackendError."""
        error = map_status_code_to_error(418)
        assert type(error) is BackendError
        assert "418" in str(error)
