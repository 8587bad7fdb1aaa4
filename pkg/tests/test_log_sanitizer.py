"""
Unit tests for log sanitization.
"""

from src.errors import UnauthorizedError
from src.log_sanitizer import clip, safe_log_error, sanitize_log_message


class TestSanitizeLogMessage:
    """Test credential redaction."""

    def test_openai_key(self):
        message = "request failed with key sk-proj_abcdEFGH12345678"
        assert sanitize_log_message(message) == "request failed with key ***REDACTED***"

    def test_bearer_token(self):
        result = sanitize_log_message("Authorization: Bearer abc.def-123")
        assert "abc.def-123" not in result
        assert "***REDACTED***" in result

    def test_api_key_pair(self):
        assert sanitize_log_message('{"api_key": "local-secret"}') == '{"api_key": "***REDACTED***"}'

    def test_env_assignment(self):
        assert sanitize_log_message("ETF_API_KEY=xyz") == "ETF_API_KEY=***REDACTED***"

    def test_plain_text_untouched(self):
        message = "Judge returned INCORRECT for 'getJobID'"
        assert sanitize_log_message(message) == message

    def test_empty(self):
        assert sanitize_log_message("") == ""


class TestHelpers:
    """Test clip and safe_log_error."""

    def test_clip_flattens_and_limits(self):
        assert clip("a\n  b\tc") == "a b c"
        assert clip("x" * 10, limit=4) == "xxxx..."
        assert clip(None) == ""

    def test_safe_log_error_with_context(self):
        error = ValueError("token sk-abcdefgh12345 rejected")
        assert safe_log_error(error, "NER request failed") == (
            "NER request failed: ValueError: token ***REDACTED*** rejected"
        )

    def test_safe_log_error_etf_error(self):
        result = safe_log_error(UnauthorizedError(role="judge"))
        assert result.startswith("UnauthorizedError: [401]")
