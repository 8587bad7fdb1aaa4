"""
Unit tests for decorators module.

Tests retry logic, timeout handling, SDK error mapping and timing.
"""

import asyncio
from unittest.mock import AsyncMock, patch

import httpx
import openai
import pytest

from src.decorators import (
    PerformanceMonitor,
    backend_operation,
    handle_backend_error,
    parse_retry_after,
    retry_on_transient_error,
    with_timeout,
)
from src.errors import (
    BackendError,
    BackendUnavailableError,
    MissingFixtureError,
    RateLimitError,
    RateLimitExhaustedError,
    RequestTimeoutError,
    TransientError,
    UnauthorizedError,
)

REQUEST = httpx.Request("POST", "https://backend.test/v1/chat/completions")


def status_error(code: int, headers=None) -> openai.APIStatusError:
    response = httpx.Response(code, request=REQUEST, headers=headers or {})
    return openai.APIStatusError(f"HTTP {code}", response=response, body=None)


class TestRetryDecorator:
    """Test retry_on_transient_error decorator."""

    async def test_retry_successful_first_attempt(self):
        """Test that successful calls don't retry."""
        call_count = 0

        @retry_on_transient_error(max_retries=3)
        async def successful_function():
            nonlocal call_count
            call_count += 1
            return "success"

        assert await successful_function() == "success"
        assert call_count == 1

    async def test_retry_on_transient_error_succeeds(self):
        """Test that transient errors are retried and eventually succeed."""
        call_count = 0

        @retry_on_transient_error(max_retries=3, base_delay=0.01)
        async def flaky_function():
            nonlocal call_count
            call_count += 1
            if call_count < 3:
                raise TransientError(status_code=503)
            return "success"

        assert await flaky_function() == "success"
        assert call_count == 3

    async def test_retry_exhausted_becomes_unavailable(self):
        """Test that exhausted transient retries escalate."""
        call_count = 0

        @retry_on_transient_error(max_retries=2, base_delay=0.01)
        async def always_fails():
            nonlocal call_count
            call_count += 1
            raise TransientError(status_code=503, role="judge", fingerprint="f" * 64)

        with pytest.raises(BackendUnavailableError) as exc_info:
            await always_fails()

        # initial + 2 retries
        assert call_count == 3
        assert exc_info.value.role == "judge"
        assert exc_info.value.fingerprint == "f" * 64

    async def test_rate_limit_exhausted(self):
        """Test persistent 429 raises RateLimitExhaustedError."""
        @retry_on_transient_error(max_retries=1, base_delay=0.01)
        async def limited():
            raise RateLimitError()

        with pytest.raises(RateLimitExhaustedError) as exc_info:
            await limited()
        assert exc_info.value.details["attempts"] == 2

    async def test_non_transient_error_not_retried(self):
        """Test that non-transient errors are not retried."""
        call_count = 0

        @retry_on_transient_error(max_retries=3)
        async def missing():
            nonlocal call_count
            call_count += 1
            raise MissingFixtureError("judge", "abc")

        with pytest.raises(MissingFixtureError):
            await missing()
        assert call_count == 1

    async def test_retry_after_wins_over_backoff(self):
        """Test that Retry-After decides the sleep."""
        calls = 0

        @retry_on_transient_error(max_retries=2, base_delay=0.01)
        async def rate_limited():
            nonlocal calls
            calls += 1
            if calls == 1:
                raise RateLimitError(retry_after=7.0)
            return "ok"

        with patch("src.decorators.asyncio.sleep", new=AsyncMock()) as sleep:
            assert await rate_limited() == "ok"
        sleep.assert_awaited_once_with(7.0)

    async def test_exponential_backoff_delays(self):
        """Test delays double and respect max_delay."""
        calls = 0

        @retry_on_transient_error(max_retries=4, base_delay=1.0, max_delay=3.0)
        async def flaky():
            nonlocal calls
            calls += 1
            if calls < 5:
                raise TransientError(status_code=502)
            return "ok"

        with patch("src.decorators.asyncio.sleep", new=AsyncMock()) as sleep:
            await flaky()
        assert [c.args[0] for c in sleep.await_args_list] == [1.0, 2.0, 3.0, 3.0]

    async def test_total_delay_ceiling(self):
        """Test retries stop before the summed delay passes the ceiling."""
        calls = 0

        @retry_on_transient_error(
            max_retries=10, base_delay=4.0, max_delay=4.0, max_total_delay=10.0
        )
        async def flaky():
            nonlocal calls
            calls += 1
            raise TransientError(status_code=500)

        with patch("src.decorators.asyncio.sleep", new=AsyncMock()) as sleep:
            with pytest.raises(BackendUnavailableError):
                await flaky()
        # 4 + 4 = 8; a third sleep would reach 12
        assert sleep.await_count == 2
        assert calls == 3


class TestTimeoutDecorator:
    """Test with_timeout decorator."""

    async def test_timeout_successful_completion(self):
        """Test that fast functions complete successfully."""
        @with_timeout(timeout_seconds=1.0)
        async def fast_function():
            return "success"

        assert await fast_function() == "success"

    async def test_timeout_raises_error(self):
        """Test that slow functions time out with context."""
        @with_timeout(timeout_seconds=0.05)
        async def slow_function(*, role_name, fingerprint):
            await asyncio.sleep(1.0)

        with pytest.raises(RequestTimeoutError) as exc_info:
            await slow_function(role_name="ner", fingerprint="abc")
        assert exc_info.value.role == "ner"
        assert exc_info.value.fingerprint == "abc"


class TestHandleBackendError:
    """Test SDK exception mapping."""

    async def test_status_401(self):
        """Test 401 maps to UnauthorizedError."""
        @handle_backend_error
        async def call(*, role_name, fingerprint):
            raise status_error(401)

        with pytest.raises(UnauthorizedError) as exc_info:
            await call(role_name="judge", fingerprint="fp")
        assert exc_info.value.role == "judge"

    async def test_status_429_reads_retry_after(self):
        """Test Retry-After header is parsed on 429."""
        @handle_backend_error
        async def call():
            raise status_error(429, headers={"retry-after": "12"})

        with pytest.raises(RateLimitError) as exc_info:
            await call()
        assert exc_info.value.retry_after == 12.0

    async def test_connection_error_is_transient(self):
        """Test dropped connections are retried."""
        @handle_backend_error
        async def call():
            raise openai.APIConnectionError(request=REQUEST)

        with pytest.raises(TransientError):
            await call()

    async def test_sdk_timeout(self):
        """Test SDK timeouts become RequestTimeoutError."""
        @handle_backend_error
        async def call(*, timeout_seconds):
            raise openai.APITimeoutError(request=REQUEST)

        with pytest.raises(RequestTimeoutError):
            await call(timeout_seconds=5)

    async def test_unexpected_error_wrapped(self):
        """Test unknown exceptions become BackendError."""
        @handle_backend_error
        async def call():
            raise KeyError("choices")

        with pytest.raises(BackendError) as exc_info:
            await call()
        assert isinstance(exc_info.value.original_error, KeyError)


class TestParseRetryAfter:
    """Test Retry-After header parsing."""

    def test_seconds(self):
        assert parse_retry_after("30") == 30.0

    def test_missing(self):
        assert parse_retry_after(None) is None

    def test_past_http_date(self):
        """Test a date in the past means no wait."""
        assert parse_retry_after("Wed, 21 Oct 2015 07:28:00 GMT") == 0.0

    def test_garbage_defaults(self):
        assert parse_retry_after("soon") == 60.0


class TestBackendOperation:
    """Test the combined decorator."""

    async def test_retries_mapped_status(self):
        """Test a 503 from the SDK is retried until success."""
        calls = 0

        @backend_operation(timeout_seconds=1.0, max_retries=2, base_delay=0.01)
        async def send():
            nonlocal calls
            calls += 1
            if calls == 1:
                raise status_error(503)
            return "text"

        assert await send() == "text"
        assert calls == 2

    async def test_unauthorized_not_retried(self):
        """Test credential failures are raised at once."""
        calls = 0

        @backend_operation(max_retries=3, base_delay=0.01)
        async def send():
            nonlocal calls
            calls += 1
            raise status_error(401)

        with pytest.raises(UnauthorizedError):
            await send()
        assert calls == 1


class TestPerformanceMonitor:
    """Test PerformanceMonitor timing."""

    async def test_records_duration(self):
        """Test duration is measured."""
        async with PerformanceMonitor("op", warn_threshold_ms=10_000) as monitor:
            await asyncio.sleep(0.01)
        assert monitor.duration_ms >= 0

    async def test_slow_operation_warns(self, caplog):
        """Test slow operations are logged at WARNING."""
        with caplog.at_level("WARNING", logger="src.decorators"):
            async with PerformanceMonitor("slow", warn_threshold_ms=0.0):
                await asyncio.sleep(0.01)
        assert "Slow operation: slow" in caplog.text

    async def test_as_decorator(self):
        """Test use as a decorator."""
        @PerformanceMonitor("wrapped")
        async def work():
            return 5

        assert await work() == 5
