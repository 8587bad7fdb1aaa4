"""
Decorators for backend error handling, retry logic and timeouts.

Wrap single chat-completion requests so SDK and transport exceptions surface
as pipeline errors carrying the request's role and fingerprint, and transient
failures are retried with bounded exponential backoff.
"""

import asyncio
import logging
from datetime import datetime, timezone
from email.utils import parsedate_to_datetime
from functools import wraps
from typing import Callable, TypeVar, Optional

import openai

from .constants import BackendDefaults
from .errors import (
    BackendError,
    BackendUnavailableError,
    EtfError,
    RateLimitError,
    RateLimitExhaustedError,
    RequestTimeoutError,
    TransientError,
    map_status_code_to_error,
)
from .log_sanitizer import sanitize_log_message

T = TypeVar('T')

logger = logging.getLogger(__name__)


def _request_context(kwargs: dict) -> dict:
    """role/fingerprint of the wrapped call, when passed by keyword."""
    return {
        'role': kwargs.get('role_name') or kwargs.get('role'),
        'fingerprint': kwargs.get('fingerprint'),
    }


def parse_retry_after(value: Optional[str]) -> Optional[float]:
    """
    Seconds to wait from a Retry-After header.

    Accepts delta-seconds or an HTTP-date; unparseable values fall back to
    60 seconds.
    """
    if not value:
        return None
    try:
        return max(float(value), 0.0)
    except (TypeError, ValueError):
        pass
    try:
        when = parsedate_to_datetime(value)
        return max((when - datetime.now(timezone.utc)).total_seconds(), 0.0)
    except (TypeError, ValueError, IndexError):
        logger.warning(f"Could not parse Retry-After header: {value}")
        return 60.0


def handle_backend_error(func: Callable[..., T]) -> Callable[..., T]:
    """
    Decorator mapping openai/httpx exceptions to BackendError subclasses.

    Status-coded responses go through map_status_code_to_error (honouring
    Retry-After on 429); connection drops become TransientError; SDK
    timeouts become RequestTimeoutError.

    Example:
        @handle_backend_error
        async def _send(self, *, role_name: str, fingerprint: str, prompt: str):
            ...
    """
    @wraps(func)
    async def wrapper(*args, **kwargs):
        context = _request_context(kwargs)
        try:
            return await func(*args, **kwargs)
        except EtfError:
            raise
        except openai.APITimeoutError as e:
            raise RequestTimeoutError(
                timeout_seconds=kwargs.get('timeout_seconds') or 0,
                original_error=e,
                **context
            )
        except openai.APIConnectionError as e:
            logger.warning(f"Connection failure in {func.__name__}: {sanitize_log_message(str(e))}")
            raise TransientError(original_error=e, **context)
        except openai.APIStatusError as e:
            retry_after = None
            if e.status_code == 429 and e.response is not None:
                retry_after = parse_retry_after(e.response.headers.get('retry-after'))
            error = map_status_code_to_error(
                e.status_code, original_error=e, retry_after=retry_after, **context
            )
            logger.error(f"Backend error in {func.__name__}: {error}")
            raise error
        except Exception as e:
            logger.error(
                f"Unexpected error in {func.__name__}: {sanitize_log_message(str(e))}",
                exc_info=True
            )
            raise BackendError(
                message=f"Unexpected error in {func.__name__}: {e}",
                original_error=e,
                **context
            )

    return wrapper


def retry_on_transient_error(
    max_retries: int = BackendDefaults.MAX_RETRIES,
    base_delay: float = BackendDefaults.RETRY_BASE_DELAY,
    exponential_base: float = 2.0,
    max_delay: float = BackendDefaults.RETRY_MAX_DELAY,
    max_total_delay: float = BackendDefaults.RETRY_CEILING,
) -> Callable[[Callable[..., T]], Callable[..., T]]:
    """
    Decorator retrying rate-limit and transient failures with backoff.

    Retry-After wins over the computed delay. Retries stop when either
    ``max_retries`` is spent or the next sleep would push the total past
    ``max_total_delay``; the error is then escalated to
    RateLimitExhaustedError or BackendUnavailableError.

    Args:
        max_retries: Retry attempts after the first try
        base_delay: Delay before the first retry, in seconds
        exponential_base: Backoff multiplier
        max_delay: Cap on a single delay
        max_total_delay: Cap on the summed delays of one call
    """
    def decorator(func: Callable[..., T]) -> Callable[..., T]:
        @wraps(func)
        async def wrapper(*args, **kwargs):
            slept = 0.0
            attempt = 0

            while True:
                try:
                    return await func(*args, **kwargs)
                except (RateLimitError, TransientError) as e:
                    if isinstance(e, RateLimitError) and e.retry_after:
                        delay = min(e.retry_after, max_delay)
                    else:
                        delay = min(base_delay * (exponential_base ** attempt), max_delay)

                    if attempt >= max_retries or slept + delay > max_total_delay:
                        logger.error(
                            f"Giving up on {func.__name__} after {attempt + 1} attempts "
                            f"({slept:.1f}s spent waiting)"
                        )
                        context = {'role': e.role, 'fingerprint': e.fingerprint}
                        if isinstance(e, RateLimitError):
                            raise RateLimitExhaustedError(
                                attempts=attempt + 1, original_error=e, **context
                            )
                        raise BackendUnavailableError(
                            reason=e.message, original_error=e, **context
                        )

                    attempt += 1
                    logger.warning(
                        f"Transient error in {func.__name__} (attempt {attempt}/{max_retries}): "
                        f"{e}. Retrying in {delay:.1f}s..."
                    )
                    await asyncio.sleep(delay)
                    slept += delay

        return wrapper
    return decorator


def with_timeout(timeout_seconds: float = BackendDefaults.REQUEST_TIMEOUT) -> Callable[[Callable[..., T]], Callable[..., T]]:
    """Decorator bounding one attempt with asyncio.wait_for."""
    def decorator(func: Callable[..., T]) -> Callable[..., T]:
        @wraps(func)
        async def wrapper(*args, **kwargs):
            try:
                return await asyncio.wait_for(func(*args, **kwargs), timeout=timeout_seconds)
            except asyncio.TimeoutError as e:
                logger.error(f"Timeout after {timeout_seconds}s in {func.__name__}")
                raise RequestTimeoutError(
                    timeout_seconds=timeout_seconds,
                    original_error=e,
                    **_request_context(kwargs)
                )

        return wrapper
    return decorator


def backend_operation(
    timeout_seconds: float = BackendDefaults.REQUEST_TIMEOUT,
    max_retries: int = BackendDefaults.MAX_RETRIES,
    base_delay: float = BackendDefaults.RETRY_BASE_DELAY,
    max_delay: float = BackendDefaults.RETRY_MAX_DELAY,
    max_total_delay: float = BackendDefaults.RETRY_CEILING,
) -> Callable[[Callable[..., T]], Callable[..., T]]:
    """
    Convenience decorator combining retry, timeout and error handling.

    Order, outermost first:
    1. Retry on transient errors
    2. Per-attempt timeout
    3. Error mapping

    Example:
        self._send = backend_operation(timeout_seconds=60)(self._send_once)
    """
    def decorator(func: Callable[..., T]) -> Callable[..., T]:
        decorated = handle_backend_error(func)
        decorated = with_timeout(timeout_seconds)(decorated)
        decorated = retry_on_transient_error(
            max_retries=max_retries,
            base_delay=base_delay,
            max_delay=max_delay,
            max_total_delay=max_total_delay,
        )(decorated)
        return decorated

    return decorator


class PerformanceMonitor:
    """
    Async context manager and decorator timing an operation.

    Logs at WARNING when the operation exceeds ``warn_threshold_ms``.
    """

    def __init__(self, operation_name: str, warn_threshold_ms: float = 1000.0):
        self.operation_name = operation_name
        self.warn_threshold_ms = warn_threshold_ms
        self.start_time: Optional[float] = None
        self.duration_ms: Optional[float] = None

    async def __aenter__(self):
        self.start_time = asyncio.get_running_loop().time()
        return self

    async def __aexit__(self, exc_type, exc_val, exc_tb):
        self.duration_ms = (asyncio.get_running_loop().time() - self.start_time) * 1000

        if self.duration_ms > self.warn_threshold_ms:
            logger.warning(
                f"Slow operation: {self.operation_name} took {self.duration_ms:.1f}ms "
                f"(threshold: {self.warn_threshold_ms:.1f}ms)"
            )
        else:
            logger.debug(f"Operation {self.operation_name} completed in {self.duration_ms:.1f}ms")

    def __call__(self, func: Callable[..., T]) -> Callable[..., T]:
        @wraps(func)
        async def wrapper(*args, **kwargs):
            async with PerformanceMonitor(func.__name__, self.warn_threshold_ms):
                return await func(*args, **kwargs)
        return wrapper
