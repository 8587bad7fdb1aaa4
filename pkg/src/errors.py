"""
Custom exception classes for the entity tracing pipeline.

Provides structured errors for source analysis, model backends, dataset
loading and metric computation, each carrying enough context to diagnose
a failing record without re-running it.
"""

from dataclasses import dataclass
from typing import Optional, Any


class EtfError(Exception):
    """
    Base exception for every pipeline error.

    Attributes:
        status_code: HTTP status code when the error came from a backend response
        message: Human-readable error message
        original_error: The original exception that was caught
        details: Additional error details
    """

    def __init__(
        self,
        message: str = "Entity tracing error",
        status_code: Optional[int] = None,
        original_error: Optional[Exception] = None,
        details: Optional[Any] = None
    ):
        self.status_code = status_code
        self.message = message
        self.original_error = original_error
        self.details = details
        super().__init__(message)

    def __str__(self) -> str:
        """String representation of the error."""
        if self.status_code:
            return f"[{self.status_code}] {self.message}"
        return self.message

    def to_dict(self) -> dict:
        """Convert error to dictionary for JSON serialization."""
        return {
            'error': self.__class__.__name__,
            'status_code': self.status_code,
            'message': self.message,
            'details': str(self.details) if self.details else None
        }


# ============================================================================
# Source analysis
# ============================================================================

class EmptySourceError(EtfError):
    """Raised when a code snippet or summary is empty after trimming."""

    def __init__(self, what: str = "source", unit_id: Optional[str] = None):
        message = f"Empty {what}; nothing to analyse."
        if unit_id:
            message = f"Empty {what} for unit '{unit_id}'; nothing to analyse."
        super().__init__(message=message, details={'unit_id': unit_id})


@dataclass(frozen=True)
class LexError:
    """
    A recoverable tokenizer problem.

    kind is one of UnterminatedString, UnterminatedComment or
    InvalidCharacter. Lexing continues after the offending line.
    """

    kind: str
    line: int
    column: int
    text: str = ""

    def __str__(self) -> str:
        return f"{self.kind} at line {self.line}, column {self.column}"


class JavaParseError(EtfError):
    """
    Raised when the Java parser rejects a snippet.

    Carries the first offending token so callers can report it before
    falling back to lexical extraction.
    """

    def __init__(
        self,
        description: str,
        token: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
        original_error: Optional[Exception] = None
    ):
        self.token = token
        self.line = line
        self.column = column
        location = f" at line {line}, column {column}" if line is not None else ""
        near = f" near '{token}'" if token else ""
        super().__init__(
            message=f"Java parse error{location}{near}: {description}",
            original_error=original_error,
            details={'token': token, 'line': line, 'column': column}
        )


class ConfigurationError(EtfError):
    """Raised for invalid or incomplete run configuration."""

    def __init__(self, message: str, details: Optional[Any] = None):
        super().__init__(message=message, details=details)


class InputDecodeError(EtfError):
    """Raised when an input file is not UTF-8 text or not valid JSON."""

    def __init__(self, path: Any, reason: str, original_error: Optional[Exception] = None):
        super().__init__(
            message=f"Cannot read {path}: {reason}",
            original_error=original_error,
            details={'path': str(path)}
        )


# ============================================================================
# Model backends
# ============================================================================

class BackendError(EtfError):
    """
    Base for errors raised while talking to a model backend.

    Attributes:
        role: Model role of the failing request (generate, ner, judge, direct)
        fingerprint: Request fingerprint (hash of role + rendered prompt)
    """

    def __init__(
        self,
        message: str = "Model backend error",
        status_code: Optional[int] = None,
        role: Optional[str] = None,
        fingerprint: Optional[str] = None,
        original_error: Optional[Exception] = None,
        details: Optional[dict] = None
    ):
        self.role = role
        self.fingerprint = fingerprint
        merged = {'role': role, 'fingerprint': fingerprint}
        if details:
            merged.update(details)
        super().__init__(
            message=message,
            status_code=status_code,
            original_error=original_error,
            details=merged
        )

    def __str__(self) -> str:
        base = super().__str__()
        if self.role:
            base = f"{base} (role={self.role}"
            if self.fingerprint:
                base = f"{base}, fingerprint={self.fingerprint[:12]}"
            base = f"{base})"
        return base


class BackendUnavailableError(BackendError):
    """Raised when the backend cannot be reached after all retries."""

    def __init__(self, reason: str = "connection failed", **kwargs):
        super().__init__(
            message=f"Model backend unavailable: {reason}",
            **kwargs
        )


class UnauthorizedError(BackendError):
    """
    Raised when the backend rejects the credential (HTTP 401/403).

    This can occur when:
    - The API key environment variable holds an expired or wrong key
    - The key lacks access to the configured model
    """

    def __init__(self, status_code: int = 401, **kwargs):
        super().__init__(
            message=(
                "Backend rejected the credential. Check the environment variable "
                "named by api_key_env."
            ),
            status_code=status_code,
            **kwargs
        )


class RateLimitError(BackendError):
    """
    Raised when the backend answers HTTP 429.

    Includes retry-after information when the server sent it.
    """

    def __init__(self, retry_after: Optional[float] = None, **kwargs):
        if retry_after:
            message = f"Rate limit exceeded. Please retry after {retry_after} seconds."
        else:
            message = "Rate limit exceeded. Please retry after a brief delay."
        super().__init__(
            message=message,
            status_code=429,
            details={'retry_after': retry_after},
            **kwargs
        )
        self.retry_after = retry_after


class RateLimitExhaustedError(BackendError):
    """Raised when rate limiting persisted through every retry."""

    def __init__(self, attempts: int, **kwargs):
        super().__init__(
            message=f"Rate limit still exceeded after {attempts} attempts.",
            status_code=429,
            details={'attempts': attempts},
            **kwargs
        )


class TransientError(BackendError):
    """
    Raised for temporary backend errors (HTTP 500, 502, 503, 504) and
    dropped connections. These are retried automatically.
    """

    def __init__(self, status_code: Optional[int] = None, **kwargs):
        if status_code:
            message = (
                f"Model backend temporarily unavailable (HTTP {status_code}). "
                "This error is transient and will be retried automatically."
            )
        else:
            message = "Transient transport failure talking to the model backend."
        super().__init__(message=message, status_code=status_code, **kwargs)


class RequestTimeoutError(BackendError):
    """Raised when a single request exceeds the configured timeout."""

    def __init__(self, timeout_seconds: float = 60.0, **kwargs):
        super().__init__(
            message=f"Request timeout after {timeout_seconds} seconds.",
            status_code=408,
            details={'timeout_seconds': timeout_seconds},
            **kwargs
        )


class MissingFixtureError(BackendError):
    """Raised in replay mode when no canned response matches a request."""

    def __init__(self, role: str, fingerprint: str, store_path: Optional[str] = None):
        super().__init__(
            message=(
                f"No replay fixture for this request in {store_path or 'fixture store'}. "
                "Record it in live mode or add the file by hand."
            ),
            role=role,
            fingerprint=fingerprint,
            details={'store_path': store_path}
        )


class MalformedBackendOutputError(BackendError):
    """Raised when a backend response cannot be parsed into the expected shape."""

    def __init__(self, reason: str, raw_text: str = "", **kwargs):
        self.raw_text = raw_text
        super().__init__(
            message=f"Malformed backend output: {reason}",
            details={'raw_text': raw_text[:200]},
            **kwargs
        )


class UnparseableVerdictError(BackendError):
    """Raised when a judge response names none of the three labels."""

    def __init__(self, raw_text: str = "", **kwargs):
        self.raw_text = raw_text
        super().__init__(
            message="Judge response contains no CORRECT/INCORRECT/IRRELEVANT label.",
            details={'raw_text': raw_text[:200]},
            **kwargs
        )


class OracleMissError(EtfError):
    """Raised when the gold-label oracle has no row for a tuple's entity."""

    def __init__(self, record_id: str, entity: str):
        super().__init__(
            message=f"No gold annotation for entity '{entity}' in record '{record_id}'.",
            details={'record_id': record_id, 'entity': entity}
        )


# ============================================================================
# Dataset and metrics
# ============================================================================

class DatasetError(EtfError):
    """Base for dataset loading errors."""


class DatasetParseError(DatasetError):
    """Raised when a dataset line is not valid JSON or misses fields."""

    def __init__(self, line: int, reason: str, original_error: Optional[Exception] = None):
        self.line = line
        super().__init__(
            message=f"Line {line}: {reason}",
            original_error=original_error,
            details={'line': line}
        )


class InvariantViolationError(DatasetError):
    """Raised when a record breaks a dataset consistency rule."""

    def __init__(self, line: int, rule: str, record_id: Optional[str] = None):
        self.line = line
        self.rule = rule
        super().__init__(
            message=f"Line {line}: record '{record_id}' violates rule: {rule}",
            details={'line': line, 'rule': rule, 'record_id': record_id}
        )


class AlignmentError(EtfError):
    """Raised when a prediction has no aligned gold row."""

    def __init__(self, key: Any):
        super().__init__(
            message=f"No gold row aligned with prediction key {key}",
            details={'key': key}
        )


class LengthMismatchError(EtfError):
    """Raised when two label sequences that must align differ in length."""

    def __init__(self, left: int, right: int):
        super().__init__(
            message=f"Label sequences differ in length: {left} vs {right}",
            details={'left': left, 'right': right}
        )


def map_status_code_to_error(
    status_code: int,
    original_error: Optional[Exception] = None,
    **kwargs
) -> BackendError:
    """
    Map HTTP status code to appropriate error class.

    Args:
        status_code: HTTP status code from the chat-completion endpoint
        original_error: The original exception
        **kwargs: role, fingerprint, retry_after, timeout_seconds

    Returns:
        Appropriate BackendError subclass instance
    """
    retry_after = kwargs.pop('retry_after', None)
    timeout_seconds = kwargs.pop('timeout_seconds', None)

    if status_code in (401, 403):
        return UnauthorizedError(
            status_code=status_code, original_error=original_error, **kwargs
        )
    elif status_code == 408:
        return RequestTimeoutError(
            timeout_seconds=timeout_seconds or 0,
            original_error=original_error,
            **kwargs
        )
    elif status_code == 429:
        return RateLimitError(
            retry_after=retry_after, original_error=original_error, **kwargs
        )
    elif status_code in (500, 502, 503, 504):
        return TransientError(
            status_code=status_code, original_error=original_error, **kwargs
        )
    else:
        return BackendError(
            message=f"Model backend error: HTTP {status_code}",
            status_code=status_code,
            original_error=original_error,
            **kwargs
        )
