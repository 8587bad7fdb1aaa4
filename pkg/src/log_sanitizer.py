"""
Log sanitization for backend diagnostics.

Chat-completion errors echo request headers and bodies; these helpers redact
API keys and bearer tokens before anything reaches a log line, and clip long
prompt or response text.
"""

import re


# Key/value shapes that carry credentials
SENSITIVE_PATTERNS = [
    (re.compile(r'\bsk-[A-Za-z0-9_\-]{8,}'), '***REDACTED***'),
    (re.compile(r'(api[_-]?key["\']?\s*[:=]\s*["\']?)([^"\'\s,}]+)', re.IGNORECASE), r'\1***REDACTED***'),
    (re.compile(r'(bearer\s+)([A-Za-z0-9\-._~+/]+=*)', re.IGNORECASE), r'\1***REDACTED***'),
    (re.compile(r'(authorization["\']?\s*[:=]\s*["\']?)([^"\'\s,}]+)', re.IGNORECASE), r'\1***REDACTED***'),
    (re.compile(r'(ETF_API_KEY\s*=\s*)(\S+)'), r'\1***REDACTED***'),
]


def sanitize_log_message(message: str) -> str:
    """
    Redact credentials from a log message.

    Args:
        message: Text about to be logged

    Returns:
        The message with keys and tokens replaced by ***REDACTED***
    """
    if not message:
        return message

    sanitized = message
    for pattern, replacement in SENSITIVE_PATTERNS:
        sanitized = pattern.sub(replacement, sanitized)
    return sanitized


def clip(text: str, limit: int = 200) -> str:
    """Single-line, length-limited view of prompt or response text."""
    flat = " ".join((text or "").split())
    return flat if len(flat) <= limit else f"{flat[:limit]}..."


def safe_log_error(error: Exception, context: str = "") -> str:
    """
    Build a loggable description of an exception.

    Args:
        error: The exception
        context: Prefix such as "NER request failed"
    """
    sanitized = sanitize_log_message(str(error))
    error_type = type(error).__name__
    if context:
        return f"{context}: {error_type}: {sanitized}"
    return f"{error_type}: {sanitized}"
