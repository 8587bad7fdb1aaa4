"""
Summary-side entity extraction.

Two extractor backends share one interface: a chat-model extractor that
renders the NER prompt and parses "entity ||| tag" (or JSON) output, and a
deterministic heuristic extractor used offline. Candidates from either are
then checked against the summary text by filter_fabricated.
"""

import json
import logging
import re
from abc import ABC, abstractmethod
from dataclasses import replace
from typing import Any, List, Optional, Sequence, Tuple

from .constants import (
    NerTag,
    POLYSEMOUS_WORDS,
    PipelineDefaults,
    QUOTE_CHARS,
    Role,
    TAG_ALIASES,
)
from .errors import EmptySourceError, MalformedBackendOutputError
from .matching import find_occurrences, normalize
from .models import FiltrationResult, Span, Summary, SummaryEntity
from .prompts import NER_IN_CONTEXT_EXAMPLE, render_ner_prompt

logger = logging.getLogger(__name__)

_FENCE_LINE = re.compile(r"^\s*```[\w-]*\s*$", re.MULTILINE)
_BULLET = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s+")

_ENTITY_KEYS = ("entity", "entity_name", "name", "text", "surface")
_TAG_KEYS = ("tag", "type", "entity_type", "label")


# ============================================================================
# Backend output parsing
# ============================================================================

def normalize_tag(raw: str) -> Optional[NerTag]:
    """
    Map a tag spelling to NerTag.

    Upper-cases, collapses spaces and hyphens to "_", then tries the enum and
    the alias table ("DATA TYPE" -> DATA_TYPE, "HTML or XML TAG" ->
    HTML_XML_TAG). Returns None for anything else.
    """
    key = re.sub(r"[\s\-]+", "_", raw.strip().strip("[]<>:" + QUOTE_CHARS).upper())
    if not key:
        return None
    try:
        return NerTag(key)
    except ValueError:
        return TAG_ALIASES.get(key)


def _json_pairs(text: str) -> Optional[List[Tuple[str, str]]]:
    try:
        data = json.loads(text)
    except ValueError:
        return None
    if not isinstance(data, list):
        return None

    pairs = []
    for item in data:
        if isinstance(item, dict):
            entity = next((item[k] for k in _ENTITY_KEYS if k in item), None)
            tag = next((item[k] for k in _TAG_KEYS if k in item), None)
        elif isinstance(item, (list, tuple)) and len(item) == 2:
            entity, tag = item
        else:
            continue
        if isinstance(entity, str) and isinstance(tag, str):
            pairs.append((entity, tag))
    return pairs


def _line_pairs(text: str) -> List[Tuple[str, str]]:
    pairs = []
    for line in text.splitlines():
        if "|||" not in line:
            continue
        entity, tag = line.rsplit("|||", 1)
        entity = _BULLET.sub("", entity).strip()
        if entity:
            pairs.append((entity, tag.strip()))
    return pairs


def parse_ner_output(text: str) -> List[SummaryEntity]:
    """
    Parse NER backend output into candidate entities.

    Accepts "entity ||| tag" lines or a JSON list of objects/pairs, optionally
    inside a code fence. Entries with unknown tags are dropped with a warning.

    Args:
        text: Raw backend response

    Returns:
        Candidates in response order, without spans

    Raises:
        MalformedBackendOutputError: If non-empty output holds no entry in
            either format
    """
    body = _FENCE_LINE.sub("", text).strip()
    if not body:
        return []

    pairs = _json_pairs(body) if body.startswith("[") else None
    if pairs is None:
        pairs = _line_pairs(body)
        if not pairs:
            raise MalformedBackendOutputError(
                "expected 'entity ||| tag' lines or a JSON list",
                raw_text=text,
                role=Role.NER.value,
            )

    candidates = []
    for surface, raw_tag in pairs:
        tag = normalize_tag(raw_tag)
        if tag is None:
            logger.warning(f"Dropping NER entry '{surface}': unknown tag '{raw_tag}'")
            continue
        candidates.append(SummaryEntity(surface=surface, tag=tag))
    return candidates


# ============================================================================
# Heuristic extraction
# ============================================================================

_QUOTED = re.compile(r"[`\"'‘“]([A-Za-z_$][\w$.]*(?:\(\)|\[\])?)[`\"'’”]")
_CALL = re.compile(r"(?<![\w$.])([A-Za-z_$][\w$]*)(\(\)|\[\])")
_DOTTED = re.compile(r"(?<![\w$.])([A-Za-z_$][\w$]+(?:\.[A-Za-z_$][\w$]+)+)(?![\w$])")
_WORD = re.compile(r"(?<![\w$])([A-Za-z_$][\w$]*)(?![\w$])")

_CAMEL = re.compile(r"^[a-z][a-z0-9]*[A-Z]")
_PASCAL = re.compile(r"^[A-Z][a-z0-9]+[A-Z]")
_SNAKE = re.compile(r"[A-Za-z0-9]_[A-Za-z0-9]")
_ALL_CAPS = re.compile(r"^[A-Z][A-Z0-9_]*$")


def _code_shaped(word: str) -> bool:
    return bool(
        _CAMEL.match(word)
        or _PASCAL.match(word)
        or _SNAKE.search(word)
        or word.startswith("_")
    )


def _shape_tag(surface: str) -> NerTag:
    if surface.endswith("()"):
        return NerTag.FUNCTION
    bare = normalize(surface)
    if surface.endswith("[]"):
        return NerTag.VARIABLE
    if "." in bare:
        return NerTag.LIBRARY
    if bare.startswith("_") or (_ALL_CAPS.match(bare) and len(bare) > 1):
        return NerTag.VARIABLE
    if bare[:1].isupper() and any(c.islower() for c in bare):
        return NerTag.CLASS
    return NerTag.VARIABLE


def extract_entities_heuristic(summary: Summary) -> List[SummaryEntity]:
    """
    Rule-based, deterministic summary NER.

    Picks up quoted or backticked identifiers, names followed by "()" or
    "[]", dotted paths and camelCase/PascalCase/snake_case words. Tags come
    from shape alone, so natural-language tags are never produced.

    Args:
        summary: Summary to scan

    Returns:
        Candidates with bare surfaces, ordered by first position, no repeats
    """
    text = summary.text
    claimed: List[Span] = []
    found: List[Tuple[int, str, NerTag]] = []

    def claim(start: int, end: int, surface: str) -> None:
        if any(s < end and start < e for s, e in claimed):
            return
        claimed.append((start, end))
        found.append((start, normalize(surface), _shape_tag(surface)))

    for match in _QUOTED.finditer(text):
        claim(*match.span(1), match.group(1))
    for match in _CALL.finditer(text):
        claim(match.start(1), match.end(2), match.group(0))
    for match in _DOTTED.finditer(text):
        claim(*match.span(1), match.group(1))
    for match in _WORD.finditer(text):
        if _code_shaped(match.group(1)):
            claim(*match.span(1), match.group(1))

    entities = []
    seen = set()
    for _, surface, tag in sorted(found, key=lambda f: f[0]):
        if surface and surface not in seen:
            seen.add(surface)
            entities.append(SummaryEntity(surface=surface, tag=tag))
    return entities


# ============================================================================
# Extractor backends
# ============================================================================

class EntityExtractor(ABC):
    """
    Source of candidate summary entities.

    Attributes:
        trusted: True when candidates come from human annotation; the
            pipeline then skips the polysemy guard.
    """

    name: str = "extractor"
    trusted: bool = False

    @abstractmethod
    async def extract(self, summary: Summary) -> List[SummaryEntity]:
        """Return candidate entities for ``summary``."""


class HeuristicEntityExtractor(EntityExtractor):
    name = "heuristic"

    async def extract(self, summary: Summary) -> List[SummaryEntity]:
        return extract_entities_heuristic(summary)


class ChatEntityExtractor(EntityExtractor):
    """Extractor backed by a chat-completion client (live or replay)."""

    name = "llm"

    def __init__(self, client: Any, in_context_example: str = NER_IN_CONTEXT_EXAMPLE):
        """
        Args:
            client: Object exposing ``async complete(role, prompt) -> str``
            in_context_example: Example block shown in the NER prompt
        """
        self.client = client
        self.in_context_example = in_context_example

    async def extract(self, summary: Summary) -> List[SummaryEntity]:
        prompt = render_ner_prompt(summary.text, self.in_context_example)
        response = await self.client.complete(Role.NER, prompt)
        return parse_ner_output(response)


async def extract_entities(
    summary: Summary,
    backend: EntityExtractor,
    max_attempts: int = PipelineDefaults.MAX_OUTPUT_ATTEMPTS,
) -> List[SummaryEntity]:
    """
    Run an extractor backend over a summary.

    Args:
        summary: Summary to tag
        backend: Extractor to use
        max_attempts: Tries allowed when the backend output does not parse

    Returns:
        Pre-filtration candidates

    Raises:
        EmptySourceError: If the summary is blank
        MalformedBackendOutputError: If every attempt produced unparseable output
        BackendError: Transport failures from a remote backend
    """
    if not summary.text or not summary.text.strip():
        raise EmptySourceError("summary", summary.id)

    last_error: Optional[MalformedBackendOutputError] = None
    for attempt in range(1, max_attempts + 1):
        try:
            return await backend.extract(summary)
        except MalformedBackendOutputError as e:
            last_error = e
            logger.warning(
                f"NER output for '{summary.id}' unparseable "
                f"(attempt {attempt}/{max_attempts}): {e.message}"
            )
    raise last_error


# ============================================================================
# Filtration
# ============================================================================

def _code_formatted(text: str, span: Span) -> bool:
    """True when the occurrence is quoted, backticked, called or parenthesized."""
    start, end = span
    before = text[start - 1] if start > 0 else ""
    after = text[end] if end < len(text) else ""
    return (
        (before != "" and before in QUOTE_CHARS)
        or (after != "" and after in QUOTE_CHARS)
        or text[end:end + 2] in ("()", "[]")
        or (before == "(" and after == ")")
    )


def filter_fabricated(
    candidates: Sequence[SummaryEntity],
    summary: Summary,
    case_insensitive: bool = False,
    polysemy_guard: bool = True,
) -> FiltrationResult:
    """
    Drop candidates that do not occur in the summary text.

    A candidate is kept iff its normalized surface occurs at an identifier
    boundary; kept entities get a span for every occurrence. With the
    polysemy guard on, bare English words from POLYSEMOUS_WORDS survive only
    when at least one occurrence is code-formatted.

    Args:
        candidates: Extractor output
        summary: Summary the candidates were extracted from
        case_insensitive: Match surfaces with IGNORECASE
        polysemy_guard: Apply the code-formatting requirement to common words

    Returns:
        FiltrationResult with kept, fabricated and polysemous lists
    """
    text = summary.text
    result = FiltrationResult(kept=[], fabricated=[], polysemous=[])

    for candidate in candidates:
        name = normalize(candidate.surface)
        spans = find_occurrences(name, text, case_insensitive) if name else []

        if not spans:
            result.fabricated.append(candidate)
            continue

        if (
            polysemy_guard
            and name.lower() in POLYSEMOUS_WORDS
            and not any(_code_formatted(text, span) for span in spans)
        ):
            result.polysemous.append(candidate)
            continue

        result.kept.append(replace(candidate, spans=tuple(spans)))

    if result.fabricated:
        names = ", ".join(e.surface for e in result.fabricated)
        logger.info(f"Filtered {len(result.fabricated)} fabricated entities from '{summary.id}': {names}")
    return result
