"""
Summary-to-code entity matching.

Maps post-filtration summary entities to code entities by exact name at
identifier boundaries, and partitions them into mapped, unmapped (ungrounded)
and natural-language sets.
"""

import logging
import re
from functools import lru_cache
from typing import Iterable, List, Optional

from .constants import (
    CodeEntityKind,
    IDENTIFIER_CHARS,
    KIND_PREFERENCE,
    NerTag,
    QUOTE_CHARS,
    TAG_TO_KIND,
)
from .models import CodeEntity, CodeEntitySet, MatchResult, Span, SummaryEntity

logger = logging.getLogger(__name__)

_IDENTIFIER_CHAR = re.compile(IDENTIFIER_CHARS)
_INTEGER = re.compile(r"^([+-]?)(\d[\d_]*)[lL]?$")


@lru_cache(maxsize=4096)
def boundary_pattern(name: str, case_insensitive: bool = False) -> "re.Pattern[str]":
    """
    Compile a pattern matching ``name`` only where it is not glued to
    identifier characters.

    Edges of ``name`` that are themselves non-identifier characters (quotes,
    a leading "-") need no guard.
    """
    left = rf"(?<!{IDENTIFIER_CHARS})" if _IDENTIFIER_CHAR.match(name[0]) else ""
    right = rf"(?!{IDENTIFIER_CHARS})" if _IDENTIFIER_CHAR.match(name[-1]) else ""
    flags = re.IGNORECASE if case_insensitive else 0
    return re.compile(f"{left}{re.escape(name)}{right}", flags)


def find_occurrences(name: str, text: str, case_insensitive: bool = False) -> List[Span]:
    """All (start, end) ranges of ``name`` in ``text`` at identifier boundaries."""
    if not name:
        return []
    return [m.span() for m in boundary_pattern(name, case_insensitive).finditer(text)]


def normalize(surface: str) -> str:
    """
    Canonical form of a summary surface.

    Strips surrounding backticks and straight/curly quotes, then exactly one
    trailing "()" or "[]". Case is preserved.

    Examples:
        "`getJobID()`" -> "getJobID"
        "args[]" -> "args"
    """
    text = surface.strip().strip(QUOTE_CHARS).strip()
    if text.endswith("()") or text.endswith("[]"):
        text = text[:-2]
    return text.strip()


def _same_name(a: str, b: str, case_insensitive: bool) -> bool:
    return a.casefold() == b.casefold() if case_insensitive else a == b


def _pick_kind(candidates: List[CodeEntity], tag: NerTag) -> CodeEntity:
    agreeing = TAG_TO_KIND.get(tag)
    for entity in candidates:
        if entity.kind == agreeing:
            return entity
    for kind in KIND_PREFERENCE:
        for entity in candidates:
            if entity.kind == kind:
                return entity
    return candidates[0]


def match_entity(
    entity: SummaryEntity,
    code: CodeEntitySet,
    case_insensitive: bool = False,
) -> Optional[CodeEntity]:
    """
    Find the code entity a summary entity refers to.

    Args:
        entity: Post-filtration summary entity
        code: Entities extracted from the snippet
        case_insensitive: Compare names with casefold

    Returns:
        Matching CodeEntity, or None when the entity is ungrounded. KEYWORD
        entities never match. When several kinds share the name, the kind the
        summary tag agrees with wins, otherwise KIND_PREFERENCE order.
    """
    name = normalize(entity.surface)
    if not name:
        return None

    candidates = [
        e for e in code.entities
        if e.kind != CodeEntityKind.KEYWORD and _same_name(e.name, name, case_insensitive)
    ]
    if not candidates:
        return None
    return _pick_kind(candidates, entity.tag)


def _as_int(text: str) -> Optional[int]:
    match = _INTEGER.match(text.strip())
    if not match:
        return None
    sign, digits = match.groups()
    value = int(digits.replace("_", ""))
    return -value if sign == "-" else value


def _match_numeric(entity: SummaryEntity, code: CodeEntitySet) -> Optional[CodeEntity]:
    wanted = _as_int(normalize(entity.surface))
    if wanted is None:
        return None
    for candidate in code.entities:
        if candidate.kind == CodeEntityKind.VALUE and _as_int(candidate.name) == wanted:
            return candidate
    return None


def partition(
    entities: Iterable[SummaryEntity],
    code: CodeEntitySet,
    case_insensitive: bool = False,
) -> MatchResult:
    """
    Split summary entities into mapped, unmapped and natural-language sets.

    Natural-language tags are exempt from grounding. VALUE-tagged entities
    that miss on name also match integer literals of equal value ("1L",
    "1_000", "+1").
    """
    result = MatchResult()

    for entity in entities:
        if not entity.is_code:
            result.nl_entities.append(entity)
            continue

        match = match_entity(entity, code, case_insensitive)
        if match is None and entity.tag == NerTag.VALUE:
            match = _match_numeric(entity, code)

        if match is None:
            result.unmapped.append(entity)
        else:
            result.mapped.append((entity, match))

    logger.debug(
        f"Partitioned {result.total} entities for '{code.unit_id}': "
        f"{len(result.mapped)} mapped, {len(result.unmapped)} unmapped, "
        f"{len(result.nl_entities)} natural-language"
    )
    return result
