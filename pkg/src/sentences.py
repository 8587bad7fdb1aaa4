"""
Sentence segmentation for model-written summaries.

Base boundaries come from NLTK's Punkt tokenizer. On top of them, no cut is
made inside fenced code, inline backtick spans, parentheticals or double
quotes, after a list number, or before a lowercase word. Line breaks split
list items, headings ending in ':' and paragraphs.
"""

import logging
import re
from typing import List, Set, Tuple

from nltk.tokenize.punkt import PunktParameters, PunktSentenceTokenizer

from .constants import PUNKT_ABBREVIATIONS
from .models import Sentence, SentenceList, Summary

logger = logging.getLogger(__name__)

_FENCE = re.compile(r"```[\s\S]*?(?:```|$)")
_INLINE_CODE = re.compile(r"`[^`\n]*`")
_PARENS = re.compile(r"\((?:[^()\n]|\([^()\n]*\))*\)")
_QUOTED = re.compile(r"\"[^\"\n]*\"|“[^”\n]*”")

_LIST_MARKER = re.compile(r"^\s*(?:[-*•+]|\d+[.)]|[a-zA-Z][.)])\s+")
# "1." or "**2." opening a line is a list number, not a sentence end
_LIST_NUMBER = re.compile(r"\s*[*_#>]*\s*(?:\d+|[a-zA-Z])")
_NEXT_CHAR = re.compile(r"[ \t]*(\S)")


def _punkt() -> PunktSentenceTokenizer:
    # untrained, so boundaries never depend on downloaded model data
    params = PunktParameters()
    params.abbrev_types = set(PUNKT_ABBREVIATIONS)
    return PunktSentenceTokenizer(params)


_PUNKT = _punkt()


def _protected_ranges(text: str) -> List[Tuple[int, int]]:
    ranges = [m.span() for m in _FENCE.finditer(text)]
    for pattern in (_INLINE_CODE, _PARENS, _QUOTED):
        ranges += [m.span() for m in pattern.finditer(text)]
    return ranges


def _inside(offset: int, ranges: List[Tuple[int, int]]) -> bool:
    return any(start <= offset < end for start, end in ranges)


def _punkt_cuts(text: str, protected: List[Tuple[int, int]]) -> Set[int]:
    cuts = set()
    spans = list(_PUNKT.span_tokenize(text))

    for _, end in spans[:-1]:
        terminal = max(text.rfind(mark, 0, end) for mark in ".!?")
        if terminal < 0 or _inside(terminal, protected):
            continue
        line_start = text.rfind("\n", 0, terminal) + 1
        if _LIST_NUMBER.fullmatch(text[line_start:terminal]):
            continue
        following = _NEXT_CHAR.match(text, end)
        if following and following.group(1).islower():
            continue
        cuts.add(end)

    return cuts


def _line_cuts(text: str, fences: List[Tuple[int, int]]) -> Set[int]:
    cuts = set()
    lines = text.split("\n")
    offset = 0

    for i, line in enumerate(lines[:-1]):
        newline = offset + len(line)
        offset = newline + 1
        if _inside(newline, fences):
            continue

        following = lines[i + 1]
        if (
            not line.strip()
            or not following.strip()
            or line.rstrip().endswith(":")
            or _LIST_MARKER.match(line)
            or _LIST_MARKER.match(following)
        ):
            cuts.add(newline)

    return cuts


def segment_sentences(summary: Summary) -> SentenceList:
    """
    Split a summary into sentences.

    Args:
        summary: Summary to segment

    Returns:
        SentenceList whose ranges are ordered, disjoint and trimmed of
        surrounding whitespace; together they cover every non-whitespace
        character of the text
    """
    text = summary.text
    if not text.strip():
        return SentenceList([])

    fences = [m.span() for m in _FENCE.finditer(text)]
    protected = _protected_ranges(text)

    cuts = _punkt_cuts(text, protected) | _line_cuts(text, fences)
    # a fenced block is always a sentence of its own
    cuts |= {edge for span in fences for edge in span}
    bounds = sorted(cuts | {0, len(text)})

    sentences = []
    for start, end in zip(bounds, bounds[1:]):
        chunk = text[start:end]
        stripped = chunk.strip()
        if not stripped:
            continue
        lead = len(chunk) - len(chunk.lstrip())
        s = start + lead
        sentences.append(Sentence(text=stripped, start=s, end=s + len(stripped)))

    logger.debug(f"Segmented '{summary.id}' into {len(sentences)} sentences")
    return SentenceList(sentences)
