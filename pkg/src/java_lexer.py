"""
Regex-driven Java tokenizer.

Produces identifier, keyword, literal, operator, separator and comment tokens
with line/column positions. Comments are kept so downstream analysis can see
them; whitespace is not emitted but every token records its source offset, so
the original text can be rebuilt exactly from the token stream.

Unterminated strings and block comments are reported as LexError values and
lexing resumes on the next line.
"""

import bisect
import logging
import re
from dataclasses import dataclass, field
from typing import List

from .constants import JAVA_KEYWORDS, JAVA_LITERAL_WORDS, TokenCategory
from .errors import LexError
from .models import SourceUnit, Token

logger = logging.getLogger(__name__)


# Order matters: comments before operators, text blocks before strings,
# numbers before the "." separator.
_TOKEN_SPEC = [
    ("WHITESPACE", r"[ \t\f\r\n]+"),
    ("LINE_COMMENT", r"//[^\n]*"),
    ("BLOCK_COMMENT", r"/\*[\s\S]*?\*/"),
    ("OPEN_COMMENT", r"/\*[\s\S]*"),
    ("TEXT_BLOCK", r'"""[\s\S]*?"""'),
    ("STRING", r'"(?:\\.|[^"\\\n])*"'),
    ("OPEN_STRING", r'"(?:\\.|[^"\\\n])*'),
    ("CHAR", r"'(?:\\.|[^'\\\n])*'"),
    ("OPEN_CHAR", r"'(?:\\.|[^'\\\n])*"),
    ("NUMBER",
     r"0[xX][0-9a-fA-F_]+[lL]?"
     r"|0[bB][01_]+[lL]?"
     r"|(?:\d[\d_]*(?:\.[\d_]*)?|\.\d[\d_]*)(?:[eE][+-]?\d+)?[fFdDlL]?"),
    ("WORD", r"(?:[^\W\d]|\$)(?:\w|\$)*"),
    ("SEPARATOR", r"\.\.\.|::|[(){}\[\];,.@]"),
    ("OPERATOR",
     r">>>=|<<=|>>=|>>>|->|\+\+|--|&&|\|\||==|!=|<=|>=|\+=|-=|\*=|/=|&=|\|=|\^=|%="
     r"|<<|>>|[=<>!~?:+\-*/&|^%]"),
    ("INVALID", r"."),
]

_MASTER = re.compile("|".join(f"(?P<{name}>{rx})" for name, rx in _TOKEN_SPEC))


@dataclass
class TokenizeResult:
    """Token stream plus any recoverable lexing problems."""

    tokens: List[Token] = field(default_factory=list)
    errors: List[LexError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


class LineIndex:
    """Maps character offsets to 1-based (line, column) pairs."""

    def __init__(self, text: str):
        self._starts = [0] + [m.end() for m in re.finditer(r"\n", text)]

    def position(self, offset: int) -> tuple:
        line = bisect.bisect_right(self._starts, offset)
        return line, offset - self._starts[line - 1] + 1


def tokenize(unit: SourceUnit) -> TokenizeResult:
    """
    Tokenize a Java snippet.

    Args:
        unit: Source to lex. Must be non-empty after trimming; callers
            validate that before getting here.

    Returns:
        TokenizeResult with the token list and any LexErrors
    """
    text = unit.text
    index = LineIndex(text)
    result = TokenizeResult()
    pos = 0

    while pos < len(text):
        match = _MASTER.match(text, pos)
        kind = match.lastgroup
        value = match.group()
        line, column = index.position(pos)
        pos = match.end()

        if kind == "WHITESPACE":
            continue

        category = _categorize(kind, value)

        if kind == "OPEN_COMMENT":
            result.errors.append(LexError("UnterminatedComment", line, column, value[:20]))
        elif kind in ("OPEN_STRING", "OPEN_CHAR"):
            result.errors.append(LexError("UnterminatedString", line, column, value))
        elif kind == "INVALID":
            result.errors.append(LexError("InvalidCharacter", line, column, value))

        result.tokens.append(Token(value, category, line, column, match.start()))

    for error in result.errors:
        logger.debug(f"Lexing '{unit.id}': {error}")

    return result


def _categorize(kind: str, value: str) -> TokenCategory:
    if kind in ("LINE_COMMENT", "BLOCK_COMMENT", "OPEN_COMMENT"):
        return TokenCategory.COMMENT
    if kind in ("TEXT_BLOCK", "STRING", "OPEN_STRING", "CHAR", "OPEN_CHAR", "NUMBER"):
        return TokenCategory.LITERAL
    if kind == "WORD":
        if value in JAVA_LITERAL_WORDS:
            return TokenCategory.LITERAL
        if value in JAVA_KEYWORDS:
            return TokenCategory.KEYWORD
        return TokenCategory.IDENTIFIER
    if kind == "SEPARATOR":
        return TokenCategory.SEPARATOR
    return TokenCategory.OPERATOR


def detokenize(tokens: List[Token], source: str) -> str:
    """
    Rebuild source text from tokens, taking inter-token whitespace from
    ``source``.
    """
    parts = []
    cursor = 0
    for token in tokens:
        parts.append(source[cursor:token.offset])
        parts.append(token.text)
        cursor = token.end
    parts.append(source[cursor:])
    return "".join(parts)


def literal_content(text: str) -> str:
    """Strip the quotes of a string, char or text-block literal."""
    if text.startswith('"""'):
        body = text[3:]
        return body[:-3] if body.endswith('"""') else body
    if text[:1] in ('"', "'"):
        body = text[1:]
        return body[:-1] if len(body) > 0 and body.endswith(text[0]) else body
    return text
