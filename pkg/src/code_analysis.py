"""
Code entity extraction for Java snippets.

Parses a snippet with javalang (wrapping bare methods and statements in a
synthetic class first) and classifies every named element of the tree into a
CodeEntity kind. When lexing or parsing fails, extraction degrades to a
lexical pass over the token stream that only distinguishes keywords, literals
and identifiers.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import javalang

from .constants import (
    CodeEntityKind,
    ParseMode,
    TokenCategory,
    WRAPPER_CLASS_NAME,
)
from .errors import EmptySourceError, JavaParseError
from .java_lexer import LineIndex, literal_content, tokenize
from .matching import boundary_pattern
from .models import CodeEntity, CodeEntitySet, SourceUnit, Token

logger = logging.getLogger(__name__)

_WRAPPER_PREFIX = f"class {WRAPPER_CLASS_NAME} {{\n"
_WRAPPER_SUFFIX = "\n}"

# Keywords that start a compilation unit rather than a member or statement
_UNIT_KEYWORDS = {"package", "import", "class", "interface", "enum"}

_KIND_ORDER = {kind: i for i, kind in enumerate(CodeEntityKind)}

tree = javalang.tree


@dataclass
class ParsedSource:
    """
    A parsed snippet.

    Attributes:
        tree: javalang CompilationUnit
        wrapped: True when the snippet was wrapped in the synthetic class
    """

    tree: "javalang.tree.CompilationUnit"
    wrapped: bool

    def declarations(self, node_type) -> List:
        """Nodes of ``node_type`` in document order, minus the synthetic wrapper."""
        return [
            node for _, node in self.tree.filter(node_type)
            if getattr(node, "name", None) != WRAPPER_CLASS_NAME
        ]


def _require_text(unit: SourceUnit) -> None:
    if not unit.text or not unit.text.strip():
        raise EmptySourceError("source", unit.id)


def _needs_wrapper(tokens: List[Token]) -> bool:
    """True unless a type/package/import keyword appears before the first '('."""
    for token in tokens:
        if token.category == TokenCategory.COMMENT:
            continue
        if token.category == TokenCategory.KEYWORD and token.text in _UNIT_KEYWORDS:
            return False
        if token.text == "(":
            return True
    return True


def _parse_tokens(unit: SourceUnit, tokens: List[Token]) -> ParsedSource:
    wrapped = _needs_wrapper(tokens)
    text = f"{_WRAPPER_PREFIX}{unit.text}{_WRAPPER_SUFFIX}" if wrapped else unit.text

    try:
        return ParsedSource(tree=javalang.parse.parse(text), wrapped=wrapped)
    except javalang.parser.JavaSyntaxError as e:
        at = getattr(e, "at", None)
        position = getattr(at, "position", None)
        line = column = None
        if position:
            line, column = position[0], position[1]
            if wrapped:
                line -= 1
        raise JavaParseError(
            description=getattr(e, "description", None) or "syntax error",
            token=getattr(at, "value", None),
            line=line,
            column=column,
            original_error=e,
        )
    except javalang.tokenizer.LexerError as e:
        raise JavaParseError(description=str(e), original_error=e)
    except Exception as e:
        # javalang surfaces truncated input as IndexError/StopIteration
        raise JavaParseError(
            description=f"parser failure ({type(e).__name__})", original_error=e
        )


def parse(unit: SourceUnit) -> ParsedSource:
    """
    Parse a Java snippet into a syntax tree.

    Isolated methods, fields and statements are wrapped in
    ``class __Wrapper__ { ... }`` so javalang accepts them.

    Args:
        unit: Source to parse

    Returns:
        ParsedSource holding the javalang tree

    Raises:
        EmptySourceError: If the source is blank
        JavaParseError: If lexing failed or the parser rejected the snippet
    """
    _require_text(unit)
    lexed = tokenize(unit)
    if lexed.errors:
        first = lexed.errors[0]
        raise JavaParseError(
            description=first.kind, token=first.text, line=first.line, column=first.column
        )
    return _parse_tokens(unit, lexed.tokens)


# ============================================================================
# Tree classification
# ============================================================================

class _Collector:
    """Ordered, de-duplicated (name, kind) pairs."""

    def __init__(self):
        self.pairs: Dict[Tuple[str, CodeEntityKind], None] = {}

    def add(self, name: Optional[str], kind: CodeEntityKind) -> None:
        if name and name != WRAPPER_CLASS_NAME:
            self.pairs.setdefault((name, kind), None)

    def add_qualifier(self, qualifier: Optional[str]) -> None:
        # "System.out" -> System (CLASS), out (VARIABLE)
        if not qualifier:
            return
        for segment in qualifier.split("."):
            if not segment or segment in ("this", "super"):
                continue
            kind = CodeEntityKind.CLASS if segment[0].isupper() else CodeEntityKind.VARIABLE
            self.add(segment, kind)


def _type_chain(node: tree.ReferenceType) -> List[tree.ReferenceType]:
    # java.util.List parses as java -> util -> List through sub_type
    chain = [node]
    while isinstance(chain[-1].sub_type, tree.ReferenceType):
        chain.append(chain[-1].sub_type)
    return chain


def _classify_tree(parsed: ParsedSource) -> _Collector:
    collector = _Collector()
    seen_types = set()
    method_refs = set()

    for _, node in parsed.tree:
        if isinstance(node, (
            tree.ClassDeclaration,
            tree.InterfaceDeclaration,
            tree.EnumDeclaration,
            tree.AnnotationDeclaration,
        )):
            collector.add(node.name, CodeEntityKind.CLASS)
        elif isinstance(node, tree.ConstructorDeclaration):
            collector.add(node.name, CodeEntityKind.FUNCTION)
        elif isinstance(node, tree.MethodDeclaration):
            collector.add(node.name, CodeEntityKind.FUNCTION)
            for thrown in node.throws or []:
                collector.add(thrown, CodeEntityKind.DATA_TYPE)
        elif isinstance(node, (tree.MethodInvocation, tree.SuperMethodInvocation)):
            collector.add(node.member, CodeEntityKind.FUNCTION)
            collector.add_qualifier(node.qualifier)
        elif isinstance(node, tree.MethodReference):
            if isinstance(node.method, tree.MemberReference):
                collector.add(node.method.member, CodeEntityKind.FUNCTION)
                method_refs.add(id(node.method))
        elif isinstance(node, tree.CatchClauseParameter):
            collector.add(node.name, CodeEntityKind.VARIABLE)
            for caught in node.types or []:
                collector.add(caught, CodeEntityKind.DATA_TYPE)
        elif isinstance(node, (
            tree.FormalParameter,
            tree.InferredFormalParameter,
            tree.VariableDeclarator,
            tree.EnumConstantDeclaration,
            tree.TryResource,
        )):
            collector.add(node.name, CodeEntityKind.VARIABLE)
        elif isinstance(node, tree.MemberReference):
            if id(node) not in method_refs:
                collector.add(node.member, CodeEntityKind.VARIABLE)
                collector.add_qualifier(node.qualifier)
        elif isinstance(node, tree.ClassCreator):
            if isinstance(node.type, tree.ReferenceType):
                chain = _type_chain(node.type)
                collector.add(chain[-1].name, CodeEntityKind.CLASS)
                seen_types.update(id(t) for t in chain)
        elif isinstance(node, tree.ReferenceType):
            if id(node) not in seen_types:
                chain = _type_chain(node)
                collector.add(chain[-1].name, CodeEntityKind.DATA_TYPE)
                seen_types.update(id(t) for t in chain)
        elif isinstance(node, (tree.BasicType, tree.TypeParameter)):
            collector.add(node.name, CodeEntityKind.DATA_TYPE)
        elif isinstance(node, tree.Annotation):
            collector.add(node.name, CodeEntityKind.ANNOTATION)
        elif isinstance(node, tree.Import):
            collector.add(node.path, CodeEntityKind.LIBRARY)
            collector.add(node.path.rsplit(".", 1)[-1], CodeEntityKind.LIBRARY)
        elif isinstance(node, tree.Literal):
            value = _literal_name(node.value)
            collector.add(value, CodeEntityKind.VALUE)
            if value and "-" in (node.prefix_operators or []) and value[0].isdigit():
                collector.add(f"-{value}", CodeEntityKind.VALUE)

    return collector


def _literal_name(raw: Optional[str]) -> Optional[str]:
    if not raw:
        return None
    return literal_content(raw) if raw[0] in ('"', "'") else raw


# ============================================================================
# Extraction
# ============================================================================

def _comment_ranges(tokens: List[Token]) -> List[Tuple[int, int]]:
    return [(t.offset, t.end) for t in tokens if t.category == TokenCategory.COMMENT]


def _locate(
    name: str,
    tokens: List[Token],
    source: str,
    index: LineIndex,
    comments: List[Tuple[int, int]],
) -> Optional[Tuple[int, int, int]]:
    """First (line, column) and occurrence count of ``name`` outside comments."""
    hits = [t for t in tokens if t.text == name and t.category != TokenCategory.COMMENT]
    if hits:
        return hits[0].line, hits[0].column, len(hits)

    # Multi-token names (import paths, literal contents, "-1")
    offsets = [
        m.start() for m in boundary_pattern(name).finditer(source)
        if not any(start <= m.start() < end for start, end in comments)
    ]
    if not offsets:
        return None
    line, column = index.position(offsets[0])
    return line, column, len(offsets)


def _build_set(
    unit: SourceUnit,
    pairs: List[Tuple[str, CodeEntityKind]],
    tokens: List[Token],
    parse_mode: ParseMode,
    parse_error: Optional[str] = None,
) -> CodeEntitySet:
    index = LineIndex(unit.text)
    comments = _comment_ranges(tokens)
    entities = []

    for name, kind in pairs:
        located = _locate(name, tokens, unit.text, index, comments)
        if located is None:
            logger.debug(f"Dropping '{name}' ({kind.value}): not found at a token boundary")
            continue
        line, column, count = located
        entities.append(CodeEntity(name, kind, line, column, count))

    entities.sort(key=lambda e: (e.line, e.column, _KIND_ORDER[e.kind], e.name))
    return CodeEntitySet(
        unit_id=unit.id,
        entities=entities,
        parse_mode=parse_mode,
        parse_error=parse_error,
    )


def _lexical_pairs(tokens: List[Token]) -> List[Tuple[str, CodeEntityKind]]:
    collector = _Collector()
    for token in tokens:
        if token.category == TokenCategory.KEYWORD:
            collector.add(token.text, CodeEntityKind.KEYWORD)
        elif token.category == TokenCategory.LITERAL:
            collector.add(_literal_name(token.text), CodeEntityKind.VALUE)
        elif token.category == TokenCategory.IDENTIFIER:
            collector.add(token.text, CodeEntityKind.VARIABLE)
    return list(collector.pairs)


def extract_code_entities(unit: SourceUnit) -> CodeEntitySet:
    """
    Extract and classify every code entity of a snippet.

    Args:
        unit: Java source

    Returns:
        CodeEntitySet in FULL_AST mode, or LEXICAL_FALLBACK when the snippet
        could not be lexed cleanly or parsed

    Raises:
        EmptySourceError: If the source is blank
    """
    _require_text(unit)
    lexed = tokenize(unit)

    if lexed.errors:
        reason = str(lexed.errors[0])
        logger.warning(f"Lexical fallback for '{unit.id}': {reason}")
        return _build_set(
            unit, _lexical_pairs(lexed.tokens), lexed.tokens,
            ParseMode.LEXICAL_FALLBACK, reason,
        )

    try:
        parsed = _parse_tokens(unit, lexed.tokens)
        collector = _classify_tree(parsed)
    except JavaParseError as e:
        logger.info(f"Lexical fallback for '{unit.id}': {e}")
        return _build_set(
            unit, _lexical_pairs(lexed.tokens), lexed.tokens,
            ParseMode.LEXICAL_FALLBACK, str(e),
        )

    for token in lexed.tokens:
        if token.category == TokenCategory.KEYWORD:
            collector.add(token.text, CodeEntityKind.KEYWORD)

    return _build_set(unit, list(collector.pairs), lexed.tokens, ParseMode.FULL_AST)
