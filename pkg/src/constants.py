"""
Constants and vocabularies for the entity tracing pipeline.

Defines the code entity kinds, the summary NER tagset, verdict and instance
labels, the hallucination-cause taxonomy, Java lexical vocabularies and the
default decoding settings used by every model role.
"""

from enum import Enum
from typing import Dict, FrozenSet, List


# ============================================================================
# Code-side entity kinds
# ============================================================================

class CodeEntityKind(str, Enum):
    """Role of a named program element extracted from Java source."""

    CLASS = "CLASS"
    FUNCTION = "FUNCTION"
    VARIABLE = "VARIABLE"
    LIBRARY = "LIBRARY"
    VALUE = "VALUE"
    DATA_TYPE = "DATA_TYPE"
    ANNOTATION = "ANNOTATION"
    KEYWORD = "KEYWORD"


class ParseMode(str, Enum):
    """How a CodeEntitySet was produced."""

    FULL_AST = "FULL_AST"
    LEXICAL_FALLBACK = "LEXICAL_FALLBACK"


class TokenCategory(str, Enum):
    """Lexical category of a Java token."""

    IDENTIFIER = "identifier"
    KEYWORD = "keyword"
    LITERAL = "literal"
    OPERATOR = "operator"
    SEPARATOR = "separator"
    COMMENT = "comment"


# Kinds allowed when the parser could not build a tree
FALLBACK_KINDS: FrozenSet[CodeEntityKind] = frozenset({
    CodeEntityKind.KEYWORD,
    CodeEntityKind.VALUE,
    CodeEntityKind.VARIABLE,
})

# Tie-break when a name maps to several kinds and the summary tag agrees with none
KIND_PREFERENCE: List[CodeEntityKind] = [
    CodeEntityKind.FUNCTION,
    CodeEntityKind.CLASS,
    CodeEntityKind.DATA_TYPE,
    CodeEntityKind.VARIABLE,
    CodeEntityKind.LIBRARY,
    CodeEntityKind.VALUE,
    CodeEntityKind.ANNOTATION,
]

# Synthetic class used to make isolated methods parseable
WRAPPER_CLASS_NAME = "__Wrapper__"


# ============================================================================
# Summary-side NER tagset (19 tags)
# ============================================================================

class NerTag(str, Enum):
    """Entity tag assigned to a summary mention."""

    # Code entities
    CLASS = "CLASS"
    VARIABLE = "VARIABLE"
    FUNCTION = "FUNCTION"
    LIBRARY = "LIBRARY"
    VALUE = "VALUE"
    DATA_TYPE = "DATA_TYPE"
    HTML_XML_TAG = "HTML_XML_TAG"

    # Natural language entities
    APPLICATION = "APPLICATION"
    UI_ELEMENT = "UI_ELEMENT"
    LANGUAGE = "LANGUAGE"
    DATA_STRUCTURE = "DATA_STRUCTURE"
    ALGORITHM = "ALGORITHM"
    FILE_TYPE = "FILE_TYPE"
    FILE_NAME = "FILE_NAME"
    VERSION = "VERSION"
    DEVICE = "DEVICE"
    OS = "OS"
    WEBSITE = "WEBSITE"
    USER_NAME = "USER_NAME"


CODE_TAGS: FrozenSet[NerTag] = frozenset({
    NerTag.CLASS,
    NerTag.VARIABLE,
    NerTag.FUNCTION,
    NerTag.LIBRARY,
    NerTag.VALUE,
    NerTag.DATA_TYPE,
    NerTag.HTML_XML_TAG,
})

NL_TAGS: FrozenSet[NerTag] = frozenset(set(NerTag) - set(CODE_TAGS))

# Summary tag -> code kind that "agrees" with it during matching
TAG_TO_KIND: Dict[NerTag, CodeEntityKind] = {
    NerTag.CLASS: CodeEntityKind.CLASS,
    NerTag.VARIABLE: CodeEntityKind.VARIABLE,
    NerTag.FUNCTION: CodeEntityKind.FUNCTION,
    NerTag.LIBRARY: CodeEntityKind.LIBRARY,
    NerTag.VALUE: CodeEntityKind.VALUE,
    NerTag.DATA_TYPE: CodeEntityKind.DATA_TYPE,
}

# Spellings models actually produce, keyed after upper-casing and
# collapsing spaces/hyphens to underscores
TAG_ALIASES: Dict[str, NerTag] = {
    "DATATYPE": NerTag.DATA_TYPE,
    "HTML_OR_XML_TAG": NerTag.HTML_XML_TAG,
    "HTML/XML_TAG": NerTag.HTML_XML_TAG,
    "HTML_TAG": NerTag.HTML_XML_TAG,
    "XML_TAG": NerTag.HTML_XML_TAG,
    "UIELEMENT": NerTag.UI_ELEMENT,
    "DATASTRUCTURE": NerTag.DATA_STRUCTURE,
    "FILETYPE": NerTag.FILE_TYPE,
    "FILENAME": NerTag.FILE_NAME,
    "USERNAME": NerTag.USER_NAME,
}


# ============================================================================
# Labels
# ============================================================================

class VerdictLabel(str, Enum):
    """Judge verdict for one intent tuple.

    UNRESOLVED marks a tuple whose judge output never parsed; it is kept in
    reports for auditing and excluded from aggregation.
    """

    CORRECT = "CORRECT"
    INCORRECT = "INCORRECT"
    IRRELEVANT = "IRRELEVANT"
    UNRESOLVED = "UNRESOLVED"


class InstanceLabel(str, Enum):
    """Summary-level hallucination label."""

    HALLUCINATED = "HALLUCINATED"
    NOT_HALLUCINATED = "NOT_HALLUCINATED"
    INDETERMINATE = "INDETERMINATE"


class SummaryRating(str, Enum):
    """Annotator rating of the whole summary."""

    GOOD = "GOOD"
    FAIR = "FAIR"
    POOR = "POOR"


class LocalizationReason(str, Enum):
    """Why a sentence range was flagged."""

    INTRINSIC = "INTRINSIC"
    EXTRINSIC = "EXTRINSIC"


class Taxonomy(str, Enum):
    """Hallucination cause codes, assigned by human annotators only."""

    HC1_VARIABLE = "HC1_VARIABLE"
    HC1_FUNCTION = "HC1_FUNCTION"
    HC1_LIBRARY = "HC1_LIBRARY"
    HC2_CONTEXTUAL = "HC2_CONTEXTUAL"
    HC2_NONCONTEXTUAL = "HC2_NONCONTEXTUAL"
    HC3_LENGTH = "HC3_LENGTH"
    HC3_LEXICAL = "HC3_LEXICAL"
    HC3_LOGICAL = "HC3_LOGICAL"
    HC4_COMMENT = "HC4_COMMENT"
    HC4_LOG = "HC4_LOG"


# Binary alphabets scored by the metrics module
ENTITY_CLASSES: List[str] = [VerdictLabel.CORRECT.value, VerdictLabel.INCORRECT.value]
INSTANCE_CLASSES: List[str] = [
    InstanceLabel.HALLUCINATED.value,
    InstanceLabel.NOT_HALLUCINATED.value,
]


# ============================================================================
# Model roles and run modes
# ============================================================================

class Role(str, Enum):
    """LLM role a request is made for."""

    GENERATE = "generate"
    NER = "ner"
    JUDGE = "judge"
    DIRECT = "direct"


class RunMode(str, Enum):
    """Execution mode: exactly one per run."""

    REPLAY = "replay"
    LIVE = "live"
    ORACLE = "oracle"


class NerSource(str, Enum):
    """Where summary entities come from."""

    LLM = "llm"
    HEURISTIC = "heuristic"
    GOLD = "gold"


class BackendDefaults:
    """Decoding and transport defaults shared by every role."""

    TEMPERATURE = 0.3
    MAX_NEW_TOKENS = 4000
    API_KEY_ENV = "ETF_API_KEY"
    ENDPOINT = "https://api.openai.com/v1"
    MODEL = "gpt-4o"
    MAX_RETRIES = 3
    MAX_IN_FLIGHT = 4
    REQUEST_TIMEOUT = 60.0
    RETRY_BASE_DELAY = 1.0
    RETRY_MAX_DELAY = 30.0
    RETRY_CEILING = 120.0

    # Transient statuses worth retrying
    RETRYABLE_STATUS_CODES: FrozenSet[int] = frozenset({429, 500, 502, 503, 504})


class PipelineDefaults:
    """Aggregation and parsing defaults."""

    THRESHOLD = 1
    MAX_VERDICT_ATTEMPTS = 3
    MAX_OUTPUT_ATTEMPTS = 3
    MACRO_AVERAGE = "present"
    SLOW_RECORD_MS = 30000.0


class ExitCode:
    """Process exit codes for the command-line surface."""

    NOT_HALLUCINATED = 0
    HALLUCINATED = 1
    INDETERMINATE = 2
    OPERATIONAL_ERROR = 3
    USAGE_ERROR = 4


INSTANCE_EXIT_CODES: Dict[InstanceLabel, int] = {
    InstanceLabel.NOT_HALLUCINATED: ExitCode.NOT_HALLUCINATED,
    InstanceLabel.HALLUCINATED: ExitCode.HALLUCINATED,
    InstanceLabel.INDETERMINATE: ExitCode.INDETERMINATE,
}


# ============================================================================
# Java vocabulary
# ============================================================================

JAVA_KEYWORDS: FrozenSet[str] = frozenset({
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char",
    "class", "const", "continue", "default", "do", "double", "else", "enum",
    "extends", "final", "finally", "float", "for", "goto", "if", "implements",
    "import", "instanceof", "int", "interface", "long", "native", "new",
    "package", "private", "protected", "public", "return", "short", "static",
    "strictfp", "super", "switch", "synchronized", "this", "throw", "throws",
    "transient", "try", "void", "volatile", "while",
})

# Reserved literal words; lexed as literals, not keywords
JAVA_LITERAL_WORDS: FrozenSet[str] = frozenset({"true", "false", "null"})

# Characters that may appear inside a Java identifier
IDENTIFIER_CHARS = r"[\w$]"


# ============================================================================
# Summary text heuristics
# ============================================================================

# Bare English words that collide with code names; kept only when code-formatted
POLYSEMOUS_WORDS: FrozenSet[str] = frozenset({
    "list", "map", "set", "if", "while", "for", "do", "else", "case", "switch",
    "return", "new", "this", "object", "string", "value", "values", "key",
    "keys", "name", "type", "data", "result", "index", "item", "items", "count",
    "size", "length", "entry", "node", "element", "array", "file", "path",
    "input", "output", "error", "exception", "method", "class", "function",
    "variable", "parameter", "true", "false", "null", "get", "put", "add",
    "remove", "contains", "clear", "close", "open", "read", "write", "run",
    "start", "stop", "update", "check", "create", "build", "connection",
})

# Punkt abbreviation types (lowercase, final period dropped)
PUNKT_ABBREVIATIONS: FrozenSet[str] = frozenset({"e.g", "i.e"})

QUOTE_CHARS = "`\"'‘’“”"
