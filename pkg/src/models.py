"""
Data models for the entity tracing pipeline.
"""
from dataclasses import dataclass, field
from typing import Optional, List, Dict, Any, Tuple, Iterator

from .constants import (
    CODE_TAGS,
    CodeEntityKind,
    InstanceLabel,
    LocalizationReason,
    NerTag,
    ParseMode,
    SummaryRating,
    Taxonomy,
    TokenCategory,
    VerdictLabel,
)


Span = Tuple[int, int]


# ============================================================================
# Code side
# ============================================================================

@dataclass(frozen=True)
class SourceUnit:
    """A Java snippet: a method, class fragment or compilation unit"""
    text: str
    id: str = "unit"


@dataclass(frozen=True)
class Token:
    """One lexed token; offset is the index of its first character in the source"""
    text: str
    category: TokenCategory
    line: int
    column: int
    offset: int

    @property
    def end(self) -> int:
        return self.offset + len(self.text)


@dataclass(frozen=True)
class CodeEntity:
    """A named program element and where it first occurs"""
    name: str
    kind: CodeEntityKind
    line: int
    column: int
    occurrences: int = 1

    @property
    def location(self) -> Tuple[int, int]:
        return (self.line, self.column)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind.value,
            "line": self.line,
            "column": self.column,
            "occurrences": self.occurrences,
        }


@dataclass
class CodeEntitySet:
    """All entities extracted from one SourceUnit"""
    unit_id: str
    entities: List[CodeEntity]
    parse_mode: ParseMode
    parse_error: Optional[str] = None

    def named(self, name: str, case_insensitive: bool = False) -> List[CodeEntity]:
        """Entities whose name equals ``name`` (optionally ignoring case)."""
        if case_insensitive:
            folded = name.casefold()
            return [e for e in self.entities if e.name.casefold() == folded]
        return [e for e in self.entities if e.name == name]

    def pairs(self) -> set:
        return {(e.name, e.kind) for e in self.entities}

    def __len__(self) -> int:
        return len(self.entities)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "unit_id": self.unit_id,
            "parse_mode": self.parse_mode.value,
            "parse_error": self.parse_error,
            "entities": [e.to_dict() for e in self.entities],
        }


# ============================================================================
# Summary side
# ============================================================================

@dataclass(frozen=True)
class Summary:
    """A natural-language summary of a SourceUnit"""
    text: str
    id: str = "summary"
    source_model: Optional[str] = None


@dataclass(frozen=True)
class SummaryEntity:
    """
    A tagged mention in a summary.

    Candidates straight from a backend have no spans; filtration fills
    them with every occurrence of the normalized surface.
    """
    surface: str
    tag: NerTag
    spans: Tuple[Span, ...] = ()

    @property
    def is_code(self) -> bool:
        return self.tag in CODE_TAGS

    def to_dict(self) -> Dict[str, Any]:
        return {
            "surface": self.surface,
            "tag": self.tag.value,
            "spans": [list(s) for s in self.spans],
        }


@dataclass(frozen=True)
class Sentence:
    text: str
    start: int
    end: int

    @property
    def span(self) -> Span:
        return (self.start, self.end)

    def to_dict(self) -> Dict[str, Any]:
        return {"text": self.text, "start": self.start, "end": self.end}


@dataclass
class SentenceList:
    """Ordered, disjoint sentences covering all non-whitespace summary text"""
    sentences: List[Sentence] = field(default_factory=list)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def __len__(self) -> int:
        return len(self.sentences)

    def __getitem__(self, index: int) -> Sentence:
        return self.sentences[index]

    def containing(self, offset: int) -> Optional[Sentence]:
        """Sentence whose range covers ``offset``, if any."""
        for sentence in self.sentences:
            if sentence.start <= offset < sentence.end:
                return sentence
        return None


@dataclass
class FiltrationResult:
    """Outcome of removing fabricated entities from NER candidates"""
    kept: List[SummaryEntity]
    fabricated: List[SummaryEntity]
    polysemous: List[SummaryEntity] = field(default_factory=list)


@dataclass
class MatchResult:
    """Partition of post-filtration summary entities"""
    mapped: List[Tuple[SummaryEntity, CodeEntity]] = field(default_factory=list)
    unmapped: List[SummaryEntity] = field(default_factory=list)
    nl_entities: List[SummaryEntity] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.mapped) + len(self.unmapped) + len(self.nl_entities)


# ============================================================================
# Verification
# ============================================================================

@dataclass(frozen=True)
class IntentTuple:
    """
    The unit of verification: a mapped entity, its code counterpart and
    every summary sentence that mentions it.

    Attributes:
        occurrence: Position among tuples of the same record that share the
            normalized entity name; used to align with gold rows.
    """
    unit_id: str
    entity: SummaryEntity
    code_entity: CodeEntity
    relevant_sentences: Tuple[Sentence, ...]
    occurrence: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "unit_id": self.unit_id,
            "entity": self.entity.to_dict(),
            "code_entity": self.code_entity.to_dict(),
            "relevant_sentences": [s.to_dict() for s in self.relevant_sentences],
            "occurrence": self.occurrence,
        }


@dataclass(frozen=True)
class Verdict:
    label: VerdictLabel
    raw_backend_text: str = ""

    @property
    def effective_label(self) -> VerdictLabel:
        """IRRELEVANT counts as INCORRECT once tuples are aggregated."""
        if self.label == VerdictLabel.IRRELEVANT:
            return VerdictLabel.INCORRECT
        return self.label

    def to_dict(self) -> Dict[str, Any]:
        return {"label": self.label.value, "raw_backend_text": self.raw_backend_text}


@dataclass(frozen=True)
class TupleVerdict:
    intent: IntentTuple
    verdict: Verdict

    def to_dict(self) -> Dict[str, Any]:
        return {"intent": self.intent.to_dict(), "verdict": self.verdict.to_dict()}


@dataclass(frozen=True)
class ExtrinsicFlag:
    """An ungrounded code-tagged entity and the sentences mentioning it"""
    entity: SummaryEntity
    sentences: Tuple[Sentence, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "entity": self.entity.to_dict(),
            "sentences": [s.to_dict() for s in self.sentences],
        }


@dataclass(frozen=True)
class LocalizationSpan:
    start: int
    end: int
    reason: LocalizationReason
    entity: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "start": self.start,
            "end": self.end,
            "reason": self.reason.value,
            "entity": self.entity,
        }


@dataclass(frozen=True)
class BaselineFinding:
    """
    One (entity_name, relevant_sentence) pair from the direct baseline.

    grounded is False when the named entity does not occur in the summary.
    """
    entity_name: str
    relevant_sentence: str
    grounded: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "entity_name": self.entity_name,
            "relevant_sentence": self.relevant_sentence,
            "ungrounded_baseline_output": not self.grounded,
        }


@dataclass
class SummaryReport:
    """Localized hallucination verdict for one (code, summary) pair"""
    unit_id: str
    instance_label: InstanceLabel
    hallucinated_entity_count: int
    threshold: int
    count_extrinsic: bool
    method: str = "ETF"
    parse_mode: Optional[ParseMode] = None
    source_model: Optional[str] = None
    tuples: List[TupleVerdict] = field(default_factory=list)
    extrinsic_flags: List[ExtrinsicFlag] = field(default_factory=list)
    fabricated: List[SummaryEntity] = field(default_factory=list)
    localization: List[LocalizationSpan] = field(default_factory=list)
    baseline_findings: List[BaselineFinding] = field(default_factory=list)
    taxonomy_hint: Optional[Taxonomy] = None

    @property
    def unresolved_count(self) -> int:
        return sum(1 for t in self.tuples if t.verdict.label == VerdictLabel.UNRESOLVED)

    def to_dict(self) -> Dict[str, Any]:
        """Serialize with a fixed key order so replay runs are byte-identical."""
        return {
            "unit_id": self.unit_id,
            "method": self.method,
            "source_model": self.source_model,
            "instance_label": self.instance_label.value,
            "hallucinated_entity_count": self.hallucinated_entity_count,
            "threshold": self.threshold,
            "count_extrinsic": self.count_extrinsic,
            "parse_mode": self.parse_mode.value if self.parse_mode else None,
            "tuples": [t.to_dict() for t in self.tuples],
            "extrinsic_flags": [f.to_dict() for f in self.extrinsic_flags],
            "fabricated": [e.to_dict() for e in self.fabricated],
            "localization": [s.to_dict() for s in self.localization],
            "baseline_findings": [b.to_dict() for b in self.baseline_findings],
            "taxonomy_hint": self.taxonomy_hint.value if self.taxonomy_hint else None,
        }


# ============================================================================
# Dataset and metrics
# ============================================================================

@dataclass(frozen=True)
class GoldEntity:
    """One annotated (entity, relevant sentences, label) row"""
    name: str
    tag: NerTag
    label: VerdictLabel
    relevant_sentences: Tuple[str, ...] = ()
    taxonomy: Optional[Taxonomy] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "tag": self.tag.value,
            "relevant_sentences": list(self.relevant_sentences),
            "label": self.label.value,
            "taxonomy": self.taxonomy.value if self.taxonomy else None,
        }


@dataclass(frozen=True)
class DatasetRecord:
    """One annotated CodeSumEval row"""
    id: str
    source_model: str
    code: str
    summary: str
    summary_rating: SummaryRating
    gold_instance_label: InstanceLabel
    gold_entities: Tuple[GoldEntity, ...] = ()

    def scored_entities(self) -> List[GoldEntity]:
        """Gold rows left after dropping IRRELEVANT ones."""
        return [e for e in self.gold_entities if e.label != VerdictLabel.IRRELEVANT]

    def source_unit(self) -> SourceUnit:
        return SourceUnit(text=self.code, id=self.id)

    def summary_obj(self) -> Summary:
        return Summary(text=self.summary, id=self.id, source_model=self.source_model)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "source_model": self.source_model,
            "code": self.code,
            "summary": self.summary,
            "summary_rating": self.summary_rating.value,
            "gold_instance_label": self.gold_instance_label.value,
            "gold_entities": [e.to_dict() for e in self.gold_entities],
        }


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class MetricsBundle:
    """Macro P/R/F1 plus the confusion matrix for one evaluation level"""
    name: str
    level: str
    classes: List[str]
    per_class: Dict[str, ClassScores]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion_matrix: List[List[int]]
    support: Dict[str, int]
    averaged_over: List[str]
    skipped_indeterminate: int = 0
    unaligned: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "level": self.level,
            "classes": list(self.classes),
            "averaged_over": list(self.averaged_over),
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "per_class": {
                label: {
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "support": s.support,
                }
                for label, s in self.per_class.items()
            },
            "confusion_matrix": [list(row) for row in self.confusion_matrix],
            "support": dict(self.support),
            "skipped_indeterminate": self.skipped_indeterminate,
            "unaligned": self.unaligned,
        }


@dataclass(frozen=True)
class ModelCorpusStats:
    """Corpus statistics for the summaries of one source model"""
    model: str
    summaries: int
    mean_summary_length: float
    mean_code_entity_count: float
    mapped_pct: float
    unmapped_pct: float
    nl_pct: float
    fabricated_pct: float = 0.0


@dataclass
class CorpusStats:
    per_model: Dict[str, ModelCorpusStats] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            model: {
                "summaries": s.summaries,
                "mean_summary_length": s.mean_summary_length,
                "mean_code_entity_count": s.mean_code_entity_count,
                "mapped_pct": s.mapped_pct,
                "unmapped_pct": s.unmapped_pct,
                "nl_pct": s.nl_pct,
                "fabricated_pct": s.fabricated_pct,
            }
            for model, s in self.per_model.items()
        }


@dataclass(frozen=True)
class NerScores:
    jaccard: float
    type_f1: float
