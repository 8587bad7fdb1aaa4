"""
End-to-end entity tracing for (code, summary) pairs.

Runs code-side extraction, summary NER with fabrication filtering, sentence
segmentation, entity matching, per-tuple intent verification and
aggregation. The direct baseline shares the same entry points so batch runs
can switch between the two with one flag.
"""

import asyncio
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from .code_analysis import extract_code_entities
from .config import PipelineSettings
from .constants import (
    InstanceLabel,
    LocalizationReason,
    PipelineDefaults,
    Taxonomy,
    VerdictLabel,
)
from .decorators import PerformanceMonitor
from .errors import EtfError
from .log_sanitizer import safe_log_error, sanitize_log_message
from .matching import find_occurrences, normalize, partition
from .models import (
    BaselineFinding,
    CodeEntitySet,
    DatasetRecord,
    ExtrinsicFlag,
    FiltrationResult,
    IntentTuple,
    LocalizationSpan,
    MatchResult,
    SentenceList,
    SourceUnit,
    Summary,
    SummaryEntity,
    SummaryReport,
    TupleVerdict,
)
from .sentences import segment_sentences
from .summary_ner import EntityExtractor, extract_entities, filter_fabricated
from .verification import (
    Judge,
    aggregate,
    collect_intent,
    direct_verify,
    sentences_mentioning,
    verify_tuple,
)

logger = logging.getLogger(__name__)


@dataclass
class TraceResult:
    """A report plus the intermediate artifacts corpus statistics need"""
    report: SummaryReport
    code_entities: Optional[CodeEntitySet] = None
    filtration: Optional[FiltrationResult] = None
    match: Optional[MatchResult] = None
    duration_ms: Optional[float] = None


@dataclass
class BatchResult:
    """Outcome of a batch run, in input order"""
    traces: List[TraceResult] = field(default_factory=list)
    failures: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def reports(self) -> List[SummaryReport]:
        return [t.report for t in self.traces]


def taxonomy_hint(record: DatasetRecord) -> Optional[Taxonomy]:
    """First taxonomy code on an INCORRECT gold row, passed through untouched."""
    for entity in record.gold_entities:
        if entity.label == VerdictLabel.INCORRECT and entity.taxonomy is not None:
            return entity.taxonomy
    return None


class EntityTracingPipeline:
    """
    Checks summaries against their code.

    Example:
        pipeline = EntityTracingPipeline(manager.extractor(), manager.judge())
        report = await pipeline.check(SourceUnit(code), Summary(text))
    """

    def __init__(
        self,
        extractor: EntityExtractor,
        judge: Judge,
        settings: Optional[PipelineSettings] = None,
    ):
        self.extractor = extractor
        self.judge = judge
        self.settings = settings or PipelineSettings()

    def _name_key(self, surface: str) -> str:
        name = normalize(surface)
        return name.casefold() if self.settings.lenient_case else name

    def build_intents(
        self, match: MatchResult, sentences: SentenceList, unit_id: str
    ) -> List[IntentTuple]:
        """One tuple per mapped entity; occurrence counts repeats of a name."""
        seen: Dict[str, int] = defaultdict(int)
        intents = []
        for entity, code_entity in match.mapped:
            key = self._name_key(entity.surface)
            intents.append(
                collect_intent(
                    entity,
                    code_entity,
                    sentences,
                    unit_id,
                    occurrence=seen[key],
                    case_insensitive=self.settings.lenient_case,
                )
            )
            seen[key] += 1
        return intents

    async def trace(
        self,
        code: SourceUnit,
        summary: Summary,
        taxonomy: Optional[Taxonomy] = None,
    ) -> TraceResult:
        """
        Run entity tracing and keep the intermediate results.

        Raises:
            EmptySourceError: Blank code or summary
            BackendError: Extractor or judge transport failures
        """
        s = self.settings
        ci = s.lenient_case

        async with PerformanceMonitor(f"trace {summary.id}", PipelineDefaults.SLOW_RECORD_MS) as monitor:
            code_entities = extract_code_entities(code)
            candidates = await extract_entities(summary, self.extractor, s.max_output_attempts)
            filtration = filter_fabricated(
                candidates,
                summary,
                case_insensitive=ci,
                polysemy_guard=s.polysemy_guard and not self.extractor.trusted,
            )
            sentences = segment_sentences(summary)
            match = partition(filtration.kept, code_entities, case_insensitive=ci)

            intents = self.build_intents(match, sentences, summary.id)
            verdicts = await asyncio.gather(
                *(verify_tuple(i, code, self.judge, s.max_verdict_attempts) for i in intents)
            )
            flags = [
                ExtrinsicFlag(entity, sentences_mentioning(entity, sentences, ci))
                for entity in match.unmapped
            ]

            report = aggregate(
                summary.id,
                [TupleVerdict(i, v) for i, v in zip(intents, verdicts)],
                flags,
                threshold=s.threshold,
                count_extrinsic=s.count_extrinsic,
                fabricated=list(filtration.fabricated),
                parse_mode=code_entities.parse_mode,
                source_model=summary.source_model,
                taxonomy_hint=taxonomy,
            )

        logger.info(
            f"Checked '{summary.id}': {report.instance_label.value} "
            f"({report.hallucinated_entity_count} hallucinated, {len(intents)} tuples, "
            f"{len(flags)} ungrounded, {len(filtration.fabricated)} fabricated)"
        )
        return TraceResult(report, code_entities, filtration, match, monitor.duration_ms)

    async def check(
        self,
        code: SourceUnit,
        summary: Summary,
        taxonomy: Optional[Taxonomy] = None,
    ) -> SummaryReport:
        """Entity-tracing verdict for one pair."""
        return (await self.trace(code, summary, taxonomy)).report

    async def direct(
        self,
        code: SourceUnit,
        summary: Summary,
        taxonomy: Optional[Taxonomy] = None,
    ) -> SummaryReport:
        """
        Direct-baseline verdict for one pair.

        Any finding makes the summary HALLUCINATED; findings are localized to
        the sentence the judge quoted, or to the sentences naming the entity.
        """
        async with PerformanceMonitor(f"direct {summary.id}", PipelineDefaults.SLOW_RECORD_MS):
            findings = await direct_verify(
                code, summary, self.judge, self.settings.max_output_attempts
            )

        sentences = segment_sentences(summary)
        spans = set()
        for finding in findings:
            spans.update(self._locate_finding(finding, summary.text, sentences))

        label = InstanceLabel.HALLUCINATED if findings else InstanceLabel.NOT_HALLUCINATED
        logger.info(f"Direct check '{summary.id}': {label.value} ({len(findings)} findings)")
        return SummaryReport(
            unit_id=summary.id,
            instance_label=label,
            hallucinated_entity_count=len(findings),
            threshold=1,
            count_extrinsic=False,
            method="Direct",
            source_model=summary.source_model,
            localization=sorted(spans, key=lambda sp: (sp.start, sp.end, sp.entity)),
            baseline_findings=findings,
            taxonomy_hint=taxonomy,
        )

    def _locate_finding(
        self, finding: BaselineFinding, text: str, sentences: SentenceList
    ) -> List[LocalizationSpan]:
        quoted = finding.relevant_sentence
        start = text.find(quoted) if quoted else -1
        if start != -1:
            return [
                LocalizationSpan(
                    start, start + len(quoted), LocalizationReason.INTRINSIC, finding.entity_name
                )
            ]
        name = normalize(finding.entity_name)
        return [
            LocalizationSpan(s.start, s.end, LocalizationReason.INTRINSIC, name)
            for s in sentences
            if find_occurrences(name, s.text, self.settings.lenient_case)
        ]


def _unexpected_error(error: Exception) -> Dict[str, Any]:
    """Failure entry for an exception outside the EtfError hierarchy."""
    return {
        "error": type(error).__name__,
        "status_code": None,
        "message": sanitize_log_message(str(error)),
        "details": None,
    }


async def run_records(
    pipeline: EntityTracingPipeline,
    records: Sequence[DatasetRecord],
    direct: bool = False,
    max_concurrent: int = 4,
) -> BatchResult:
    """
    Run the pipeline over dataset records.

    Records run concurrently up to ``max_concurrent``. A record that fails
    for any reason is logged, recorded in ``failures`` and skipped;
    results keep input order.
    """
    semaphore = asyncio.Semaphore(max_concurrent)

    async def run_one(record: DatasetRecord) -> Any:
        async with semaphore:
            code, summary = record.source_unit(), record.summary_obj()
            try:
                if direct:
                    return TraceResult(await pipeline.direct(code, summary, taxonomy_hint(record)))
                return await pipeline.trace(code, summary, taxonomy_hint(record))
            except EtfError as e:
                logger.warning(safe_log_error(e, f"Record '{record.id}' failed"))
                return {"id": record.id, "error": e.to_dict()}
            except Exception as e:
                logger.error(safe_log_error(e, f"Record '{record.id}' crashed"))
                return {"id": record.id, "error": _unexpected_error(e)}

    outcomes = await asyncio.gather(*(run_one(r) for r in records))

    batch = BatchResult()
    for outcome in outcomes:
        if isinstance(outcome, TraceResult):
            batch.traces.append(outcome)
        else:
            batch.failures.append(outcome)
    if batch.failures:
        logger.warning(f"{len(batch.failures)} of {len(records)} records failed and were skipped")
    return batch
