"""
Intent verification and aggregation.

Builds <code, entity, relevant sentences> tuples for mapped entities, asks a
judge backend for a CORRECT/INCORRECT/IRRELEVANT verdict on each, and folds
the verdicts and ungrounded-entity flags into a SummaryReport. Also holds the
direct baseline, which asks the judge about the whole summary at once.
"""

import json
import logging
import re
from abc import ABC, abstractmethod
from typing import Any, Iterable, List, Optional, Sequence

from .constants import (
    InstanceLabel,
    LocalizationReason,
    PipelineDefaults,
    Role,
    VerdictLabel,
)
from .errors import MalformedBackendOutputError, UnparseableVerdictError
from .matching import find_occurrences, normalize
from .models import (
    BaselineFinding,
    CodeEntity,
    ExtrinsicFlag,
    IntentTuple,
    LocalizationSpan,
    SentenceList,
    SourceUnit,
    Summary,
    SummaryEntity,
    SummaryReport,
    TupleVerdict,
    Verdict,
)
from .prompts import render_direct_prompt, render_intent_prompt

logger = logging.getLogger(__name__)

_LABEL = re.compile(r"\b(CORRECT|INCORRECT|IRRELEVANT)\b", re.IGNORECASE)
_FENCE_LINE = re.compile(r"^\s*```[\w-]*\s*$", re.MULTILINE)
_BARE_KEY = re.compile(r"([{,]\s*)([A-Za-z_]\w*)\s*:")
_PAIR = re.compile(
    r"entity_name[\"']?\s*:\s*\"((?:[^\"\\]|\\.)*)\"\s*,\s*"
    r"[\"']?relevant_sentence[\"']?\s*:\s*\"((?:[^\"\\]|\\.)*)\""
)


# ============================================================================
# Judge backends
# ============================================================================

class Judge(ABC):
    """Answers intent and direct-evaluation questions with raw text."""

    name: str = "judge"

    @abstractmethod
    async def judge_intent(self, intent: IntentTuple, code: SourceUnit) -> str:
        """Raw response naming one of the three verdict labels."""

    async def judge_direct(self, code: SourceUnit, summary: Summary) -> str:
        """Raw response listing incorrectly described entities."""
        raise NotImplementedError(f"{type(self).__name__} has no direct mode")


class ChatJudge(Judge):
    """Judge backed by a chat-completion client (live or replay)."""

    name = "llm"

    def __init__(self, client: Any):
        self.client = client

    async def judge_intent(self, intent: IntentTuple, code: SourceUnit) -> str:
        prompt = render_intent_prompt(
            intent.code_entity.name,
            [s.text for s in intent.relevant_sentences],
            code.text,
        )
        return await self.client.complete(Role.JUDGE, prompt)

    async def judge_direct(self, code: SourceUnit, summary: Summary) -> str:
        prompt = render_direct_prompt(code.text, summary.text)
        return await self.client.complete(Role.DIRECT, prompt)


# ============================================================================
# Tuples and verdicts
# ============================================================================

def sentences_mentioning(
    entity: SummaryEntity,
    sentences: SentenceList,
    case_insensitive: bool = False,
) -> tuple:
    """
    Sentences holding a mention of ``entity``, in document order.

    Located through the entity's spans; entities without spans fall back
    to a name search over each sentence.
    """
    found = {
        sentence.start: sentence
        for sentence in (sentences.containing(start) for start, _ in entity.spans)
        if sentence is not None
    }
    if found:
        return tuple(found[start] for start in sorted(found))
    name = normalize(entity.surface)
    return tuple(s for s in sentences if find_occurrences(name, s.text, case_insensitive))


def collect_intent(
    entity: SummaryEntity,
    code_entity: CodeEntity,
    sentences: SentenceList,
    unit_id: str,
    occurrence: int = 0,
    case_insensitive: bool = False,
) -> IntentTuple:
    """
    Gather every sentence that mentions a mapped entity.

    Args:
        entity: Mapped summary entity
        code_entity: Its code counterpart
        sentences: Segmented summary
        unit_id: Record or snippet id
        occurrence: Index among tuples sharing the normalized name
        case_insensitive: Match mentions with IGNORECASE

    Returns:
        IntentTuple with relevant sentences in document order

    Raises:
        ValueError: If no sentence mentions the entity
    """
    relevant = sentences_mentioning(entity, sentences, case_insensitive)
    if not relevant:
        raise ValueError(f"Entity '{entity.surface}' is not mentioned in any sentence of '{unit_id}'")
    return IntentTuple(
        unit_id=unit_id,
        entity=entity,
        code_entity=code_entity,
        relevant_sentences=relevant,
        occurrence=occurrence,
    )


def parse_verdict(text: str) -> VerdictLabel:
    """
    First whole-word verdict label in a judge response, case-insensitive.

    Raises:
        UnparseableVerdictError: If no label is present
    """
    match = _LABEL.search(text or "")
    if not match:
        raise UnparseableVerdictError(raw_text=text or "", role=Role.JUDGE.value)
    return VerdictLabel(match.group(1).upper())


async def verify_tuple(
    intent: IntentTuple,
    code: SourceUnit,
    judge: Judge,
    max_attempts: int = PipelineDefaults.MAX_VERDICT_ATTEMPTS,
) -> Verdict:
    """
    Obtain a verdict for one intent tuple.

    Unparseable responses are retried; when every attempt fails the tuple
    comes back UNRESOLVED with the last raw text, and is excluded from
    aggregation.

    Raises:
        BackendError: Transport failures from the judge
    """
    raw = ""
    for attempt in range(1, max_attempts + 1):
        raw = await judge.judge_intent(intent, code)
        try:
            return Verdict(label=parse_verdict(raw), raw_backend_text=raw)
        except UnparseableVerdictError:
            logger.warning(
                f"Unparseable verdict for '{intent.entity.surface}' in '{intent.unit_id}' "
                f"(attempt {attempt}/{max_attempts})"
            )

    logger.warning(f"Marking '{intent.entity.surface}' in '{intent.unit_id}' UNRESOLVED")
    return Verdict(label=VerdictLabel.UNRESOLVED, raw_backend_text=raw)


# ============================================================================
# Aggregation
# ============================================================================

def _localize(
    verdicts: Sequence[TupleVerdict], flags: Sequence[ExtrinsicFlag]
) -> List[LocalizationSpan]:
    spans = set()
    for tv in verdicts:
        if tv.verdict.label in (VerdictLabel.INCORRECT, VerdictLabel.IRRELEVANT):
            name = normalize(tv.intent.entity.surface)
            for s in tv.intent.relevant_sentences:
                spans.add(LocalizationSpan(s.start, s.end, LocalizationReason.INTRINSIC, name))
    for flag in flags:
        name = normalize(flag.entity.surface)
        for s in flag.sentences:
            spans.add(LocalizationSpan(s.start, s.end, LocalizationReason.EXTRINSIC, name))
    return sorted(spans, key=lambda sp: (sp.start, sp.end, sp.reason.value, sp.entity))


def hallucinated_count(
    verdicts: Iterable[TupleVerdict],
    flags: Sequence[ExtrinsicFlag] = (),
    count_extrinsic: bool = False,
) -> int:
    """Effective-INCORRECT tuples, plus ungrounded entities when counted."""
    count = sum(
        1 for tv in verdicts if tv.verdict.effective_label == VerdictLabel.INCORRECT
    )
    if count_extrinsic:
        count += len(flags)
    return count


def aggregate(
    unit_id: str,
    verdicts: Sequence[TupleVerdict],
    extrinsic_flags: Sequence[ExtrinsicFlag] = (),
    threshold: int = PipelineDefaults.THRESHOLD,
    count_extrinsic: bool = False,
    **report_fields,
) -> SummaryReport:
    """
    Fold tuple verdicts into an instance-level report.

    HALLUCINATED iff the hallucinated-entity count reaches ``threshold``.
    Below threshold, any UNRESOLVED tuple makes the report INDETERMINATE.

    Args:
        unit_id: Record or snippet id
        verdicts: One TupleVerdict per intent tuple
        extrinsic_flags: Ungrounded code-tagged entities
        threshold: Minimum count for HALLUCINATED (>= 1)
        count_extrinsic: Count ungrounded entities toward the threshold
        **report_fields: Passed through to SummaryReport (fabricated,
            parse_mode, source_model, taxonomy_hint)

    Returns:
        SummaryReport with label, count and localization

    Raises:
        ValueError: If threshold < 1
    """
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")

    count = hallucinated_count(verdicts, extrinsic_flags, count_extrinsic)
    if count >= threshold:
        label = InstanceLabel.HALLUCINATED
    elif any(tv.verdict.label == VerdictLabel.UNRESOLVED for tv in verdicts):
        label = InstanceLabel.INDETERMINATE
    else:
        label = InstanceLabel.NOT_HALLUCINATED

    return SummaryReport(
        unit_id=unit_id,
        instance_label=label,
        hallucinated_entity_count=count,
        threshold=threshold,
        count_extrinsic=count_extrinsic,
        tuples=list(verdicts),
        extrinsic_flags=list(extrinsic_flags),
        localization=_localize(verdicts, extrinsic_flags),
        **report_fields,
    )


# ============================================================================
# Direct baseline
# ============================================================================

def _decode_list(body: str) -> Optional[list]:
    start, end = body.find("["), body.rfind("]")
    if start == -1 or end < start:
        return None
    chunk = body[start:end + 1]
    for candidate in (chunk, _BARE_KEY.sub(r'\1"\2":', chunk)):
        try:
            data = json.loads(candidate)
        except ValueError:
            continue
        if isinstance(data, list):
            return data
    return None


def parse_direct_output(text: str, summary_text: str = "") -> List[BaselineFinding]:
    """
    Parse the direct-evaluation response.

    Accepts strict JSON, the prompt's own unquoted-key form, or anything from
    which entity_name/relevant_sentence pairs can be pulled. Findings whose
    entity does not occur in ``summary_text`` are kept but marked ungrounded.

    Raises:
        MalformedBackendOutputError: If nothing list-shaped or pair-shaped is found
    """
    body = _FENCE_LINE.sub("", text or "").strip()
    items = _decode_list(body)

    pairs = []
    if items is not None:
        for item in items:
            if isinstance(item, dict):
                pairs.append(
                    (str(item.get("entity_name", "")), str(item.get("relevant_sentence", "")))
                )
    else:
        pairs = [
            (m.group(1).replace('\\"', '"'), m.group(2).replace('\\"', '"'))
            for m in _PAIR.finditer(body)
        ]
        if not pairs:
            raise MalformedBackendOutputError(
                "expected a list of {entity_name, relevant_sentence}",
                raw_text=text or "",
                role=Role.DIRECT.value,
            )

    findings = []
    for entity_name, sentence in pairs:
        entity_name = entity_name.strip()
        if not entity_name:
            continue
        grounded = bool(find_occurrences(normalize(entity_name), summary_text))
        findings.append(BaselineFinding(entity_name, sentence.strip(), grounded))
    return findings


async def direct_verify(
    code: SourceUnit,
    summary: Summary,
    judge: Judge,
    max_attempts: int = PipelineDefaults.MAX_OUTPUT_ATTEMPTS,
) -> List[BaselineFinding]:
    """
    Run the direct baseline for one (code, summary) pair.

    An empty list means the judge found nothing incorrectly described.

    Raises:
        MalformedBackendOutputError: If every attempt produced unparseable output
    """
    last_error: Optional[MalformedBackendOutputError] = None
    for attempt in range(1, max_attempts + 1):
        raw = await judge.judge_direct(code, summary)
        try:
            return parse_direct_output(raw, summary.text)
        except MalformedBackendOutputError as e:
            last_error = e
            logger.warning(
                f"Direct output for '{summary.id}' unparseable "
                f"(attempt {attempt}/{max_attempts})"
            )
    raise last_error
