"""
Evaluation metrics.

Entity-level and instance-level macro precision/recall/F1, Cohen's kappa,
NER coverage (Jaccard) and type F1, and per-model corpus statistics.
Classification scores come from scikit-learn; this module handles
alignment, label mapping and the choice of classes to average over.
"""

import logging
from collections import defaultdict
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np
from sklearn.metrics import cohen_kappa_score, confusion_matrix, precision_recall_fscore_support

from .constants import (
    ENTITY_CLASSES,
    INSTANCE_CLASSES,
    InstanceLabel,
    NerTag,
    PipelineDefaults,
    VerdictLabel,
)
from .errors import AlignmentError, LengthMismatchError
from .matching import normalize
from .models import (
    ClassScores,
    CorpusStats,
    DatasetRecord,
    MatchResult,
    MetricsBundle,
    ModelCorpusStats,
    NerScores,
    Summary,
    SummaryReport,
)

logger = logging.getLogger(__name__)

EntityKey = Tuple[str, str, int]


# ============================================================================
# Classification scores
# ============================================================================

def classification_scores(
    gold: Sequence[str],
    predicted: Sequence[str],
    classes: Sequence[str],
    name: str,
    level: str,
    macro_average: str = PipelineDefaults.MACRO_AVERAGE,
    skipped_indeterminate: int = 0,
    unaligned: int = 0,
) -> MetricsBundle:
    """
    Per-class and macro P/R/F1 over aligned label sequences.

    Args:
        gold: Gold labels
        predicted: Predicted labels, same length
        classes: Label alphabet, in report order
        name: Method name shown in tables ("ETF", "Direct")
        level: "entity" or "instance"
        macro_average: "present" averages over classes with gold support,
            "all" over the whole alphabet

    Raises:
        LengthMismatchError: If the sequences differ in length
    """
    if len(gold) != len(predicted):
        raise LengthMismatchError(len(gold), len(predicted))

    classes = list(classes)
    if not gold:
        zero = ClassScores(0.0, 0.0, 0.0, 0)
        return MetricsBundle(
            name=name,
            level=level,
            classes=classes,
            per_class={c: zero for c in classes},
            macro_precision=0.0,
            macro_recall=0.0,
            macro_f1=0.0,
            confusion_matrix=[[0] * len(classes) for _ in classes],
            support={c: 0 for c in classes},
            averaged_over=[],
            skipped_indeterminate=skipped_indeterminate,
            unaligned=unaligned,
        )

    precision, recall, f1, support = precision_recall_fscore_support(
        gold, predicted, labels=classes, average=None, zero_division=0
    )
    matrix = confusion_matrix(gold, predicted, labels=classes)

    if macro_average == "all":
        chosen = list(range(len(classes)))
    else:
        chosen = [i for i, count in enumerate(support) if count > 0]

    per_class = {
        label: ClassScores(
            precision=float(precision[i]),
            recall=float(recall[i]),
            f1=float(f1[i]),
            support=int(support[i]),
        )
        for i, label in enumerate(classes)
    }

    return MetricsBundle(
        name=name,
        level=level,
        classes=classes,
        per_class=per_class,
        macro_precision=float(np.mean(precision[chosen])),
        macro_recall=float(np.mean(recall[chosen])),
        macro_f1=float(np.mean(f1[chosen])),
        confusion_matrix=matrix.tolist(),
        support={label: int(support[i]) for i, label in enumerate(classes)},
        averaged_over=[classes[i] for i in chosen],
        skipped_indeterminate=skipped_indeterminate,
        unaligned=unaligned,
    )


def _align(
    predictions: Mapping[Hashable, str],
    gold: Mapping[Hashable, str],
    skip_values: Set[str],
    strict: bool,
) -> Tuple[List[str], List[str], int, int]:
    """Gold-ordered label lists plus (skipped, unaligned) counts."""
    for key in predictions:
        if key not in gold:
            if strict:
                raise AlignmentError(key)
            logger.debug(f"Prediction without gold row: {key}")

    y_true, y_pred = [], []
    skipped = unaligned = 0
    for key, gold_label in gold.items():
        if key not in predictions:
            unaligned += 1
            continue
        predicted = predictions[key]
        if predicted in skip_values:
            skipped += 1
            continue
        y_true.append(gold_label)
        y_pred.append(predicted)

    unaligned += sum(1 for key in predictions if key not in gold)
    return y_true, y_pred, skipped, unaligned


# ============================================================================
# Entity level
# ============================================================================

def entity_gold(records: Iterable[DatasetRecord]) -> Dict[EntityKey, str]:
    """
    Scored gold labels keyed by (record id, normalized name, occurrence).

    IRRELEVANT rows are dropped before occurrences are counted.
    """
    gold = {}
    for record in records:
        seen: Dict[str, int] = defaultdict(int)
        for row in record.scored_entities():
            name = normalize(row.name)
            gold[(record.id, name, seen[name])] = row.label.value
            seen[name] += 1
    return gold


def entity_predictions(reports: Iterable[SummaryReport]) -> Dict[EntityKey, str]:
    """
    Entity-level predictions of entity-tracing reports.

    Tuples contribute their verdict label; ungrounded entities contribute
    INCORRECT, numbered after the tuples that share their name.
    """
    predictions = {}
    for report in reports:
        seen: Dict[str, int] = defaultdict(int)
        for tv in report.tuples:
            name = normalize(tv.intent.entity.surface)
            predictions[(report.unit_id, name, tv.intent.occurrence)] = tv.verdict.label.value
            seen[name] = max(seen[name], tv.intent.occurrence + 1)
        for flag in report.extrinsic_flags:
            name = normalize(flag.entity.surface)
            predictions[(report.unit_id, name, seen[name])] = VerdictLabel.INCORRECT.value
            seen[name] += 1
    return predictions


def direct_entity_predictions(
    reports: Iterable[SummaryReport], gold: Mapping[EntityKey, str]
) -> Dict[EntityKey, str]:
    """
    Entity-level predictions of direct-baseline reports.

    A gold row is predicted INCORRECT when the baseline named its entity,
    CORRECT otherwise.
    """
    named: Dict[str, Set[str]] = {
        r.unit_id: {normalize(f.entity_name) for f in r.baseline_findings} for r in reports
    }
    predictions = {}
    for key in gold:
        record_id, name, _ = key
        if record_id not in named:
            continue
        flagged = name in named[record_id]
        predictions[key] = (VerdictLabel.INCORRECT if flagged else VerdictLabel.CORRECT).value
    return predictions


def entity_level_metrics(
    predictions: Mapping[EntityKey, str],
    gold: Mapping[EntityKey, str],
    name: str = "ETF",
    macro_average: str = PipelineDefaults.MACRO_AVERAGE,
    strict: bool = False,
) -> MetricsBundle:
    """
    Binary macro P/R/F1 over {CORRECT, INCORRECT}.

    Predicted IRRELEVANT counts as INCORRECT; UNRESOLVED predictions are
    skipped and counted.

    Raises:
        AlignmentError: A prediction has no gold row (strict alignment)
    """
    mapped = {
        key: VerdictLabel.INCORRECT.value if label == VerdictLabel.IRRELEVANT.value else label
        for key, label in predictions.items()
    }
    y_true, y_pred, skipped, unaligned = _align(
        mapped, gold, {VerdictLabel.UNRESOLVED.value}, strict
    )
    return classification_scores(
        y_true, y_pred, ENTITY_CLASSES, name, "entity", macro_average, skipped, unaligned
    )


# ============================================================================
# Instance level
# ============================================================================

def instance_gold(records: Iterable[DatasetRecord]) -> Dict[str, str]:
    return {r.id: r.gold_instance_label.value for r in records}


def instance_predictions(reports: Iterable[SummaryReport]) -> Dict[str, str]:
    return {r.unit_id: r.instance_label.value for r in reports}


def instance_level_metrics(
    predictions: Mapping[str, str],
    gold: Mapping[str, str],
    name: str = "ETF",
    macro_average: str = PipelineDefaults.MACRO_AVERAGE,
    strict: bool = True,
) -> MetricsBundle:
    """
    Binary macro P/R/F1 over {HALLUCINATED, NOT_HALLUCINATED}.

    INDETERMINATE predictions are counted into skipped_indeterminate.

    Raises:
        AlignmentError: A prediction has no gold record (strict alignment)
    """
    y_true, y_pred, skipped, unaligned = _align(
        predictions, gold, {InstanceLabel.INDETERMINATE.value}, strict
    )
    return classification_scores(
        y_true, y_pred, INSTANCE_CLASSES, name, "instance", macro_average, skipped, unaligned
    )


def instance_metrics_by_model(
    reports: Sequence[SummaryReport],
    records: Sequence[DatasetRecord],
    name: str = "ETF",
    macro_average: str = PipelineDefaults.MACRO_AVERAGE,
) -> Dict[str, MetricsBundle]:
    """Instance-level metrics for each source model, keyed by model name."""
    predictions = instance_predictions(reports)
    by_model: Dict[str, List[DatasetRecord]] = defaultdict(list)
    for record in records:
        by_model[record.source_model].append(record)

    results = {}
    for model in sorted(by_model):
        subset = by_model[model]
        ids = {r.id for r in subset}
        results[model] = instance_level_metrics(
            {k: v for k, v in predictions.items() if k in ids},
            instance_gold(subset),
            name=f"{name} / {model}",
            macro_average=macro_average,
            strict=False,
        )
    return results


# ============================================================================
# Agreement
# ============================================================================

def cohen_kappa(labels_a: Sequence[str], labels_b: Sequence[str]) -> float:
    """
    Cohen's kappa between two label sequences.

    Returns 1.0 when both sequences use one and the same label throughout,
    where chance agreement is 1 and the ratio is undefined.

    Raises:
        LengthMismatchError: If the sequences differ in length
        ValueError: If they are empty
    """
    if len(labels_a) != len(labels_b):
        raise LengthMismatchError(len(labels_a), len(labels_b))
    if not labels_a:
        raise ValueError("cohen_kappa needs at least one label pair")

    if len(set(labels_a) | set(labels_b)) == 1:
        return 1.0
    return float(cohen_kappa_score(list(labels_a), list(labels_b)))


def aligned_entity_labels(
    records_a: Iterable[DatasetRecord], records_b: Iterable[DatasetRecord]
) -> Tuple[List[str], List[str]]:
    """
    Entity labels of two annotation passes over the same records.

    Rows are keyed by (record id, normalized name, occurrence), IRRELEVANT
    included.

    Raises:
        AlignmentError: If a row of the first pass has no counterpart
    """
    def keyed(records: Iterable[DatasetRecord]) -> Dict[EntityKey, str]:
        labels = {}
        for record in records:
            seen: Dict[str, int] = defaultdict(int)
            for row in record.gold_entities:
                name = normalize(row.name)
                labels[(record.id, name, seen[name])] = row.label.value
                seen[name] += 1
        return labels

    a, b = keyed(records_a), keyed(records_b)
    for key in a:
        if key not in b:
            raise AlignmentError(key)
    keys = list(a)
    return [a[k] for k in keys], [b[k] for k in keys]


# ============================================================================
# NER evaluation
# ============================================================================

EntityPair = Tuple[str, str]


def _by_surface(entities: Iterable[EntityPair]) -> Dict[str, Set[str]]:
    grouped: Dict[str, Set[str]] = defaultdict(set)
    for surface, tag in entities:
        name = normalize(surface)
        if name:
            grouped[name].add(tag.value if isinstance(tag, NerTag) else str(tag))
    return grouped


def _tag_counts(pred: Dict[str, Set[str]], gold: Dict[str, Set[str]]) -> Tuple[int, int, int]:
    tp = fp = fn = 0
    for surface in pred.keys() & gold.keys():
        tp += len(pred[surface] & gold[surface])
        fp += len(pred[surface] - gold[surface])
        fn += len(gold[surface] - pred[surface])
    return tp, fp, fn


def _f1(tp: int, fp: int, fn: int) -> float:
    denominator = 2 * tp + fp + fn
    return 2 * tp / denominator if denominator else 0.0


def ner_eval(pred_entities: Iterable[EntityPair], gold_entities: Iterable[EntityPair]) -> NerScores:
    """
    Coverage and tag agreement between predicted and gold summary entities.

    Args:
        pred_entities: (surface, tag) pairs from an extractor
        gold_entities: Reference (surface, tag) pairs

    Returns:
        NerScores with the Jaccard similarity of the normalized surface sets
        and the micro F1 of tag assignment over surfaces present in both
    """
    pred, gold = _by_surface(pred_entities), _by_surface(gold_entities)
    union = pred.keys() | gold.keys()
    if not union:
        return NerScores(jaccard=1.0, type_f1=1.0)
    jaccard = len(pred.keys() & gold.keys()) / len(union)
    return NerScores(jaccard=jaccard, type_f1=_f1(*_tag_counts(pred, gold)))


def ner_eval_corpus(
    pred_by_id: Mapping[str, Sequence[EntityPair]],
    gold_by_id: Mapping[str, Sequence[EntityPair]],
) -> Tuple[NerScores, List[str]]:
    """
    Corpus-level NER scores over records present in both mappings.

    Jaccard is averaged over records; type F1 pools tag counts across them.

    Returns:
        (scores, ids present in only one of the two mappings)
    """
    mismatched = sorted(pred_by_id.keys() ^ gold_by_id.keys())
    shared = [key for key in gold_by_id if key in pred_by_id]
    if not shared:
        return NerScores(jaccard=0.0, type_f1=0.0), mismatched

    jaccards = []
    tp = fp = fn = 0
    for key in shared:
        pred, gold = _by_surface(pred_by_id[key]), _by_surface(gold_by_id[key])
        jaccards.append(ner_eval(pred_by_id[key], gold_by_id[key]).jaccard)
        counts = _tag_counts(pred, gold)
        tp, fp, fn = tp + counts[0], fp + counts[1], fn + counts[2]

    return NerScores(jaccard=float(np.mean(jaccards)), type_f1=_f1(tp, fp, fn)), mismatched


# ============================================================================
# Corpus statistics
# ============================================================================

def _pct(part: int, whole: int) -> float:
    return round(part / whole * 100, 2) if whole else 0.0


def corpus_stats(
    summaries: Sequence[Summary],
    match_results: Sequence[MatchResult],
    code_entity_counts: Sequence[int],
    fabricated_counts: Optional[Sequence[int]] = None,
) -> CorpusStats:
    """
    Per-model summary length, code-entity count and entity partition shares.

    Mapped, unmapped and natural-language percentages are normalized by the
    model's total post-filtration entity count; the fabricated percentage
    by the pre-filtration candidate count.

    Raises:
        LengthMismatchError: If the input sequences are not aligned
    """
    if len(summaries) != len(match_results):
        raise LengthMismatchError(len(summaries), len(match_results))
    if len(summaries) != len(code_entity_counts):
        raise LengthMismatchError(len(summaries), len(code_entity_counts))
    fabricated_counts = fabricated_counts or [0] * len(summaries)
    if len(summaries) != len(fabricated_counts):
        raise LengthMismatchError(len(summaries), len(fabricated_counts))

    groups: Dict[str, List[int]] = defaultdict(list)
    for i, summary in enumerate(summaries):
        groups[summary.source_model or "unknown"].append(i)

    stats = CorpusStats()
    for model in sorted(groups):
        idx = groups[model]
        mapped = sum(len(match_results[i].mapped) for i in idx)
        unmapped = sum(len(match_results[i].unmapped) for i in idx)
        nl = sum(len(match_results[i].nl_entities) for i in idx)
        total = mapped + unmapped + nl
        fabricated = sum(fabricated_counts[i] for i in idx)

        stats.per_model[model] = ModelCorpusStats(
            model=model,
            summaries=len(idx),
            mean_summary_length=round(
                float(np.mean([len(summaries[i].text.split()) for i in idx])), 2
            ),
            mean_code_entity_count=round(float(np.mean([code_entity_counts[i] for i in idx])), 2),
            mapped_pct=_pct(mapped, total),
            unmapped_pct=_pct(unmapped, total),
            nl_pct=_pct(nl, total),
            fabricated_pct=_pct(fabricated, total + fabricated),
        )
    return stats
