"""
CodeSumEval-format dataset loading, conversion and statistics.

The canonical format is JSONL, one annotated record per line, with the keys
of ``DatasetRecord.to_dict()``; the schema is documented in docs/DATASET.md.
"""

import json
import logging
from collections import Counter, OrderedDict
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

from .constants import InstanceLabel, SummaryRating, Taxonomy, VerdictLabel
from .errors import DatasetParseError, InputDecodeError, InvariantViolationError
from .models import DatasetRecord, GoldEntity, SourceUnit
from .validation import (
    DatasetRecordValidator,
    InstanceLabelValidator,
    RatingValidator,
    ValidationError,
    validate_label,
    validate_tag,
    validate_taxonomy,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

REQUIRED_KEYS = (
    "id",
    "source_model",
    "code",
    "summary",
    "summary_rating",
    "gold_instance_label",
    "gold_entities",
)


# ============================================================================
# JSONL helpers
# ============================================================================

def decode_line(number: int, line: str) -> Dict[str, Any]:
    """
    Parse one JSONL line into an object.

    Raises:
        DatasetParseError: On invalid JSON or a non-object value
    """
    try:
        row = json.loads(line)
    except ValueError as e:
        raise DatasetParseError(number, f"invalid JSON: {e}", original_error=e)
    if not isinstance(row, dict):
        raise DatasetParseError(number, "each line must be a JSON object")
    return row


def _numbered_lines(path: PathLike) -> Iterator[Tuple[int, str]]:
    number = 0
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for number, line in enumerate(handle, start=1):
                if line.strip():
                    yield number, line
    except UnicodeDecodeError as e:
        raise InputDecodeError(path, f"not UTF-8 text after line {number}", original_error=e)


def iter_jsonl(path: PathLike) -> Iterator[Tuple[int, Dict[str, Any]]]:
    """
    Yield (line number, object) for every non-blank line.

    Raises:
        DatasetParseError: On invalid JSON or a non-object line
    """
    for number, line in _numbered_lines(path):
        yield number, decode_line(number, line)


def dump_jsonl_line(row: Mapping[str, Any]) -> str:
    return json.dumps(row, ensure_ascii=False) + "\n"


def write_jsonl(path: PathLike, rows: Iterable[Mapping[str, Any]]) -> int:
    """Write rows as JSONL, replacing the file. Returns the row count."""
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for row in rows:
            handle.write(dump_jsonl_line(row))
            count += 1
    return count


# ============================================================================
# Record parsing
# ============================================================================

def _sentences_field(value: Any) -> Tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return tuple(line.strip() for line in value.splitlines() if line.strip())
    if isinstance(value, list):
        return tuple(str(v) for v in value)
    raise ValueError("relevant_sentences must be a string or a list of strings")


def parse_gold_entity(row: Mapping[str, Any]) -> GoldEntity:
    """
    Build a GoldEntity from its JSON form.

    Raises:
        ValidationError: On an unknown tag, label or taxonomy code
        ValueError: On a missing name
    """
    name = row.get("name")
    if not isinstance(name, str) or not name.strip():
        raise ValueError("gold entity needs a non-empty 'name'")
    return GoldEntity(
        name=name,
        tag=validate_tag(row.get("tag", "")),
        label=validate_label(row.get("label", "")),
        relevant_sentences=_sentences_field(row.get("relevant_sentences")),
        taxonomy=validate_taxonomy(row.get("taxonomy")),
    )


def parse_record(row: Mapping[str, Any], line: int = 0) -> DatasetRecord:
    """
    Build a DatasetRecord from one JSON object.

    Raises:
        DatasetParseError: Missing keys or values of the wrong shape
    """
    missing = [key for key in REQUIRED_KEYS if key not in row]
    if missing:
        raise DatasetParseError(line, f"missing keys: {', '.join(missing)}")

    entities = row["gold_entities"]
    if not isinstance(entities, list):
        raise DatasetParseError(line, "gold_entities must be a list")

    try:
        return DatasetRecord(
            id=str(row["id"]),
            source_model=str(row["source_model"]),
            code=str(row["code"]),
            summary=str(row["summary"]),
            summary_rating=RatingValidator.validate(row["summary_rating"]),
            gold_instance_label=InstanceLabelValidator.validate(row["gold_instance_label"]),
            gold_entities=tuple(parse_gold_entity(e) for e in entities),
        )
    except (ValidationError, ValueError, AttributeError) as e:
        reason = e.message if isinstance(e, ValidationError) else str(e)
        raise DatasetParseError(line, reason, original_error=e)


def load_dataset(path: PathLike, strict: bool = True) -> List[DatasetRecord]:
    """
    Load and validate an annotated dataset.

    Args:
        path: JSONL file
        strict: Abort on the first bad line; otherwise log and skip it

    Returns:
        Records in file order

    Raises:
        DatasetParseError: Unparseable line (strict mode)
        InvariantViolationError: Record breaking a consistency rule (strict mode)
        OSError: File cannot be read
    """
    records: List[DatasetRecord] = []
    seen_ids = set()
    skipped = 0

    for number, line in _numbered_lines(path):
        try:
            record = parse_record(decode_line(number, line), number)
            problems = DatasetRecordValidator.violations(record)
            if record.id in seen_ids:
                problems.append(f"duplicate id '{record.id}'")
            if problems:
                raise InvariantViolationError(number, problems[0], record.id)
        except (DatasetParseError, InvariantViolationError) as e:
            if strict:
                raise
            logger.warning(f"Skipping {path}:{number}: {e.message}")
            skipped += 1
            continue

        seen_ids.add(record.id)
        records.append(record)

    logger.info(f"Loaded {len(records)} records from {path}" + (f" ({skipped} skipped)" if skipped else ""))
    return records


def load_code_units(path: PathLike) -> List[SourceUnit]:
    """
    Read code snippets for summary generation.

    Each line is ``{"id": ..., "code": ...}``.

    Raises:
        DatasetParseError: On a malformed line
    """
    units = []
    for number, row in iter_jsonl(path):
        if "id" not in row or not isinstance(row.get("code"), str):
            raise DatasetParseError(number, "code rows need 'id' and a string 'code'")
        units.append(SourceUnit(text=row["code"], id=str(row["id"])))
    return units


# ============================================================================
# Upstream conversion
# ============================================================================

# Accepted spellings for columns of a tuple-per-row export
UPSTREAM_COLUMNS: Dict[str, Tuple[str, ...]] = {
    "id": ("summary_id", "id", "instance_id"),
    "source_model": ("model", "source_model", "llm"),
    "code": ("code", "source_code"),
    "summary": ("summary", "generated_summary"),
    "summary_rating": ("rating", "summary_rating", "quality"),
    "name": ("entity", "entity_name", "name"),
    "tag": ("entity_type", "tag", "type"),
    "relevant_sentences": ("relevant_sentences", "relevant_sentence", "intent"),
    "label": ("label", "hallucination_label"),
    "taxonomy": ("taxonomy", "cause"),
}


def _column(row: Mapping[str, Any], field: str) -> Any:
    for key in UPSTREAM_COLUMNS[field]:
        if key in row and row[key] not in (None, ""):
            return row[key]
    return None


def convert_upstream(rows: Iterable[Mapping[str, Any]]) -> List[DatasetRecord]:
    """
    Group a tuple-per-row annotation export into DatasetRecords.

    Rows sharing a summary id become one record, in first-seen order; the
    gold instance label is derived from the entity labels.

    Raises:
        DatasetParseError: When a row lacks an id or its fields do not validate
    """
    grouped: "OrderedDict[str, Dict[str, Any]]" = OrderedDict()

    for number, row in enumerate(rows, start=1):
        record_id = _column(row, "id")
        if record_id is None:
            raise DatasetParseError(number, "row has no summary id")
        record_id = str(record_id)

        if record_id not in grouped:
            grouped[record_id] = {
                "id": record_id,
                "source_model": str(_column(row, "source_model") or "unknown"),
                "code": _column(row, "code") or "",
                "summary": _column(row, "summary") or "",
                "summary_rating": _column(row, "summary_rating") or SummaryRating.GOOD.value,
                "gold_entities": [],
            }

        if _column(row, "name") is not None:
            entity = {
                "name": _column(row, "name"),
                "tag": _column(row, "tag") or "",
                "label": _column(row, "label") or "",
                "relevant_sentences": _column(row, "relevant_sentences"),
                "taxonomy": _column(row, "taxonomy"),
            }
            try:
                grouped[record_id]["gold_entities"].append(parse_gold_entity(entity))
            except (ValidationError, ValueError) as e:
                reason = e.message if isinstance(e, ValidationError) else str(e)
                raise DatasetParseError(number, reason, original_error=e)

    records = []
    for fields in grouped.values():
        entities = tuple(fields.pop("gold_entities"))
        hallucinated = any(e.label == VerdictLabel.INCORRECT for e in entities)
        try:
            rating = RatingValidator.validate(fields.pop("summary_rating"))
        except ValidationError as e:
            raise DatasetParseError(0, f"record '{fields['id']}': {e.message}", original_error=e)
        records.append(
            DatasetRecord(
                summary_rating=rating,
                gold_instance_label=(
                    InstanceLabel.HALLUCINATED if hallucinated else InstanceLabel.NOT_HALLUCINATED
                ),
                gold_entities=entities,
                **fields,
            )
        )

    logger.info(f"Converted {len(records)} records from upstream rows")
    return records


# ============================================================================
# Statistics
# ============================================================================

def dataset_statistics(records: Iterable[DatasetRecord]) -> Dict[str, Any]:
    """
    Summary table of an annotated dataset.

    Returns:
        Dictionary with summary and entity totals, hallucinated share, label,
        rating and taxonomy counts, per-model summary counts and the mean
        number of INCORRECT entities among FAIR/POOR summaries
    """
    records = list(records)
    labels: Counter = Counter()
    ratings: Counter = Counter()
    taxonomy: Counter = Counter()
    models: Counter = Counter()
    fair_poor_incorrect: List[int] = []

    for record in records:
        ratings[record.summary_rating.value] += 1
        models[record.source_model] += 1
        incorrect = 0
        for entity in record.gold_entities:
            labels[entity.label.value] += 1
            if entity.taxonomy is not None:
                taxonomy[entity.taxonomy.value] += 1
            if entity.label == VerdictLabel.INCORRECT:
                incorrect += 1
        if record.summary_rating in (SummaryRating.FAIR, SummaryRating.POOR):
            fair_poor_incorrect.append(incorrect)

    hallucinated = sum(
        1 for r in records if r.gold_instance_label == InstanceLabel.HALLUCINATED
    )
    total = len(records)

    return {
        "summaries": total,
        "hallucinated": hallucinated,
        "hallucinated_percent": round(hallucinated / total * 100, 2) if total else 0.0,
        "entities": sum(labels.values()),
        "labels": {label.value: labels.get(label.value, 0) for label in (
            VerdictLabel.CORRECT, VerdictLabel.INCORRECT, VerdictLabel.IRRELEVANT
        )},
        "ratings": {r.value: ratings.get(r.value, 0) for r in SummaryRating},
        "models": dict(sorted(models.items())),
        "mean_incorrect_fair_poor": (
            round(sum(fair_poor_incorrect) / len(fair_poor_incorrect), 2)
            if fair_poor_incorrect else 0.0
        ),
        "taxonomy": {t.value: taxonomy[t.value] for t in Taxonomy if taxonomy[t.value]},
    }


def load_summaries(path: PathLike) -> Dict[Tuple[str, str], Dict[str, Any]]:
    """
    Previously generated summaries keyed by (id, source_model).

    Missing files yield an empty mapping so generation can resume from scratch.
    """
    path = Path(path)
    if not path.exists():
        return {}
    done = {}
    for _, row in iter_jsonl(path):
        done[(str(row.get("id")), str(row.get("source_model")))] = row
    return done


def find_record(records: Iterable[DatasetRecord], record_id: str) -> Optional[DatasetRecord]:
    for record in records:
        if record.id == record_id:
            return record
    return None
