"""
Gold-label oracle backends.

Answer judge questions and NER requests from human annotations instead of a
model. With both in place the pipeline reproduces the gold instance labels,
which bounds any disagreement in a live run to extraction and matching.

Gold rows labelled IRRELEVANT are dropped before indexing. Both the
extractor and the judge walk the same filtered row list, so the occurrence
index the pipeline assigns to a tuple lines up with the row it came from.
"""

import logging
from collections import defaultdict
from typing import Dict, Iterable, List, Tuple

from ..errors import OracleMissError
from ..matching import normalize
from ..models import (
    DatasetRecord,
    GoldEntity,
    IntentTuple,
    SourceUnit,
    Summary,
    SummaryEntity,
    Verdict,
)
from ..summary_ner import EntityExtractor
from ..verification import Judge

logger = logging.getLogger(__name__)

GoldKey = Tuple[str, int]


def gold_index(record: DatasetRecord) -> Dict[GoldKey, GoldEntity]:
    """Scored gold rows keyed by (normalized name, occurrence index)."""
    seen: Dict[str, int] = defaultdict(int)
    index = {}
    for row in record.scored_entities():
        name = normalize(row.name)
        index[(name, seen[name])] = row
        seen[name] += 1
    return index


def oracle_judge(record: DatasetRecord, intent: IntentTuple) -> Verdict:
    """
    Gold verdict for a tuple.

    Args:
        record: Annotated record the tuple was built from
        intent: Tuple to look up

    Returns:
        Verdict carrying the gold label; IRRELEVANT passes through unchanged

    Raises:
        OracleMissError: If no gold row has the tuple's name and occurrence
    """
    key = (normalize(intent.entity.surface), intent.occurrence)
    row = gold_index(record).get(key)
    if row is None:
        raise OracleMissError(record.id, intent.entity.surface)
    return Verdict(label=row.label, raw_backend_text=row.label.value)


class _RecordLookup:
    def __init__(self, records: Iterable[DatasetRecord]):
        self._records: Dict[str, DatasetRecord] = {r.id: r for r in records}
        self._indexes: Dict[str, Dict[GoldKey, GoldEntity]] = {}

    def record(self, record_id: str, entity: str) -> DatasetRecord:
        try:
            return self._records[record_id]
        except KeyError:
            raise OracleMissError(record_id, entity)

    def index(self, record_id: str) -> Dict[GoldKey, GoldEntity]:
        if record_id not in self._indexes:
            self._indexes[record_id] = gold_index(self.record(record_id, "*"))
        return self._indexes[record_id]

    def __len__(self) -> int:
        return len(self._records)


class OracleJudge(Judge):
    """
    Judge answering from gold labels.

    Returns the label as plain text so responses go through the same verdict
    parser as model output.
    """

    name = "oracle"

    def __init__(self, records: Iterable[DatasetRecord]):
        self._lookup = _RecordLookup(records)

    async def judge_intent(self, intent: IntentTuple, code: SourceUnit) -> str:
        key = (normalize(intent.entity.surface), intent.occurrence)
        row = self._lookup.index(intent.unit_id).get(key)
        if row is None:
            raise OracleMissError(intent.unit_id, intent.entity.surface)
        return row.label.value


class GoldEntityExtractor(EntityExtractor):
    """Extractor emitting a record's scored gold rows in annotation order."""

    name = "gold"
    trusted = True

    def __init__(self, records: Iterable[DatasetRecord]):
        self._lookup = _RecordLookup(records)

    async def extract(self, summary: Summary) -> List[SummaryEntity]:
        record = self._lookup.record(summary.id, "*")
        entities = [
            SummaryEntity(surface=row.name, tag=row.tag) for row in record.scored_entities()
        ]
        logger.debug(f"Gold NER for '{summary.id}': {len(entities)} entities")
        return entities
