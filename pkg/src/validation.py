"""
Whitelist validation for dataset fields and run configuration.

Annotation files and config files are hand-edited, so every enumerated value
is checked against an explicit allow-list before it reaches the pipeline.
"""

import re
from typing import Any, Dict, List, Optional, Set

from .constants import (
    InstanceLabel,
    NerSource,
    NerTag,
    RunMode,
    SummaryRating,
    Taxonomy,
    VerdictLabel,
)
from .errors import EtfError
from .models import DatasetRecord
from .summary_ner import normalize_tag


class ValidationError(EtfError):
    """Raised when input validation fails."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        super().__init__(message=message, details={'field': field} if field else None)


# Labels a human annotator may assign; UNRESOLVED is pipeline-only
ALLOWED_GOLD_LABELS: Set[str] = {
    VerdictLabel.CORRECT.value,
    VerdictLabel.INCORRECT.value,
    VerdictLabel.IRRELEVANT.value,
}

# INDETERMINATE is a prediction outcome, never a gold label
ALLOWED_INSTANCE_LABELS: Set[str] = {
    InstanceLabel.HALLUCINATED.value,
    InstanceLabel.NOT_HALLUCINATED.value,
}

ALLOWED_RATINGS: Set[str] = {r.value for r in SummaryRating}
ALLOWED_TAXONOMY: Set[str] = {t.value for t in Taxonomy}
ALLOWED_MODES: Set[str] = {m.value for m in RunMode}
ALLOWED_NER_SOURCES: Set[str] = {s.value for s in NerSource}
ALLOWED_FORMATS: Set[str] = {"json", "text"}
ALLOWED_MACRO_AVERAGES: Set[str] = {"present", "all"}

ENV_VAR_NAME = re.compile(r"^[A-Z_][A-Z0-9_]*$")


def _choice(value: Any, allowed: Set[str], what: str) -> str:
    if value is None or (isinstance(value, str) and not value.strip()):
        raise ValidationError(f"{what} cannot be empty", field=what)
    text = str(value).strip()
    if text.upper() in allowed:
        return text.upper()
    if text.lower() in allowed:
        return text.lower()
    raise ValidationError(
        f"Invalid {what}: '{value}'. Allowed values: {', '.join(sorted(allowed))}",
        field=what,
    )


class TagValidator:
    """Validator for summary NER tags (canonical spellings and known aliases)."""

    @staticmethod
    def validate(tag: str) -> NerTag:
        if not tag or not str(tag).strip():
            raise ValidationError("Tag cannot be empty", field="tag")
        normalized = normalize_tag(str(tag))
        if normalized is None:
            raise ValidationError(
                f"Invalid tag: '{tag}'. Allowed tags: "
                f"{', '.join(t.value for t in NerTag)}",
                field="tag",
            )
        return normalized


class LabelValidator:
    """Validator for gold entity labels."""

    @staticmethod
    def validate(label: str) -> VerdictLabel:
        return VerdictLabel(_choice(label, ALLOWED_GOLD_LABELS, "label"))


class InstanceLabelValidator:
    @staticmethod
    def validate(label: str) -> InstanceLabel:
        return InstanceLabel(_choice(label, ALLOWED_INSTANCE_LABELS, "gold_instance_label"))


class RatingValidator:
    @staticmethod
    def validate(rating: str) -> SummaryRating:
        return SummaryRating(_choice(rating, ALLOWED_RATINGS, "summary_rating"))


class TaxonomyValidator:
    """Validator for hallucination-cause codes."""

    @staticmethod
    def validate(code: Optional[str]) -> Optional[Taxonomy]:
        if code is None or code == "":
            return None
        return Taxonomy(_choice(code, ALLOWED_TAXONOMY, "taxonomy"))


class BackendConfigValidator:
    """
    Validator for one role's backend block.

    Raw credentials are rejected outright; only the name of the
    environment variable holding them may appear in a config file.
    """

    @staticmethod
    def validate(role: str, block: Dict[str, Any]) -> Dict[str, Any]:
        """
        Args:
            role: Role the block configures (for error messages)
            block: Parsed mapping

        Returns:
            The block, unchanged

        Raises:
            ValidationError: On the first out-of-range or forbidden field
        """
        where = f"{role} backend"

        for forbidden in ("api_key", "key", "token", "secret"):
            if forbidden in block:
                raise ValidationError(
                    f"{where}: '{forbidden}' must not be stored in config; "
                    "set api_key_env to the name of an environment variable instead",
                    field=forbidden,
                )

        temperature = block.get("temperature")
        if temperature is not None and not (
            isinstance(temperature, (int, float)) and 0 <= temperature <= 2
        ):
            raise ValidationError(f"{where}: temperature must be within [0, 2]", field="temperature")

        for name in ("max_new_tokens", "max_in_flight"):
            value = block.get(name)
            if value is not None and not (isinstance(value, int) and value > 0):
                raise ValidationError(f"{where}: {name} must be a positive integer", field=name)

        retries = block.get("max_retries")
        if retries is not None and not (isinstance(retries, int) and retries >= 0):
            raise ValidationError(f"{where}: max_retries must be >= 0", field="max_retries")

        timeout = block.get("request_timeout")
        if timeout is not None and not (isinstance(timeout, (int, float)) and timeout > 0):
            raise ValidationError(f"{where}: request_timeout must be positive", field="request_timeout")

        endpoint = block.get("endpoint")
        if endpoint is not None and not re.match(r"^https?://", str(endpoint)):
            raise ValidationError(f"{where}: endpoint must be an http(s) URL", field="endpoint")

        env = block.get("api_key_env")
        if env is not None and not ENV_VAR_NAME.match(str(env)):
            raise ValidationError(
                f"{where}: api_key_env must name an environment variable, got '{env}'",
                field="api_key_env",
            )

        return block


class DatasetRecordValidator:
    """Consistency rules every annotated record must satisfy."""

    @staticmethod
    def violations(record: DatasetRecord) -> List[str]:
        """
        Rules the record breaks, in a fixed order; empty when valid.
        """
        problems = []
        if not record.id:
            problems.append("id must be non-empty")
        if not record.code.strip():
            problems.append("code must be non-empty")
        if not record.summary.strip():
            problems.append("summary must be non-empty")

        has_incorrect = any(e.label == VerdictLabel.INCORRECT for e in record.gold_entities)
        if has_incorrect and record.gold_instance_label != InstanceLabel.HALLUCINATED:
            problems.append(
                "gold_instance_label must be HALLUCINATED when an entity is INCORRECT"
            )
        if not has_incorrect and record.gold_instance_label == InstanceLabel.HALLUCINATED:
            problems.append(
                "gold_instance_label HALLUCINATED requires at least one INCORRECT entity"
            )

        for entity in record.gold_entities:
            if entity.taxonomy is not None and entity.label != VerdictLabel.INCORRECT:
                problems.append(
                    f"taxonomy on entity '{entity.name}' requires label INCORRECT"
                )
                break
        return problems


# Convenience functions

def validate_tag(tag: str) -> NerTag:
    return TagValidator.validate(tag)


def validate_label(label: str) -> VerdictLabel:
    return LabelValidator.validate(label)


def validate_taxonomy(code: Optional[str]) -> Optional[Taxonomy]:
    return TaxonomyValidator.validate(code)


def validate_mode(mode: str) -> RunMode:
    return RunMode(_choice(mode, ALLOWED_MODES, "mode"))


def validate_ner_source(source: str) -> NerSource:
    return NerSource(_choice(source, ALLOWED_NER_SOURCES, "ner"))


def validate_format(fmt: str) -> str:
    return _choice(fmt, ALLOWED_FORMATS, "format")


def validate_macro_average(mode: str) -> str:
    return _choice(mode, ALLOWED_MACRO_AVERAGES, "macro_average")


def validate_threshold(threshold: Any) -> int:
    """Hallucination threshold: an integer >= 1."""
    if isinstance(threshold, bool) or not isinstance(threshold, int) or threshold < 1:
        raise ValidationError(
            f"Invalid threshold: {threshold}. Must be an integer >= 1", field="threshold"
        )
    return threshold
