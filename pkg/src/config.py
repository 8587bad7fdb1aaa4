"""
Run configuration.

A single YAML file holds the execution mode, the fixture directory, one
backend block per model role and pipeline defaults. Command-line flags
override file values; the merged RunConfig is validated once before a run.
Credentials never appear in the file: each backend names the environment
variable that holds its key, and a local .env is loaded at startup.
"""

import logging
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from dotenv import load_dotenv

from .constants import BackendDefaults, NerSource, PipelineDefaults, Role, RunMode
from .errors import ConfigurationError
from .validation import (
    BackendConfigValidator,
    ValidationError,
    validate_format,
    validate_macro_average,
    validate_mode,
    validate_ner_source,
    validate_threshold,
)

logger = logging.getLogger(__name__)


def load_environment() -> None:
    """Load a .env file from the working directory, if present."""
    load_dotenv()


@dataclass(frozen=True)
class BackendConfig:
    """
    Connection and decoding settings for one chat-completion backend.

    Attributes:
        name: Label recorded as source_model for generated summaries;
            defaults to the model name
    """

    endpoint: str = BackendDefaults.ENDPOINT
    model: str = BackendDefaults.MODEL
    temperature: float = BackendDefaults.TEMPERATURE
    max_new_tokens: int = BackendDefaults.MAX_NEW_TOKENS
    api_key_env: str = BackendDefaults.API_KEY_ENV
    max_retries: int = BackendDefaults.MAX_RETRIES
    max_in_flight: int = BackendDefaults.MAX_IN_FLIGHT
    request_timeout: float = BackendDefaults.REQUEST_TIMEOUT
    name: Optional[str] = None

    @property
    def label(self) -> str:
        return self.name or self.model

    @classmethod
    def from_dict(cls, role: str, block: Optional[Dict[str, Any]]) -> "BackendConfig":
        """
        Build from a parsed YAML block.

        Raises:
            ConfigurationError: On unknown keys or invalid values
        """
        block = dict(block or {})
        try:
            BackendConfigValidator.validate(role, block)
        except ValidationError as e:
            raise ConfigurationError(e.message, details={'role': role, 'field': e.field})

        known = {f.name for f in fields(cls)}
        unknown = sorted(set(block) - known)
        if unknown:
            raise ConfigurationError(
                f"{role} backend: unknown keys {', '.join(unknown)}",
                details={'role': role},
            )
        return cls(**block)

    def api_key(self) -> str:
        """
        Read the credential from the configured environment variable.

        Raises:
            ConfigurationError: If the variable is unset or empty
        """
        value = os.getenv(self.api_key_env)
        if not value:
            raise ConfigurationError(
                f"Missing credential: environment variable {self.api_key_env} is not set",
                details={'api_key_env': self.api_key_env},
            )
        return value


@dataclass(frozen=True)
class PipelineSettings:
    threshold: int = PipelineDefaults.THRESHOLD
    count_extrinsic: bool = False
    lenient_case: bool = False
    polysemy_guard: bool = True
    max_verdict_attempts: int = PipelineDefaults.MAX_VERDICT_ATTEMPTS
    max_output_attempts: int = PipelineDefaults.MAX_OUTPUT_ATTEMPTS
    macro_average: str = PipelineDefaults.MACRO_AVERAGE
    max_concurrent_records: int = BackendDefaults.MAX_IN_FLIGHT

    @classmethod
    def from_dict(cls, block: Optional[Dict[str, Any]]) -> "PipelineSettings":
        block = dict(block or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(block) - known)
        if unknown:
            raise ConfigurationError(f"pipeline: unknown keys {', '.join(unknown)}")
        return cls(**block)


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a run needs besides its input files.

    Exactly one execution mode applies per run: replay reads canned
    responses, live calls the configured endpoints, oracle answers judge
    questions from gold annotations.
    """

    mode: RunMode = RunMode.REPLAY
    fixtures_dir: Optional[Path] = None
    record_fixtures: bool = False
    backends: Dict[Role, BackendConfig] = field(default_factory=dict)
    generators: List[BackendConfig] = field(default_factory=list)
    pipeline: PipelineSettings = field(default_factory=PipelineSettings)
    ner: NerSource = NerSource.LLM
    direct: bool = False
    output: Optional[Path] = None
    format: str = "json"
    strict: bool = True

    def backend(self, role: Role) -> BackendConfig:
        """Backend block for ``role``; missing roles get the defaults."""
        return self.backends.get(role, BackendConfig())

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """
        Copy with command-line values applied.

        None means "not given". Pipeline fields (threshold, count_extrinsic,
        lenient_case, macro_average) are routed into ``pipeline``.
        """
        pipeline_names = {f.name for f in fields(PipelineSettings)}
        top, nested = {}, {}
        for key, value in overrides.items():
            if value is None:
                continue
            (nested if key in pipeline_names else top)[key] = value

        config = replace(self, **top) if top else self
        if nested:
            config = replace(config, pipeline=replace(config.pipeline, **nested))
        return config

    def validate(self, require_backends: bool = True) -> "RunConfig":
        """
        Check cross-field rules and normalise enumerated values.

        Args:
            require_backends: Also check that the mode can serve model
                requests (off for commands that never call a backend)

        Raises:
            ConfigurationError: If the combination of settings cannot run
        """
        try:
            mode = validate_mode(self.mode.value if isinstance(self.mode, RunMode) else self.mode)
            ner = validate_ner_source(self.ner.value if isinstance(self.ner, NerSource) else self.ner)
            fmt = validate_format(self.format)
            validate_threshold(self.pipeline.threshold)
            validate_macro_average(self.pipeline.macro_average)
        except ValidationError as e:
            raise ConfigurationError(e.message, details={'field': e.field})

        if ner == NerSource.GOLD and mode != RunMode.ORACLE:
            raise ConfigurationError("Gold NER is only available in oracle mode")
        if require_backends and mode == RunMode.REPLAY and self.fixtures_dir is None:
            raise ConfigurationError("Replay mode requires fixtures_dir")
        if self.record_fixtures and (mode != RunMode.LIVE or self.fixtures_dir is None):
            raise ConfigurationError("record_fixtures requires live mode and fixtures_dir")
        if self.direct and mode == RunMode.ORACLE:
            raise ConfigurationError("The direct baseline needs a replay or live judge")
        if self.pipeline.max_verdict_attempts < 1 or self.pipeline.max_output_attempts < 1:
            raise ConfigurationError("Attempt limits must be >= 1")
        if self.pipeline.max_concurrent_records < 1:
            raise ConfigurationError("max_concurrent_records must be >= 1")

        return replace(self, mode=mode, ner=ner, format=fmt)


def _role_blocks(raw: Dict[str, Any]) -> Dict[Role, BackendConfig]:
    backends = {}
    for role in Role:
        if role.value in raw:
            backends[role] = BackendConfig.from_dict(role.value, raw[role.value])
    return backends


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Read a RunConfig from YAML.

    Args:
        path: Config file; None yields the defaults

    Returns:
        Unvalidated RunConfig (call ``validate()`` after applying overrides)

    Raises:
        ConfigurationError: If the file is unreadable or malformed
    """
    if path is None:
        return RunConfig()

    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = yaml.safe_load(handle) or {}
    except OSError as e:
        raise ConfigurationError(f"Cannot read config {path}: {e.strerror}", details={'path': str(path)})
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Invalid YAML in {path}: {e}", details={'path': str(path)})

    if not isinstance(raw, dict):
        raise ConfigurationError(f"Config {path} must be a mapping at the top level")

    known = {"mode", "fixtures_dir", "record_fixtures", "generators", "pipeline", "ner_source"}
    known |= {role.value for role in Role}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigurationError(f"Unknown config keys: {', '.join(unknown)}")

    fixtures_dir = raw.get("fixtures_dir")
    if fixtures_dir is not None:
        fixtures_dir = Path(fixtures_dir)
        if not fixtures_dir.is_absolute():
            fixtures_dir = path.parent / fixtures_dir

    generators = [
        BackendConfig.from_dict(f"generators[{i}]", block)
        for i, block in enumerate(raw.get("generators") or [])
    ]

    config = RunConfig(
        mode=raw.get("mode", RunMode.REPLAY.value),
        fixtures_dir=fixtures_dir,
        record_fixtures=bool(raw.get("record_fixtures", False)),
        backends=_role_blocks(raw),
        generators=generators,
        pipeline=PipelineSettings.from_dict(raw.get("pipeline")),
        ner=raw.get("ner_source", NerSource.LLM.value),
    )
    logger.debug(f"Loaded config from {path}: mode={config.mode}, roles={sorted(r.value for r in config.backends)}")
    return config
