"""
Unit tests for run configuration loading and validation.
"""

from pathlib import Path

import pytest

from src.config import BackendConfig, PipelineSettings, RunConfig, load_config
from src.constants import NerSource, Role, RunMode
from src.errors import ConfigurationError


def write(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "etf.yaml"
    path.write_text(text, encoding="utf-8")
    return path


class TestBackendConfig:
    """Test per-role backend blocks."""

    def test_defaults(self):
        config = BackendConfig()
        assert config.temperature == 0.3
        assert config.max_new_tokens == 4000
        assert config.api_key_env == "ETF_API_KEY"
        assert config.label == config.model

    def test_name_is_label(self):
        assert BackendConfig(model="m", name="granite-20b").label == "granite-20b"

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError) as exc_info:
            BackendConfig.from_dict("judge", {"modle": "x"})
        assert "modle" in str(exc_info.value)

    def test_raw_key_rejected(self):
        with pytest.raises(ConfigurationError):
            BackendConfig.from_dict("judge", {"api_key": "sk-123"})

    def test_api_key_from_env(self, monkeypatch):
        monkeypatch.setenv("JUDGE_KEY", "secret")
        assert BackendConfig(api_key_env="JUDGE_KEY").api_key() == "secret"

    def test_missing_api_key(self, monkeypatch):
        monkeypatch.delenv("ABSENT_KEY", raising=False)
        with pytest.raises(ConfigurationError) as exc_info:
            BackendConfig(api_key_env="ABSENT_KEY").api_key()
        assert "ABSENT_KEY" in str(exc_info.value)


class TestLoadConfig:
    """Test YAML loading."""

    def test_none_gives_defaults(self):
        config = load_config(None)
        assert config.mode == RunMode.REPLAY
        assert config.backend(Role.JUDGE) == BackendConfig()

    def test_full_file(self, tmp_path):
        path = write(tmp_path, """
mode: live
fixtures_dir: fixtures
record_fixtures: true
ner_source: heuristic
judge:
  endpoint: http://localhost:8000/v1
  model: llama3-70b
  api_key_env: LOCAL_KEY
  max_in_flight: 2
generators:
  - model: granite-20b-code-instruct
    name: granite-20b
  - model: gpt-4o
pipeline:
  threshold: 2
  count_extrinsic: true
""")
        config = load_config(path).validate()
        assert config.mode == RunMode.LIVE
        assert config.ner == NerSource.HEURISTIC
        assert config.fixtures_dir == tmp_path / "fixtures"
        assert config.record_fixtures
        assert config.backend(Role.JUDGE).model == "llama3-70b"
        assert config.backend(Role.NER) == BackendConfig()
        assert [g.label for g in config.generators] == ["granite-20b", "gpt-4o"]
        assert config.pipeline.threshold == 2
        assert config.pipeline.count_extrinsic

    def test_example_file(self):
        """Test the shipped example loads and keeps the ner role block apart."""
        path = Path(__file__).parent.parent / "config.example.yaml"
        config = load_config(path).validate()
        assert config.mode == RunMode.REPLAY
        assert config.ner == NerSource.LLM
        assert config.fixtures_dir == path.parent / "fixtures"
        assert config.backend(Role.NER).model == "gpt-4o"
        assert config.backend(Role.JUDGE).max_in_flight == 4
        assert [g.label for g in config.generators] == ["gpt-4o", "codellama", "granite"]

    def test_absolute_fixtures_dir_kept(self, tmp_path):
        target = tmp_path / "abs"
        config = load_config(write(tmp_path, f"fixtures_dir: {target}\n"))
        assert config.fixtures_dir == target

    def test_unknown_top_level_key(self, tmp_path):
        with pytest.raises(ConfigurationError) as exc_info:
            load_config(write(tmp_path, "mode: replay\nthreshhold: 2\n"))
        assert "threshhold" in str(exc_info.value)

    def test_unknown_pipeline_key(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(write(tmp_path, "pipeline:\n  treshold: 2\n"))

    def test_invalid_yaml(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(write(tmp_path, "mode: [unclosed\n"))

    def test_not_a_mapping(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(write(tmp_path, "- a\n- b\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "nope.yaml")

    def test_empty_file(self, tmp_path):
        assert load_config(write(tmp_path, "")) == RunConfig()


class TestOverridesAndValidation:
    """Test command-line overrides and cross-field rules."""

    def test_overrides_route_pipeline_fields(self):
        config = RunConfig().with_overrides(
            mode="oracle", threshold=3, count_extrinsic=True, format=None
        )
        assert config.mode == "oracle"
        assert config.pipeline.threshold == 3
        assert config.pipeline.count_extrinsic
        assert config.format == "json"

    def test_validate_normalises(self, tmp_path):
        config = RunConfig(mode="REPLAY", ner="Heuristic", format="TEXT",
                           fixtures_dir=tmp_path).validate()
        assert config.mode == RunMode.REPLAY
        assert config.ner == NerSource.HEURISTIC
        assert config.format == "text"

    def test_replay_needs_fixtures(self):
        with pytest.raises(ConfigurationError):
            RunConfig(mode=RunMode.REPLAY).validate()
        # commands that never call a backend do not care
        RunConfig(mode=RunMode.REPLAY).validate(require_backends=False)

    def test_gold_ner_only_in_oracle(self, tmp_path):
        with pytest.raises(ConfigurationError):
            RunConfig(mode=RunMode.REPLAY, fixtures_dir=tmp_path, ner=NerSource.GOLD).validate()
        RunConfig(mode=RunMode.ORACLE, ner=NerSource.GOLD).validate()

    def test_record_needs_live_and_dir(self, tmp_path):
        with pytest.raises(ConfigurationError):
            RunConfig(mode=RunMode.LIVE, record_fixtures=True).validate()
        with pytest.raises(ConfigurationError):
            RunConfig(mode=RunMode.REPLAY, fixtures_dir=tmp_path, record_fixtures=True).validate()
        RunConfig(mode=RunMode.LIVE, fixtures_dir=tmp_path, record_fixtures=True).validate()

    def test_direct_not_in_oracle(self):
        with pytest.raises(ConfigurationError):
            RunConfig(mode=RunMode.ORACLE, direct=True).validate()

    @pytest.mark.parametrize("settings", [
        PipelineSettings(threshold=0),
        PipelineSettings(max_verdict_attempts=0),
        PipelineSettings(max_output_attempts=0),
        PipelineSettings(max_concurrent_records=0),
        PipelineSettings(macro_average="weighted"),
    ])
    def test_pipeline_limits(self, settings):
        with pytest.raises(ConfigurationError):
            RunConfig(mode=RunMode.ORACLE, pipeline=settings).validate()

    def test_bad_mode(self):
        with pytest.raises(ConfigurationError):
            RunConfig(mode="offline").validate()
