"""
Backend manager for the model roles of a run.

Creates one backend per role on first use and routes ``complete(role,
prompt)`` calls to it, so a single manager can be handed to the NER
extractor and the judge as their client.
"""

import logging
from typing import Any, Dict, Iterable, List, Optional, Union

import httpx

from .config import BackendConfig, RunConfig
from .constants import NerSource, Role, RunMode
from .errors import ConfigurationError
from .fixtures import FixtureStore
from .models import DatasetRecord
from .services.base import CompletionBackend
from .services.completion_service import ChatCompletionService, InFlightLimiter
from .services.oracle_service import GoldEntityExtractor, OracleJudge
from .services.replay_service import ReplayService
from .summary_ner import ChatEntityExtractor, EntityExtractor, HeuristicEntityExtractor
from .verification import ChatJudge, Judge

logger = logging.getLogger(__name__)


class BackendManager:
    """
    Lazily built backends keyed by role.

    In replay mode every role reads the fixture store. In live mode each
    role gets a ChatCompletionService; all of them share one in-flight
    limiter. Oracle mode answers judge questions from gold labels and
    serves any other role from fixtures, so it never touches the network.

    Example:
        manager = BackendManager(config)
        judge = manager.judge()
        extractor = manager.extractor(NerSource.LLM)
        ...
        await manager.aclose()
    """

    def __init__(
        self,
        config: RunConfig,
        records: Optional[Iterable[DatasetRecord]] = None,
        http_client: Optional[httpx.AsyncClient] = None,
    ):
        """
        Args:
            config: Validated run configuration
            records: Annotated records; required for oracle judging and gold NER
            http_client: Transport override passed to live services
        """
        self.config = config
        self.records: List[DatasetRecord] = list(records or [])
        self.http_client = http_client

        self.store = FixtureStore(config.fixtures_dir) if config.fixtures_dir else None
        limits = [b.max_in_flight for b in config.backends.values()] or [
            BackendConfig().max_in_flight
        ]
        self.limiter = InFlightLimiter(min(limits))

        self._backends: Dict[str, CompletionBackend] = {}
        self._creation_count = 0
        self._reuse_count = 0

    def _build(self, key: str, backend_config: BackendConfig) -> CompletionBackend:
        mode = self.config.mode
        if mode == RunMode.LIVE:
            store = self.store if self.config.record_fixtures else None
            return ChatCompletionService(
                backend_config,
                limiter=self.limiter,
                store=store,
                http_client=self.http_client,
            )
        if self.store is None:
            raise ConfigurationError(
                f"{mode.value} mode needs fixtures_dir to serve the {key} role"
            )
        return ReplayService(self.store, source_model=backend_config.label)

    def _get(self, key: str, backend_config: BackendConfig) -> CompletionBackend:
        if key in self._backends:
            self._reuse_count += 1
            return self._backends[key]

        backend = self._build(key, backend_config)
        self._backends[key] = backend
        self._creation_count += 1
        logger.info(f"Created {type(backend).__name__} for {key} ({backend_config.label})")
        return backend

    def get_backend(self, role: Union[Role, str]) -> CompletionBackend:
        """
        Backend serving ``role``, created on first request.

        Raises:
            ConfigurationError: If the mode cannot serve the role
        """
        role = Role(role)
        return self._get(role.value, self.config.backend(role))

    def generators(self) -> List[CompletionBackend]:
        """
        One backend per configured generator model.

        Falls back to the ``generate`` role block when no generators list
        is configured.
        """
        if not self.config.generators:
            return [self.get_backend(Role.GENERATE)]
        return [
            self._get(f"{Role.GENERATE.value}:{g.label}", g) for g in self.config.generators
        ]

    async def complete(self, role: Union[Role, str], prompt: str) -> str:
        return await self.get_backend(role).complete(role, prompt)

    def judge(self) -> Judge:
        if self.config.mode == RunMode.ORACLE:
            if not self.records:
                raise ConfigurationError("Oracle mode requires a dataset with gold labels")
            return OracleJudge(self.records)
        return ChatJudge(self)

    def extractor(self, source: Optional[NerSource] = None) -> EntityExtractor:
        """
        Summary entity extractor for ``source`` (default: the configured one).

        Raises:
            ConfigurationError: Gold NER outside oracle mode or without records
        """
        source = NerSource(source or self.config.ner)
        if source == NerSource.HEURISTIC:
            return HeuristicEntityExtractor()
        if source == NerSource.GOLD:
            if self.config.mode != RunMode.ORACLE or not self.records:
                raise ConfigurationError("Gold NER requires oracle mode and a dataset")
            return GoldEntityExtractor(self.records)
        return ChatEntityExtractor(self)

    def get_loaded_roles(self) -> List[str]:
        return sorted(self._backends)

    async def aclose(self) -> None:
        for backend in self._backends.values():
            await backend.close()
        self._backends.clear()

    def get_statistics(self) -> Dict[str, Any]:
        """
        Usage statistics.

        Returns:
            Dictionary with mode, loaded roles, creation and reuse counts,
            per-backend request counts and fixture store stats when present
        """
        total = self._creation_count + self._reuse_count
        return {
            "mode": self.config.mode.value,
            "loaded_roles": self.get_loaded_roles(),
            "backend_creations": self._creation_count,
            "backend_reuses": self._reuse_count,
            "reuse_rate_percent": round(self._reuse_count / total * 100, 2) if total else 0.0,
            "in_flight_limit": self.limiter.limit,
            "backends": {key: b.get_stats() for key, b in sorted(self._backends.items())},
            "fixtures": self.store.get_stats() if self.store else None,
        }

    def __repr__(self) -> str:
        return (
            f"BackendManager(mode={self.config.mode.value}, "
            f"roles={self.get_loaded_roles()}, limit={self.limiter.limit})"
        )
