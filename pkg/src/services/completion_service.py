"""
Chat-completion service for live model access.

Sends one user message per request to an OpenAI-compatible endpoint and
returns the first choice's text. The SDK's own retry loop is disabled;
retries, per-attempt timeouts and error mapping come from
``backend_operation`` so every failure carries the request's role and
fingerprint.
"""

import asyncio
import logging
import weakref
from contextlib import asynccontextmanager
from typing import AsyncIterator, Optional, Union

import httpx
from openai import AsyncOpenAI

from ..config import BackendConfig
from ..constants import Role
from ..decorators import backend_operation
from ..errors import BackendError, MalformedBackendOutputError
from ..fixtures import FixtureStore, fingerprint, role_name
from ..log_sanitizer import clip, safe_log_error
from .base import CompletionBackend

logger = logging.getLogger(__name__)


class InFlightLimiter:
    """
    Cap on concurrent requests shared by every service holding it.

    asyncio semaphores bind to the loop they are first used on, so one is
    kept per running loop.
    """

    def __init__(self, limit: int):
        if limit < 1:
            raise ValueError(f"In-flight limit must be >= 1, got {limit}")
        self.limit = limit
        self._semaphores: "weakref.WeakKeyDictionary[asyncio.AbstractEventLoop, asyncio.Semaphore]" = (
            weakref.WeakKeyDictionary()
        )

    def _semaphore(self) -> asyncio.Semaphore:
        loop = asyncio.get_running_loop()
        semaphore = self._semaphores.get(loop)
        if semaphore is None:
            semaphore = asyncio.Semaphore(self.limit)
            self._semaphores[loop] = semaphore
        return semaphore

    @asynccontextmanager
    async def slot(self) -> AsyncIterator[None]:
        async with self._semaphore():
            yield


class ChatCompletionService(CompletionBackend):
    """
    Live backend for one configured model.

    Example:
        service = ChatCompletionService(config.backend(Role.JUDGE))
        text = await service.complete(Role.JUDGE, prompt)
    """

    def __init__(
        self,
        config: BackendConfig,
        limiter: Optional[InFlightLimiter] = None,
        store: Optional[FixtureStore] = None,
        http_client: Optional[httpx.AsyncClient] = None,
        api_key: Optional[str] = None,
    ):
        """
        Args:
            config: Endpoint, model and decoding settings
            limiter: Shared in-flight cap; a private one sized by
                ``config.max_in_flight`` when omitted
            store: When given, every response is recorded into it
            http_client: Transport override (tests inject httpx.MockTransport)
            api_key: Credential override; read from ``config.api_key_env``
                when omitted

        Raises:
            ConfigurationError: If no credential is available
        """
        super().__init__(source_model=config.label)
        self.config = config
        self.limiter = limiter or InFlightLimiter(config.max_in_flight)
        self.store = store

        self._client = AsyncOpenAI(
            api_key=api_key or config.api_key(),
            base_url=config.endpoint,
            timeout=config.request_timeout,
            max_retries=0,
            http_client=http_client,
        )
        self._send = backend_operation(
            timeout_seconds=config.request_timeout,
            max_retries=config.max_retries,
        )(self._send_once)

    async def _send_once(
        self,
        *,
        role_name: str,
        fingerprint: str,
        prompt: str,
        timeout_seconds: float,
    ) -> str:
        response = await self._client.chat.completions.create(
            model=self.config.model,
            messages=[{"role": "user", "content": prompt}],
            temperature=self.config.temperature,
            max_tokens=self.config.max_new_tokens,
            timeout=timeout_seconds,
        )
        if not response.choices or response.choices[0].message.content is None:
            raise MalformedBackendOutputError(
                "completion has no message content",
                role=role_name,
                fingerprint=fingerprint,
            )
        return response.choices[0].message.content

    async def complete(self, role: Union[Role, str], prompt: str) -> str:
        """
        Send ``prompt`` and return the first message text.

        Raises:
            UnauthorizedError: Credential rejected
            RateLimitExhaustedError: 429s persisted through every retry
            BackendUnavailableError: Transient failures persisted
            RequestTimeoutError: An attempt exceeded request_timeout
        """
        name = role_name(role)
        fp = fingerprint(role, prompt)
        self._stats['requests'] += 1

        logger.debug(f"Sending {name} request {fp[:12]} to {self.config.model}: {clip(prompt, 80)}")
        try:
            async with self.limiter.slot():
                text = await self._send(
                    role_name=name,
                    fingerprint=fp,
                    prompt=prompt,
                    timeout_seconds=self.config.request_timeout,
                )
        except BackendError as e:
            self._stats['failures'] += 1
            logger.error(safe_log_error(e, f"{name} request failed"))
            raise

        if self.store is not None:
            self.store.put(role, prompt, text)
        return text

    async def close(self) -> None:
        await self._client.close()
