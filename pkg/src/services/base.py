"""
Shared behaviour of completion backends.
"""

import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Union

from ..constants import Role
from ..errors import EmptySourceError
from ..models import SourceUnit, Summary
from ..prompts import render_summary_prompt

logger = logging.getLogger(__name__)


class CompletionBackend(ABC):
    """
    Anything that turns a (role, prompt) pair into response text.

    Subclasses implement ``complete``; summary generation is defined once
    here on top of it.
    """

    def __init__(self, source_model: Optional[str] = None):
        self.source_model = source_model
        self._stats = {'requests': 0, 'failures': 0}

    @property
    def generation_role(self) -> str:
        """
        Role key for summary requests.

        Qualified by source model: several generators receive the same
        prompt, and their fixtures must not share a fingerprint.
        """
        if self.source_model:
            return f"{Role.GENERATE.value}:{self.source_model}"
        return Role.GENERATE.value

    @abstractmethod
    async def complete(self, role: Union[Role, str], prompt: str) -> str:
        """Response text for ``prompt`` sent under ``role``."""

    async def generate_summary(self, code: SourceUnit) -> Summary:
        """
        Summarize a code unit with the summary generation prompt.

        Args:
            code: Java source to summarize

        Returns:
            Summary holding the raw completion, tagged with this backend's
            source_model

        Raises:
            EmptySourceError: If the code is blank (no request is made)
            BackendError: As raised by ``complete``
        """
        if not code.text or not code.text.strip():
            raise EmptySourceError("code", code.id)

        text = await self.complete(self.generation_role, render_summary_prompt(code.text))
        logger.debug(f"Generated summary for '{code.id}' ({len(text.split())} words)")
        return Summary(text=text, id=code.id, source_model=self.source_model)

    async def close(self) -> None:
        """Release network resources; no-op for offline backends."""

    def get_stats(self) -> Dict[str, Any]:
        return dict(self._stats, source_model=self.source_model)
