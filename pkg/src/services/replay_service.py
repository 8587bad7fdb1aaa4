"""
Replay backend: answers every request from the fixture store.
"""

import logging
from typing import Optional, Union

from ..constants import Role
from ..errors import MissingFixtureError
from ..fixtures import FixtureStore, role_name
from .base import CompletionBackend

logger = logging.getLogger(__name__)


class ReplayService(CompletionBackend):
    """
    Offline backend reading canned responses by request fingerprint.

    Never opens a connection; a request without a fixture raises
    MissingFixtureError.
    """

    def __init__(self, store: FixtureStore, source_model: Optional[str] = None):
        super().__init__(source_model=source_model)
        self.store = store

    async def complete(self, role: Union[Role, str], prompt: str) -> str:
        self._stats['requests'] += 1
        try:
            return self.store.get(role, prompt)
        except MissingFixtureError as e:
            self._stats['failures'] += 1
            logger.error(f"Replay miss for {role_name(role)} request {e.fingerprint[:12]}")
            raise
