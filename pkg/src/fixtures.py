"""
Fixture store for recorded model responses.

Each response is a UTF-8 text file named by the request fingerprint, the
SHA-256 of the role and the fully rendered prompt. Lookups are exact: a
changed prompt template yields new fingerprints and stale fixtures are simply
never read.
"""

import hashlib
import logging
import os
import threading
from pathlib import Path
from typing import Any, Dict, Union

from .constants import Role
from .errors import MissingFixtureError

logger = logging.getLogger(__name__)


def role_name(role: Union[Role, str]) -> str:
    return role.value if isinstance(role, Role) else str(role)


def fingerprint(role: Union[Role, str], prompt: str) -> str:
    """
    Request fingerprint.

    Args:
        role: Model role the prompt is sent to
        prompt: Rendered prompt text

    Returns:
        Hex SHA-256 of ``"<role>\\n<prompt>"``
    """
    payload = f"{role_name(role)}\n{prompt}".encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


class FixtureStore:
    """
    Directory of canned responses keyed by fingerprint.

    Tracks hit/miss/write counts like an in-memory cache would, so replay runs
    can report how much of a corpus was covered.
    """

    def __init__(self, directory: Union[str, Path]):
        """
        Args:
            directory: Folder holding ``<fingerprint>.txt`` files. Created on
                first write.
        """
        self.directory = Path(directory)
        self._lock = threading.RLock()
        self._stats = {'hits': 0, 'misses': 0, 'writes': 0}

    def path_for(self, fp: str) -> Path:
        return self.directory / f"{fp}.txt"

    def contains(self, role: Union[Role, str], prompt: str) -> bool:
        return self.path_for(fingerprint(role, prompt)).is_file()

    def get(self, role: Union[Role, str], prompt: str) -> str:
        """
        Canned response for a request.

        Raises:
            MissingFixtureError: If no file exists for the fingerprint
        """
        fp = fingerprint(role, prompt)
        path = self.path_for(fp)

        with self._lock:
            if not path.is_file():
                self._stats['misses'] += 1
                raise MissingFixtureError(
                    role=role_name(role), fingerprint=fp, store_path=str(self.directory)
                )
            self._stats['hits'] += 1

        logger.debug(f"Fixture hit: {role_name(role)} {fp[:12]}")
        with open(path, "r", encoding="utf-8", newline="") as handle:
            return handle.read()

    def put(self, role: Union[Role, str], prompt: str, response: str) -> Path:
        """
        Store a response, replacing any previous one atomically.

        Returns:
            Path of the written file
        """
        fp = fingerprint(role, prompt)
        path = self.path_for(fp)

        with self._lock:
            self.directory.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            with open(tmp, "w", encoding="utf-8", newline="") as handle:
                handle.write(response)
            os.replace(tmp, path)
            self._stats['writes'] += 1

        logger.debug(f"Fixture recorded: {role_name(role)} {fp[:12]}")
        return path

    def __len__(self) -> int:
        if not self.directory.is_dir():
            return 0
        return sum(1 for _ in self.directory.glob("*.txt"))

    def get_stats(self) -> Dict[str, Any]:
        with self._lock:
            lookups = self._stats['hits'] + self._stats['misses']
            return {
                'directory': str(self.directory),
                'hits': self._stats['hits'],
                'misses': self._stats['misses'],
                'writes': self._stats['writes'],
                'hit_rate_percent': round(self._stats['hits'] / lookups * 100, 2)
                if lookups else 0,
            }
