"""JSON result cache keyed by the full parameter tuple and code version.

Entries live under the directory given by ``--cache-dir`` or the
``SEPKIT_CACHE_DIR`` environment variable.  Writes go to a temporary file
in the same directory and are renamed into place.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from pathlib import Path

from . import __version__

ENV_VAR = "SEPKIT_CACHE_DIR"


def resolve_dir(flag: str | os.PathLike | None = None) -> Path | None:
    d = flag if flag else os.environ.get(ENV_VAR)
    return Path(d) if d else None


class Cache:
    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)

    @classmethod
    def from_env(cls, flag=None) -> "Cache | None":
        d = resolve_dir(flag)
        return cls(d) if d else None

    @staticmethod
    def _canonical(key: dict) -> str:
        return json.dumps({**key, "code_version": __version__}, sort_keys=True, default=str)

    def _path(self, key: dict) -> Path:
        digest = hashlib.sha256(self._canonical(key).encode()).hexdigest()[:32]
        return self.directory / f"{key.get('operation', 'entry')}-{digest}.json"

    def get(self, key: dict, min_digits: int | None = None) -> dict | None:
        """Exact-key lookup; entries certified below ``min_digits`` are ignored."""
        path = self._path(key)
        if not path.exists():
            return None
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return None
        if entry.get("key") != json.loads(self._canonical(key)):
            return None
        if min_digits is not None:
            got = entry.get("certified_digits")
            if got is None or got < min_digits:
                return None
        return entry["value"]

    def put(self, key: dict, value, certified_digits: int | None = None) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self._path(key)
        entry = {"key": json.loads(self._canonical(key)), "value": value,
                 "certified_digits": certified_digits, "timestamp": time.time()}
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(entry, fh)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return path
