"""Content-addressed disk cache for exact rational matrices.

Entries are JSON files named by the SHA-256 of their key. Each file stores its
key and a fingerprint of the payload; a mismatch on load is treated as a miss,
so corruption causes a recompute rather than a wrong answer. Writes go
through a temporary file and ``os.replace``.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
from pathlib import Path

import flint

log = logging.getLogger(__name__)

# bump when bases or normalisations change, so old entries stop matching
CODE_VERSION = "pnewcong-1"
ENV_VAR = "PNEWCONG_CACHE"


def default_root() -> Path | None:
    root = os.environ.get(ENV_VAR)
    return Path(root) if root else None


def _fingerprint(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


class MatrixCache:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def _path(self, key) -> Path:
        name = hashlib.sha256(json.dumps([CODE_VERSION, *key]).encode()).hexdigest()
        return self.root / f"{name}.json"

    def get(self, key) -> flint.fmpq_mat | None:
        path = self._path(key)
        try:
            d = json.loads(path.read_text(encoding="ascii"))
        except (OSError, ValueError):
            self.misses += 1
            return None
        payload = d.get("payload", {})
        if d.get("fingerprint") != _fingerprint(payload) or payload.get("key") != [CODE_VERSION, *key]:
            log.warning("cache entry %s failed its fingerprint check; recomputing", path.name)
            self.misses += 1
            return None
        rows, cols = payload["shape"]
        m = flint.fmpq_mat(rows, cols)
        for t, s in enumerate(payload["entries"]):
            num, _, den = s.partition("/")
            m[t // cols, t % cols] = flint.fmpq(int(num), int(den or 1))
        self.hits += 1
        return m

    def put(self, key, m: flint.fmpq_mat) -> None:
        entries = []
        for x in m.entries():
            entries.append(str(int(x.p)) if x.q == 1 else f"{int(x.p)}/{int(x.q)}")
        payload = {"key": [CODE_VERSION, *key], "shape": [m.nrows(), m.ncols()], "entries": entries}
        text = json.dumps({"payload": payload, "fingerprint": _fingerprint(payload)})
        path = self._path(key)
        with self._lock:
            fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="ascii") as fh:
                fh.write(text)
            os.replace(tmp, path)


def open_cache(root=None) -> MatrixCache | None:
    root = Path(root) if root else default_root()
    return MatrixCache(root) if root else None
