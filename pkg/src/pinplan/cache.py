"""On-disk JSON payload cache keyed by content hashes."""

from __future__ import annotations

import hashlib
import json
import pathlib


def cache_key(*parts) -> str:
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, bytes):
            h.update(part)
        else:
            h.update(json.dumps(part, sort_keys=True, default=str).encode())
        h.update(b"\x1f")
    return h.hexdigest()


class PayloadCache:
    def __init__(self, root):
        self.root = pathlib.Path(root) if root else None

    def get(self, key: str) -> bytes | None:
        if self.root is None:
            return None
        path = self.root / f"{key}.json"
        return path.read_bytes() if path.exists() else None

    def put(self, key: str, payload: bytes) -> None:
        if self.root is None:
            return
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = self.root / f".{key}.tmp"
        tmp.write_bytes(payload)
        tmp.replace(self.root / f"{key}.json")
