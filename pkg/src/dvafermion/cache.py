"""On-disk cache for bare current modes.

Entries live in one JSON file.  Each entry is keyed by a sha256 of every
field that determines the operator; the file carries a format version and
the library version, and any disagreement raises instead of reusing data.
"""

from __future__ import annotations

import hashlib
import json
import os
from fractions import Fraction
from pathlib import Path

from . import __version__
from .coeff import XLaurent
from .fock import GradedOperator, default_contraction

CACHE_FORMAT = "dvafermion-operator-cache"
CACHE_VERSION = 1


class CacheMismatchError(RuntimeError):
    """The cache file was written by an incompatible version or for different inputs."""


def operator_key(current, k2: int, backend: str = "exact", window=None) -> dict:
    spec = current.spec
    space = current.space
    return {
        "kind": spec.kind,
        "r": spec.r,
        "sector": spec.sector,
        "sign": spec.sign,
        "lambda": str(space.cutoff),
        "mode": str(Fraction(k2, 2)),
        "backend": backend,
        "window": None if window is None else [window.lo, window.hi],
    }


def key_hash(key: dict) -> str:
    return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()


def op_to_json(op: GradedOperator) -> dict:
    return {
        "degree": str(op.degree),
        "cols": {str(j): {str(i): c.to_json() for i, c in sorted(col.items())} for j, col in sorted(op.cols.items())},
    }


def op_from_json(data: dict, space) -> GradedOperator:
    cols = {int(j): {int(i): XLaurent.from_json(c) for i, c in col.items()} for j, col in data["cols"].items()}
    return GradedOperator(space, space, Fraction(data["degree"]), cols)


class OperatorCache:
    """Lazily loaded, write-through cache of bare modes."""

    def __init__(self, path, backend: str = "exact", window=None):
        self.path = Path(path)
        self.backend = backend
        self.window = window
        self.hits = 0
        self.misses = 0
        self._entries = None

    def _load(self) -> dict:
        if self._entries is not None:
            return self._entries
        if not self.path.exists():
            self._entries = {}
            return self._entries
        data = json.loads(self.path.read_text())
        if data.get("format") != CACHE_FORMAT or data.get("version") != CACHE_VERSION:
            raise CacheMismatchError(f"{self.path}: cache format/version {data.get('version')} != {CACHE_VERSION}")
        if data.get("library") != __version__:
            raise CacheMismatchError(f"{self.path}: written by library {data.get('library')}, running {__version__}")
        self._entries = data.get("entries", {})
        return self._entries

    def _save(self):
        data = {"format": CACHE_FORMAT, "version": CACHE_VERSION, "library": __version__, "entries": self._entries}
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        tmp.write_text(json.dumps(data, sort_keys=True))
        os.replace(tmp, self.path)

    def get_or_build(self, current, k2: int, build):
        if current.contraction is not default_contraction:
            return build()  # perturbed operators are never cached
        key = operator_key(current, k2, self.backend, self.window)
        h = key_hash(key)
        entries = self._load()
        hit = entries.get(h)
        if hit is not None:
            if hit["key"] != key:
                raise CacheMismatchError(f"cache entry {h[:12]} does not match its key")
            self.hits += 1
            return op_from_json(hit["op"], current.space)
        self.misses += 1
        op = build()
        entries[h] = {"key": key, "op": op_to_json(op)}
        self._save()
        return op
