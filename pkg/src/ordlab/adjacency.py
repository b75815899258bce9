"""Adjacency bitmaps over truncation universes, with binary file caching.

Cache layout: an 8-byte magic, a little-endian u32 header (version,
max_exp, max_coeff, name length), the utf-8 colouring name, a 32-byte
sha256 of the payload, then the payload itself: one row per vertex,
padded to whole 64-bit little-endian words.
"""

from __future__ import annotations

import hashlib
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .colourings import Colouring, colour_row, truncation_context
from .ordinals import Truncation

__all__ = [
    "AdjacencyBitmap",
    "MemoryBudgetError",
    "CacheError",
    "build_adjacency",
    "adjacency",
    "load_cache",
    "save_cache",
    "cache_path",
]

MAGIC = b"OLADJBIN"
VERSION = 1
DEFAULT_BUDGET = 1 << 30


class MemoryBudgetError(RuntimeError):
    pass


class CacheError(RuntimeError):
    """Cache file unreadable: bad magic, version, key or checksum."""


@dataclass
class AdjacencyBitmap:
    """Symmetric bit matrix over universe indices; row i packs the
    neighbours of vertex i into little-endian 64-bit words."""

    trunc: Truncation
    colouring_name: str
    words: np.ndarray  # shape (n, w), dtype uint64

    @property
    def n(self) -> int:
        return self.trunc.size

    def get(self, i: int, j: int) -> bool:
        return bool((int(self.words[i, j >> 6]) >> (j & 63)) & 1)

    def row_int(self, i: int) -> int:
        return int.from_bytes(self.words[i].tobytes(), "little")

    def row_ints(self) -> list[int]:
        return [self.row_int(i) for i in range(self.n)]

    def neighbours(self, i: int) -> list[int]:
        return _bit_indices(self.row_int(i))

    def degree(self, i: int) -> int:
        return self.row_int(i).bit_count()

    def edge_count(self) -> int:
        return sum(self.degree(i) for i in range(self.n)) // 2

    def checksum(self) -> str:
        return hashlib.sha256(self.words.tobytes()).hexdigest()


def _bit_indices(x: int) -> list[int]:
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


def _pack_rows(rows: np.ndarray) -> np.ndarray:
    n = rows.shape[0]
    packed = np.packbits(rows, axis=1, bitorder="little")
    pad = (-packed.shape[1]) % 8
    if pad:
        packed = np.pad(packed, ((0, 0), (0, pad)))
    return packed.reshape(n, -1, 8).view("<u8").reshape(n, -1).astype(np.uint64)


def build_adjacency(
    col: Colouring,
    trunc: Truncation,
    threads: int = 1,
    memory_budget: int = DEFAULT_BUDGET,
) -> AdjacencyBitmap:
    """Evaluate the colouring on every pair, honouring the colouring's
    domain bound; rows are computed independently so thread partitioning
    cannot change the result."""
    n = trunc.size
    wbytes = ((n + 63) // 64) * 8
    if n * wbytes > memory_budget:
        raise MemoryBudgetError(
            f"{n} vertices need {n * wbytes} bytes, budget {memory_budget}"
        )
    truncation_context(trunc)  # warm the shared context
    active = np.ones(n, dtype=bool)
    if col.bound is not None:
        bound = col.bound
        for i in range(n):
            active[i] = trunc.ordinal_at(i) < bound

    rows = np.zeros((n, n), dtype=bool)

    def fill(lo: int, hi: int) -> None:
        for u in range(lo, hi):
            if not active[u]:
                continue
            r = colour_row(col, trunc, u)
            rows[u] = r & active

    if threads <= 1 or n < 64:
        fill(0, n)
    else:
        step = (n + threads - 1) // threads
        ranges = [(i, min(i + step, n)) for i in range(0, n, step)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda r: fill(*r), ranges))

    return AdjacencyBitmap(trunc, col.name, _pack_rows(rows))


def cache_path(cache_dir: Path, name: str, trunc: Truncation) -> Path:
    safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in name)
    return Path(cache_dir) / f"{safe}-E{trunc.max_exp}-C{trunc.max_coeff}.adj"


def save_cache(adj: AdjacencyBitmap, path: Path) -> None:
    payload = adj.words.astype("<u8").tobytes()
    name = adj.colouring_name.encode()
    header = struct.pack(
        "<IIII", VERSION, adj.trunc.max_exp, adj.trunc.max_coeff, len(name)
    )
    digest = hashlib.sha256(payload).digest()
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC + header + name + digest + payload)


def load_cache(path: Path, name: str, trunc: Truncation) -> AdjacencyBitmap:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MAGIC:
        raise CacheError("bad magic")
    version, max_exp, max_coeff, name_len = struct.unpack("<IIII", blob[8:24])
    if version != VERSION:
        raise CacheError(f"version {version} != {VERSION}")
    got_name = blob[24 : 24 + name_len].decode()
    if got_name != name or max_exp != trunc.max_exp or max_coeff != trunc.max_coeff:
        raise CacheError("cache key mismatch")
    off = 24 + name_len
    digest = blob[off : off + 32]
    payload = blob[off + 32 :]
    if hashlib.sha256(payload).digest() != digest:
        raise CacheError("checksum mismatch")
    n = trunc.size
    w = ((n + 63) // 64)
    words = np.frombuffer(payload, dtype="<u8").reshape(n, w).astype(np.uint64)
    return AdjacencyBitmap(trunc, name, words)


def adjacency(
    col: Colouring,
    trunc: Truncation,
    cache_dir: Optional[Path] = None,
    threads: int = 1,
    memory_budget: int = DEFAULT_BUDGET,
) -> AdjacencyBitmap:
    """Cached adjacency keyed by (colouring name, max_exp, max_coeff);
    unreadable or stale cache entries are rebuilt and overwritten."""
    key = col.cache_key
    if cache_dir is None or key is None:
        return build_adjacency(col, trunc, threads, memory_budget)
    path = cache_path(Path(cache_dir), key, trunc)
    if path.exists():
        try:
            return load_cache(path, key, trunc)
        except (CacheError, OSError, ValueError):
            pass
    adj = build_adjacency(col, trunc, threads, memory_budget)
    save_cache(adj, path)
    return adj
