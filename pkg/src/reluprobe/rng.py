"""Counter-based random streams and the provenance hash.

Every random draw in the package comes from a Philox generator keyed by
``(master_seed, hash of a purpose path)``.  Philox is counter-based, so
streams for different purposes are independent by construction: the stream
that initializes layer 3 does not change when a layer is added, a sweep
point is inserted, or another module draws more numbers.
"""

from __future__ import annotations

import numpy as np

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = _FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _path_hash(path) -> int:
    parts = []
    for p in path:
        if isinstance(p, (int, np.integer)):
            parts.append(f"i{int(p)}")
        elif isinstance(p, str):
            parts.append(f"s{p}")
        else:
            raise TypeError(f"stream path elements must be int or str, got {type(p)!r}")
    return fnv1a_64("/".join(parts).encode())


def stream(master_seed: int, *path) -> np.random.Generator:
    """Independent generator for ``(master_seed, path)``.

    ``path`` is a sequence of ints/strings naming the purpose, e.g.
    ``stream(seed, "weights", layer)`` or ``stream(seed, "perturb", 0, 2)``.
    """
    if not 0 <= int(master_seed) <= _MASK64:
        raise ValueError("master_seed must fit in an unsigned 64-bit integer")
    key = np.array([int(master_seed), _path_hash(path)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
