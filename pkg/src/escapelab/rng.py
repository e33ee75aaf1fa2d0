"""Seed derivation and generator construction.

Every Monte Carlo unit draws from its own PCG64 stream whose seed is a keyed
hash of the master seed and a label path, so results never depend on how the
units are scheduled across workers.
"""

from __future__ import annotations

import hashlib
from collections.abc import Sequence

import numpy as np

MAX_SEED = 2**64


def _frame(label: str | int) -> bytes:
    if isinstance(label, bool) or not isinstance(label, (str, int, np.integer)):
        raise TypeError(f"labels must be str or int, got {type(label).__name__}")
    if isinstance(label, str):
        tag, payload = b"s", label.encode("utf-8")
    else:
        tag, payload = b"i", str(int(label)).encode("ascii")
    return tag + len(payload).to_bytes(8, "little") + payload


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def derive_seed(master: int, labels: Sequence[str | int]) -> int:
    """Derive a 64-bit stream seed from ``master`` and a label path.

    Labels are length-prefixed and type-tagged before hashing, so
    ``["a", "b"]`` and ``["ab"]`` (or ``[1]`` and ``["1"]``) never collide
    by construction.
    """
    if isinstance(labels, (str, bytes)) or len(labels) == 0:
        raise ValueError("labels must be a non-empty sequence")
    h = hashlib.blake2b(key=check_seed(master).to_bytes(8, "little"), digest_size=8)
    for label in labels:
        h.update(_frame(label))
    return int.from_bytes(h.digest(), "little")


def generator(seed: int, labels: Sequence[str | int] | None = None) -> np.random.Generator:
    if labels is not None:
        seed = derive_seed(seed, labels)
    return np.random.Generator(np.random.PCG64(check_seed(seed)))
