"""Signed character-trigram hashing into fixed-size float vectors.

The same scheme backs query embedding (256 dims) and column-name features
(32 dims). Hashing uses blake2b so vectors are identical across processes
and platforms; no randomness, no vocabulary to ship.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np


def trigram_vector(text: str, dim: int) -> np.ndarray:
    """L2-normalized signed trigram counts; all-zero when text has < 3 chars."""
    if dim < 1:
        raise ValueError("dim must be positive")
    out = np.zeros(dim, dtype=np.float64)
    lowered = text.lower()
    if len(lowered) < 3:
        return out
    for i in range(len(lowered) - 2):
        tri = lowered[i : i + 3]
        h = int.from_bytes(
            hashlib.blake2b(tri.encode("utf-8"), digest_size=8).digest(), "little"
        )
        sign = 1.0 if h & 1 == 0 else -1.0
        out[(h >> 1) % dim] += sign
    norm = math.sqrt(float(np.dot(out, out)))
    if norm > 0.0:
        out /= norm
    return out


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b)) / (na * nb)
