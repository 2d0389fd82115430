"""Bitmask helpers. Bit ``i`` of a mask is the treatment of unit ``i``."""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence, Union

import numpy as np

Assignment = Union[int, Sequence[int], np.ndarray]

# masks are int64, so exact enumeration and mask-indexed tables stop here
MAX_MASK_UNITS = 62


def to_mask(z: Assignment, n: int) -> int:
    """Normalize an integer mask or 0/1 vector to an integer mask."""
    if isinstance(z, (int, np.integer)):
        z = int(z)
        if z < 0 or z >> n:
            raise ValueError(f"mask {z} is not a valid assignment for n={n}")
        return z
    bits = np.asarray(z)
    if bits.shape != (n,):
        raise ValueError(f"assignment vector must have length {n}, got shape {bits.shape}")
    if not np.isin(bits, (0, 1)).all():
        raise ValueError("assignment vector entries must be 0 or 1")
    return int(sum(1 << i for i in np.flatnonzero(bits)))


def to_vector(mask: int, n: int) -> np.ndarray:
    return ((mask >> np.arange(n)) & 1).astype(bool)


def bits(masks: np.ndarray, n: int) -> np.ndarray:
    """Expand an array of masks into an ``(m, n)`` boolean matrix."""
    masks = np.asarray(masks, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(bool)


def masks_of(z: np.ndarray) -> np.ndarray:
    """Inverse of :func:`bits` for an ``(m, n)`` boolean matrix."""
    n = z.shape[1]
    if n > MAX_MASK_UNITS:
        raise ValueError(f"cannot encode {n} units as int64 masks")
    weights = np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))
    return z.astype(np.int64) @ weights


@lru_cache(maxsize=32)
def popcounts(n: int) -> np.ndarray:
    """Number of treated units for every mask ``0..2^n-1``."""
    counts = np.zeros(1, dtype=np.int64)
    for _ in range(n):
        counts = np.concatenate([counts, counts + 1])
    counts.setflags(write=False)
    return counts


def format_mask(mask: int, n: int) -> str:
    """1-based treated set, e.g. ``{1,3}``."""
    return "{" + ",".join(str(i + 1) for i in range(n) if mask >> i & 1) + "}"
