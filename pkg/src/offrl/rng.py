"""Seed derivation.

All randomness goes through numpy's PCG64 bit generator, which produces the
same stream on every platform for a given seed. Child streams are derived by
hashing a task key together with the base seed, so the stream for one task
does not depend on how many other tasks exist or in what order they run.
"""

from __future__ import annotations

import hashlib

import numpy as np

GENERATOR_ID = "numpy.PCG64/SeedSequence"


def derive_seed(base_seed: int, *key) -> int:
    """Stable 63-bit seed for ``key`` under ``base_seed``."""
    text = repr((int(base_seed),) + tuple(key)).encode()
    return int.from_bytes(hashlib.sha256(text).digest()[:8], "little") >> 1


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def sample_categorical(rng: np.random.Generator, probs: np.ndarray, size: int | None = None):
    """Inverse-CDF draw from one distribution (``probs`` 1-D)."""
    cdf = np.cumsum(probs)
    cdf[np.flatnonzero(probs > 0)[-1]:] = 1.0
    u = rng.random(size)
    return np.searchsorted(cdf, u, side="right")


def sample_rows(rng: np.random.Generator, rows: np.ndarray) -> np.ndarray:
    """One inverse-CDF draw from each row of a 2-D probability table."""
    cdf = np.cumsum(rows, axis=1)
    # pin the cdf to 1 from the last positive entry on, so rounding can never
    # land on a zero-probability tail
    last = rows.shape[1] - 1 - np.argmax(rows[:, ::-1] > 0, axis=1)
    cdf[np.arange(rows.shape[1])[None, :] >= last[:, None]] = 1.0
    u = rng.random(rows.shape[0])
    return (cdf <= u[:, None]).sum(axis=1)


def sample_successors(rng: np.random.Generator, table: np.ndarray, index: np.ndarray) -> np.ndarray:
    """Draw one successor per entry of ``index`` from the rows of ``table``.

    ``table`` is (R, K) with probability rows; ``index`` selects a row per draw.
    Row r's pinned cdf is shifted by r, which makes the flattened cdf monotone,
    so a single ``searchsorted`` serves every draw without materializing rows.
    """
    rows, k = table.shape
    cdf = np.cumsum(table, axis=1)
    last = k - 1 - np.argmax(table[:, ::-1] > 0, axis=1)
    cdf[np.arange(k)[None, :] >= last[:, None]] = 1.0
    flat = (cdf + np.arange(rows)[:, None]).ravel()
    u = rng.random(index.shape[0])
    pos = np.searchsorted(flat, u + index, side="right")
    return pos - index * k
