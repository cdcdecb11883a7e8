"""Seeded random streams.

A run is driven by one unsigned 64-bit seed. Every independent stream is
derived from ``(seed, key...)`` through numpy's ``SeedSequence`` spawn keys,
so a stream never depends on how many numbers some other stream consumed.
String key parts are mapped to integers with CRC32.

Per-trial seeds for Monte Carlo loops come from :func:`trial_seed`, which is
the splitting function used everywhere (serial and parallel execution give
the same numbers).
"""
from __future__ import annotations

import zlib
from enum import IntEnum

import numpy as np

SEED_MAX = (1 << 64) - 1


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def _key_words(key) -> tuple[int, ...]:
    words = []
    for part in key:
        if isinstance(part, str):
            words.append(zlib.crc32(part.encode()))
        else:
            part = int(part)
            if part < 0:
                raise ValueError("stream key parts must be non-negative")
            words.append(part)
    return tuple(words)


def stream(seed: int, *key) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=_key_words(key))
    return np.random.Generator(np.random.PCG64(ss))


def trial_seed(seed: int, trial: int, *key) -> int:
    """64-bit seed of trial ``trial`` derived from a master seed."""
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=_key_words(("trial", trial) + key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class Slot(IntEnum):
    """Rows of the per-round uniform block; see :func:`round_block`."""

    MODE = 0
    TRAP = 1
    MEASURE = 2
    ADVERSARY = 3
    LABEL = 4
    PAULI = 5
    DUMMY = 6
    PRODUCT = 7


def round_block(seed: int, n: int, attempt: int, rnd: int, protocol: int = 3) -> np.ndarray:
    """Uniforms of shape ``(len(Slot), n, n)`` for one protocol round.

    Entry ``[slot, i, j]`` is reserved for the event "slot" concerning
    distributor ``i`` and participant ``j``. The layout does not depend on who
    the sender is, which is what makes paired runs (same seed, different
    sender) comparable draw by draw.
    """
    return stream(seed, "round", protocol, attempt, rnd).random((len(Slot), n, n))
