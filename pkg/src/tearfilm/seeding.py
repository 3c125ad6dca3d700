"""Deterministic named substreams derived from a single user seed."""

from __future__ import annotations

import zlib

import numpy as np


def substream_seed(seed: int, *names) -> np.random.SeedSequence:
    """A SeedSequence for the substream identified by (seed, *names).

    Names are hashed with crc32, so the mapping is stable across runs,
    platforms, and process boundaries.
    """
    key = tuple(zlib.crc32(str(n).encode()) for n in names)
    return np.random.SeedSequence(entropy=seed, spawn_key=key)


def substream(seed: int, *names) -> np.random.Generator:
    """A fresh Generator for the substream identified by (seed, *names)."""
    return np.random.default_rng(substream_seed(seed, *names))
