"""Deterministic RNG sub-streams.

Every stochastic routine in the package draws from a numpy Generator derived
from one master seed plus a named tag, so that independent pipeline stages
(initialization, chain moves, per-run attacks, per-rep rewirings) never share
or race on a stream and results are reproducible from the seed alone.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["substream"]


def _tag_to_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.blake2s(str(tag).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def substream(seed: int, *tags) -> np.random.Generator:
    """Generator for the sub-stream identified by (seed, *tags)."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_tag_to_int(t) for t in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))
