"""Seeded random-number streams.

Every stochastic routine in the package draws from numpy PCG64
generators built through SeedSequence, so a master seed plus a stream
index fully determines every draw, independent of platform and of how
work is split across walkers or replicas.
"""

from __future__ import annotations

import numpy as np

__all__ = ["seeded_rng", "spawn_rngs"]


def seeded_rng(seed: int) -> np.random.Generator:
    """One deterministic generator for the given integer seed."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """n independent child generators keyed by (seed, child index)."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]
