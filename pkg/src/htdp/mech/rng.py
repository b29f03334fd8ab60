"""Seeded random streams with independent splitting (numpy SeedSequence)."""
from __future__ import annotations

import numpy as np


class RngStream:
    """A single-owner random stream.

    Identical seeds give identical draws. ``split`` spawns children whose
    streams are independent by the SeedSequence construction; the parent
    keeps a counter so repeated splits never reuse a child.
    """

    def __init__(self, seed=0):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            self._seq = np.random.SeedSequence(int(seed) & (2**64 - 1))
        self.generator = np.random.Generator(np.random.PCG64(self._seq))

    @property
    def seed(self):
        return self._seq.entropy

    @property
    def split_count(self) -> int:
        return self._seq.n_children_spawned

    def split(self, k: int | None = None):
        """One child stream, or a list of ``k`` children."""
        if k is None:
            return RngStream(self._seq.spawn(1)[0])
        return [RngStream(s) for s in self._seq.spawn(k)]

    def __repr__(self):
        return f"RngStream(seed={self.seed}, splits={self.split_count})"


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def as_stream(rng) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if isinstance(rng, np.random.Generator):
        return RngStream(np.random.SeedSequence(int(rng.integers(2**63))))
    return RngStream(0 if rng is None else rng)
