"""Named, seedable random streams.

A stream is identified by ``(seed, stream_id)`` where ``stream_id`` is a tuple
of non-negative integers. Draws come from numpy's PCG64 seeded through a
``SeedSequence`` spawn key, which is platform independent, so equal
identifiers give bit-identical sequences everywhere.
"""

from __future__ import annotations

import numpy as np

ALGORITHM = "PCG64/SeedSequence"


class RngStream:
    def __init__(self, seed: int, stream_id=()):
        if isinstance(stream_id, int):
            stream_id = (stream_id,)
        self.seed = int(seed)
        self.stream_id = tuple(int(s) for s in stream_id)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream_id)
        self.gen = np.random.Generator(np.random.PCG64(ss))

    algorithm = ALGORITHM

    def child(self, *ids: int) -> "RngStream":
        """Independent stream derived from this stream's identity (not its current state)."""
        return RngStream(self.seed, self.stream_id + tuple(ids))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    # thin delegation to numpy's Generator
    def random(self, size=None):
        return self.gen.random(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def standard_normal(self, size=None):
        return self.gen.standard_normal(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size)

    def permutation(self, x):
        return self.gen.permutation(x)

    def choice(self, a, size=None, replace=True, p=None):
        return self.gen.choice(a, size=size, replace=replace, p=p)
