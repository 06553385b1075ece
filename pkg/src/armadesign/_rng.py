"""Counter-based random-number substreams.

All stochastic code in this package draws from Philox generators keyed by
(seed, stream path).  Deriving independent substreams from an integer seed
plus a tuple of stream ids makes every routine reproducible run-to-run and
safe to parallelise: replicate r of a Monte Carlo study always sees the same
noise stream no matter how the replicates are scheduled.
"""

from __future__ import annotations

import numpy as np

# Fixed stream ids.  Keeping them in one place guarantees that e.g. the noise
# stream of a simulation never collides with its treatment stream.
STREAM_NOISE = 0
STREAM_TREATMENT = 1
STREAM_DISPATCH = 2
STREAM_ORACLE = 3

SeedLike = "int | tuple[int, ...]"


def _seed_sequence(seed, path=()):
    """Build a SeedSequence for `seed` extended by `path` stream ids.

    `seed` may be an int or a tuple (base_seed, id1, id2, ...); tuples let
    callers thread replicate indices through without collapsing them into a
    single integer.
    """
    if isinstance(seed, tuple):
        entropy, prefix = seed[0], tuple(seed[1:])
    else:
        entropy, prefix = seed, ()
    spawn_key = tuple(int(x) for x in prefix) + tuple(int(x) for x in path)
    return np.random.SeedSequence(entropy=int(entropy), spawn_key=spawn_key)


def substream(seed, *path) -> np.random.Generator:
    """Return a Generator on an independent Philox substream.

    substream(s) and substream(s, k) never overlap, and substream((s, r), k)
    equals substream(s, r, k).
    """
    return np.random.Generator(np.random.Philox(_seed_sequence(seed, path)))
