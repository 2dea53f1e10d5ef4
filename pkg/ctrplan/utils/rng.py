"""Seeded counter-based random streams.

Every consumer derives its own stream from (seed, task index, chunk index) so
results do not depend on evaluation order or worker count.
"""
import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Philox generator for the stream addressed by `stream` under `seed`."""
    seed_seq = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(seed_seq))
