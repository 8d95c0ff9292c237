"""Counter-keyed random streams.

Every random draw in a simulation comes from a generator keyed by
``(seed, purpose, *counters)``. Two runs that request the same key get the
same numbers regardless of the order in which streams are created, which is
what lets scheduling work be split across threads without changing results.
"""
import numpy as np

PURPOSES = {
    "topology": 1,
    "fading": 2,
    "pattern": 3,
    "shadowing": 4,
    "oracle": 5,
}


def stream(seed: int, purpose: str, *counters: int) -> np.random.Generator:
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, PURPOSES[purpose]]
    key.extend(int(c) for c in counters)
    return np.random.default_rng(np.random.SeedSequence(key))
