"""Independent random streams derived from one root seed.

Each pipeline component draws from its own ``SeedSequence`` child keyed by a
fixed stream id, so changing how much randomness one component consumes
never perturbs another.
"""
import numpy as np

STREAMS = {
    "generator": 1,
    "noise": 2,
    "chain": 3,
    "kmeans": 4,
    "init": 5,
    "bench": 6,
}


def stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    key = (STREAMS[name],) + tuple(int(e) for e in extra)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def subseed(seed: int, name: str, *extra: int) -> int:
    """A 32-bit integer seed for libraries that take plain ints."""
    key = (STREAMS[name],) + tuple(int(e) for e in extra)
    return int(np.random.SeedSequence(int(seed), spawn_key=key).generate_state(1)[0])
