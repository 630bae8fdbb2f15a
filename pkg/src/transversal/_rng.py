import numpy as np


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator derived from ``seed`` and an index path."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))
