import numpy as np


def rng_stream(seed: int, replicate: int, level: int) -> np.random.Generator:
    """Counter-based Philox generator keyed by (seed, replicate, level).

    Each key owns an independent stream, so results do not depend on the order
    in which replicates or levels are drawn.
    """
    key = np.random.SeedSequence([seed, replicate, level])
    return np.random.Generator(np.random.Philox(key))
