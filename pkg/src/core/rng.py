"""
Seeded randomness for simulations.

Every realization draws from numpy's Philox4x64-10 counter-based generator, keyed by a
64-bit seed. Independent streams (train cohort, test cohort, solver) come from the same
key with disjoint counter ranges, so a stream never depends on what another stream drew.
Output is bit-reproducible within one numpy build; no cross-platform guarantee is made.
"""

import numpy as np

ALGORITHM = "philox4x64-10"

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# Named streams for one realization
TRAIN_STREAM = 0
TEST_STREAM = 1
SOLVER_STREAM = 2


def splitmix64(state: int) -> int:
    """Finalizer of the SplitMix64 generator; a bijection on 64-bit integers."""
    z = state & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_realization_seed(master_seed: int, realization_index: int) -> int:
    """
    Seed for realization `realization_index` under `master_seed`.

    Depends on (master_seed, realization_index) only, so every experiment config sees the
    same covariate draws at a given index. Injective in the index: the pre-image
    master + (i + 1) * GOLDEN_GAMMA is distinct mod 2^64 for distinct i (odd multiplier)
    and splitmix64 is a bijection.
    """
    if realization_index < 0:
        raise ValueError(f"realization_index must be >= 0, got {realization_index}")
    state = (int(master_seed) + (int(realization_index) + 1) * GOLDEN_GAMMA) & MASK64
    return splitmix64(state)


class Rng:
    """
    Single-owner random source for one stream of one realization.

    Do not share an instance across threads; use `stream()` to get an independent one.
    """

    algorithm = ALGORITHM

    def __init__(self, seed: int, stream: int = 0):
        if not 0 <= int(seed) <= MASK64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if stream < 0:
            raise ValueError(f"stream must be >= 0, got {stream}")
        self.seed = int(seed)
        self.stream_id = int(stream)
        # Highest counter word selects the stream: 2^192 blocks between streams.
        counter = np.array([0, 0, 0, self.stream_id], dtype=np.uint64)
        self.generator = np.random.Generator(
            np.random.Philox(key=self.seed, counter=counter)
        )

    def stream(self, stream: int) -> "Rng":
        return Rng(self.seed, stream)

    def normal(self, size) -> np.ndarray:
        return self.generator.standard_normal(size)

    def uniform(self, size) -> np.ndarray:
        return self.generator.random(size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def __repr__(self):
        return f"Rng(seed={self.seed}, stream={self.stream_id}, algorithm={ALGORITHM!r})"
