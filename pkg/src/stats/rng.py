"""
Seeded random streams.

Every generator is numpy's Generator over the counter-based Philox bit
generator, keyed by SeedSequence(seed, spawn_key=(stream, *key)). Streams are
independent of each other and of execution order.
"""

import numpy as np

from src.errors import UsageError

PERMUTATIONS = 1
PAIRS = 2
BOOTSTRAP = 3
SIM_LATENT = 4
SIM_SUBJECT = 5
SIM_SCORES = 6
ROI_NOISE = 7
VERTEX_SAMPLE = 8
NULL_SHUFFLE = 9
SUBSAMPLE = 10

MAX_SEED = 2**64 - 1


def check_seed(seed):
    if seed is None:
        raise UsageError("a seed is required; runs are never seeded from the clock or OS")
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) <= MAX_SEED:
        raise UsageError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def make_rng(seed, stream, *key):
    """Generator for ``stream`` (one of the module constants) and sub-key."""
    sequence = np.random.SeedSequence(check_seed(seed), spawn_key=(int(stream),) + tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def permutation_schedule(n, n_permutations, seed):
    """
    The shared permutation schedule: row b is the b-th permutation of range(n).

    Returns:
        np.ndarray: int64 array of shape (n_permutations, n).
    """
    if n_permutations < 1:
        raise UsageError(f"need at least one permutation, got {n_permutations}")
    rng = make_rng(seed, PERMUTATIONS)
    return np.array([rng.permutation(n) for _ in range(n_permutations)], dtype=np.int64).reshape(n_permutations, n)
