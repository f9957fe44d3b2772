"""Stateless seed derivation.

Every random draw in a run comes from a generator keyed by
(master seed, iteration, match, role[, block]).  No generator state is
carried between tasks, so results do not depend on how work is split
across workers.
"""

import enum

import numpy as np

MASK64 = (1 << 64) - 1


class Role(enum.IntEnum):
    SOURCE = 1
    CODEBOOK = 2
    STREAM = 3


def seed_sequence(master, iteration, match, role, block=0):
    """SeedSequence over the whole key; fields must be non-negative
    apart from the master seed, which is reduced mod 2**64."""
    return np.random.SeedSequence(
        [master & MASK64, int(iteration), int(match), int(role), int(block)])


def sub_seed(master, iteration, match, role, block=0):
    """64-bit integer digest of the key, for manifests and logs."""
    words = seed_sequence(master, iteration, match, role, block).generate_state(1, np.uint64)
    return int(words[0])


def generator(seed):
    """Philox generator for an int seed or a SeedSequence."""
    return np.random.Generator(np.random.Philox(seed))


def stream(master, iteration, match, role, block=0):
    return generator(seed_sequence(master, iteration, match, role, block))
