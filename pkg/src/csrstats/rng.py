"""Seed derivation for deterministic, order-independent Monte-Carlo trials.

Every sampler in the package takes a plain 64-bit integer seed.  Batch and
trial runners derive one seed per work unit from a base seed and the unit
index with :func:`derive_seed`, so results are identical no matter how the
units are scheduled across threads.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
# splitmix64 constants (Steele, Lea & Flood 2014)
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def derive_seed(base_seed, index):
    """Derive the seed for work unit `index` from `base_seed`.

    Advances a splitmix64-style state by ``index + 1`` increments of the
    golden-ratio gamma and applies the splitmix64 finalizer.  The finalizer
    is a bijection on 64-bit integers, so distinct (base_seed, index) pairs
    map to distinct stream seeds.
    """
    if index < 0:
        raise ValueError("index must be nonnegative")
    x = (int(base_seed) + (int(index) + 1) * _GAMMA) & _MASK64
    x ^= x >> 30
    x = (x * _MIX1) & _MASK64
    x ^= x >> 27
    x = (x * _MIX2) & _MASK64
    x ^= x >> 31
    return x


def make_generator(seed):
    """Build the numpy Generator used throughout the package for `seed`."""
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))
