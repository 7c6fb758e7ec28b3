"""Seeded random streams.

Every stochastic routine in the package takes an explicit
``numpy.random.Generator``.  Independent streams are derived from a master
seed with :func:`stream`, which places the integer keys in the
``SeedSequence`` spawn key.  Two calls with the same ``(seed, *keys)`` give
bit-identical streams, and different key tuples give statistically
independent ones, so Monte-Carlo trials can run in any order or on any
number of threads.
"""

import numpy as np


def stream(seed, *keys):
    """Return a PCG64 generator for ``seed`` and the path ``keys``.

    >>> a = stream(7, 0, 3).standard_normal()
    >>> b = stream(7, 0, 3).standard_normal()
    >>> a == b
    True
    """
    keys = tuple(int(k) for k in keys)
    if any(k < 0 for k in keys):
        raise ValueError("stream keys must be non-negative")
    seq = np.random.SeedSequence(int(seed), spawn_key=keys)
    return np.random.Generator(np.random.PCG64(seq))


def complex_normal(rng, shape, variance=1.0):
    """Circularly-symmetric complex Gaussian samples of the given variance."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
