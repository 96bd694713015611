"""Seeded random streams.

All randomness is drawn from numpy's PCG64 bit generator. A single root seed
fans out into named, independent sub-streams::

    SeedSequence(entropy=root_seed, spawn_key=(crc32(name),))

so that, for instance, the index draws for class 3 of WISDM never depend on
how many numbers the shuffle stream consumed.
"""

import zlib

import numpy as np

ALGORITHM = "PCG64"


def _key(name):
    return zlib.crc32(name.encode("utf-8"))


def substream(seed, *names):
    """Return a ``Generator`` for the stream ``names`` under ``seed``.

    ``names`` may be strings or integers; the path is hashed component-wise.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    key = tuple(_key(str(n)) for n in names)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed, *names):
    """A 63-bit integer seed for ``names``; used for repeat-level seeds."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key(str(n)) for n in names))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
