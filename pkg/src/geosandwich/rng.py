"""Counter-based random streams keyed by (seed, operation, index).

Each stream is an independent Philox generator, so a sample set can be
regenerated, extended or split across workers without changing values.
"""

import zlib

import numpy as np


def stream(seed, operation, index=0):
    """Return a ``numpy.random.Generator`` for one (seed, operation, index) key."""
    op_key = zlib.crc32(operation.encode("utf-8"))
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, op_key, int(index)])
    return np.random.Generator(np.random.Philox(ss))
