"""Counter-based random streams.

Every random quantity in the package is keyed on an integer seed, and
per-sample seeds are derived from a master seed and a sample index.  This
keeps results independent of evaluation order and worker count.
"""

import numpy as np
from scipy.special import ndtri

_BLOCK = 4  # Philox4x64 emits four 64-bit words per counter value


def derive_seed(master_seed, index):
    """Seed for sample `index` of a run keyed on `master_seed`."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0])


def derive_seeds(master_seed, start, stop):
    return [derive_seed(master_seed, j) for j in range(start, stop)]


def _to_unit(raw):
    # 53-bit mantissa, shifted off zero so ndtri stays finite
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def gaussian_block(seed, count):
    """The first `count` standard normals of the stream keyed on `seed`."""
    if count == 0:
        return np.zeros(0)
    raw = np.random.Philox(key=int(seed)).random_raw(int(count))
    return ndtri(_to_unit(np.asarray(raw, dtype=np.uint64)))


def gaussian_at(seed, index):
    """Normal number `index` of the stream, without generating its predecessors."""
    block, offset = divmod(int(index), _BLOCK)
    bitgen = np.random.Philox(key=int(seed), counter=[block, 0, 0, 0])
    raw = np.asarray(bitgen.random_raw(_BLOCK), dtype=np.uint64)
    return float(ndtri(_to_unit(raw[offset : offset + 1]))[0])


def generator(seed):
    """A numpy Generator on a Philox stream; used for Brownian paths and configs."""
    return np.random.Generator(np.random.Philox(key=int(seed)))
