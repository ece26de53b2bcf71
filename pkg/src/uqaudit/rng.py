"""Counter-based SplitMix64 random numbers.

Draw ``c`` of a stream with key ``k`` is ``mix64(k + (c + 1) * 0x9E3779B97F4A7C15)``
where ``mix64`` is the SplitMix64 finalizer (shift/multiply constants 30,
0xBF58476D1CE4E5B9, 27, 0x94D049BB133111EB, 31). Child seeds come from
:func:`split_seed`, which is the same function evaluated at counter ``i``, so an
ensemble member's seed is portable to any implementation that reproduces
these few lines.
"""

import math

import numpy as np

from . import kernels

_TWO_POW_M53 = 2.0 ** -53


def split_seed(master_seed, index):
    """Seed for child stream ``index`` of ``master_seed`` (a 64-bit integer)."""
    return kernels.mix64(int(master_seed) + (int(index) + 1) * kernels.GOLDEN_GAMMA)


class CounterRng:
    """Stateful cursor over one SplitMix64 stream.

    Only the key and the counter are state, so a generator can be recreated at
    any position with ``CounterRng(key, counter)``.
    """

    def __init__(self, key, counter=0):
        self.key = int(key) & ((1 << 64) - 1)
        self.counter = int(counter)

    def __repr__(self):
        return f"CounterRng(key={self.key:#x}, counter={self.counter})"

    def u64(self, n):
        out = kernels.u64_stream(self.key, self.counter, n)
        self.counter += int(n)
        return out

    def uniform(self, size=None, low=0.0, high=1.0):
        """Doubles in ``[low, high)`` using the top 53 bits of each draw."""
        n = 1 if size is None else int(np.prod(size))
        u = (self.u64(n) >> np.uint64(11)).astype(np.float64) * _TWO_POW_M53
        u = low + (high - low) * u
        return float(u[0]) if size is None else u.reshape(size)

    def normal(self, size=None, loc=0.0, scale=1.0):
        """Box-Muller normals; each normal consumes two draws."""
        n = 1 if size is None else int(np.prod(size))
        u = self.uniform(2 * n)
        radius = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        z = radius * np.cos(2.0 * math.pi * u[1::2])
        z = loc + scale * z
        return float(z[0]) if size is None else z.reshape(size)

    def integers(self, high, size=None):
        """Integers in ``[0, high)`` via the multiply-high reduction of 32-bit draws."""
        n = 1 if size is None else int(np.prod(size))
        top = self.u64(n) >> np.uint64(32)
        out = ((top * np.uint64(high)) >> np.uint64(32)).astype(np.int64)
        return int(out[0]) if size is None else out.reshape(size)

    def bernoulli(self, p, size=None):
        shape = np.shape(p) if size is None else size
        u = self.uniform(shape if shape != () else 1)
        return (np.reshape(u, shape) < np.asarray(p)) if shape != () else bool(u[0] < p)

    def permutation(self, n):
        """Fisher-Yates shuffle of ``range(n)``."""
        perm = np.arange(n)
        draws = self.uniform(max(n - 1, 0))
        for i in range(n - 1, 0, -1):
            j = int(draws[n - 1 - i] * (i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def spawn(self, index):
        return CounterRng(split_seed(self.key, index))
