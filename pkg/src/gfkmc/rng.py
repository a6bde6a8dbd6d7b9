"""Superduper linear congruential generator and per-replication substreams.

The generator is part of the reproducibility contract::

    S_i = (69069 * S_{i-1} + 1) mod 2**32
    eps_i = +1 if S_i > 2**31 else -1

Scalar helpers operate on Python ints; the ``*_array`` variants advance a
whole vector of independent replication states at once (one uint32 per
replication) and produce exactly the same sequences element by element.
"""

import numpy as np

MULTIPLIER = 69069
INCREMENT = 1
MODULUS = 2**32
THRESHOLD = 2**31
# Golden-ratio stride for substream seeding; odd, hence injective mod 2**32.
SUBSTREAM_STRIDE = 0x9E3779B9

_MASK = MODULUS - 1
_MULT_U32 = np.uint32(MULTIPLIER)
_INC_U32 = np.uint32(INCREMENT)
_THRESH_U32 = np.uint32(THRESHOLD)


def next_state(s):
    """Return the successor of state ``s``."""
    return (MULTIPLIER * int(s) + INCREMENT) & _MASK


def bernoulli_step(s):
    """Advance once and return ``(eps, new_state)`` with eps in {+1, -1}."""
    s = next_state(s)
    return (1 if s > THRESHOLD else -1), s


def uniform_step(s):
    """Advance once and return ``(u, new_state)`` with u = S / 2**32 in [0, 1)."""
    s = next_state(s)
    return s / MODULUS, s


def substream(master_seed, replication_index):
    """Starting state of replication ``replication_index``."""
    if replication_index < 0:
        raise ValueError("replication_index must be non-negative")
    return (int(master_seed) + SUBSTREAM_STRIDE * (int(replication_index) + 1)) & _MASK


def substreams(master_seed, start, stop):
    """Vector of substream states for replication indices ``start..stop-1``."""
    idx = np.arange(start, stop, dtype=np.uint64) + np.uint64(1)
    seeds = (np.uint64(int(master_seed) & _MASK) + np.uint64(SUBSTREAM_STRIDE) * idx) & np.uint64(_MASK)
    return seeds.astype(np.uint32)


def next_state_array(states):
    """Advance every state in a uint32 array (wraparound is the modulus)."""
    with np.errstate(over="ignore"):
        return states * _MULT_U32 + _INC_U32


def bernoulli_array(states):
    """Vectorized :func:`bernoulli_step`; returns ``(eps float64 array, states)``."""
    states = next_state_array(states)
    eps = np.where(states > _THRESH_U32, 1.0, -1.0)
    return eps, states


def uniform_array(states):
    """Vectorized :func:`uniform_step`."""
    states = next_state_array(states)
    return states.astype(np.float64) / MODULUS, states


class SuperDuper:
    """Stateful scalar wrapper, convenient for interactive use and tests."""

    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def step(self):
        eps, self.state = bernoulli_step(self.state)
        return eps

    def uniform(self):
        u, self.state = uniform_step(self.state)
        return u

    def states(self, count):
        """The next ``count`` states as a uint32 array."""
        out = np.empty(count, dtype=np.uint32)
        s = self.state
        for i in range(count):
            s = (MULTIPLIER * s + INCREMENT) & _MASK
            out[i] = s
        self.state = s
        return out

    def signs(self, count):
        out = np.empty(count, dtype=np.int8)
        for i in range(count):
            out[i] = self.step()
        return out
