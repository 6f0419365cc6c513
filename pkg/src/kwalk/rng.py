"""Counter-based 64-bit random streams.

Every walker owns a SplitMix64 stream: the ``t``-th output is a pure function
of ``(key, t)``, so a trajectory never depends on how trials are batched or
which worker runs them.  Keys are derived with :func:`mix`.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# Tag offsets keep the start-vertex streams disjoint from walker streams.
START_TAG = 1 << 40


def fmix64(z: int) -> int:
    """SplitMix64 finalizer on a Python integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix(seed: int, index: int) -> int:
    """Derive the 64-bit key of sub-stream ``index`` of ``seed``."""
    return fmix64(fmix64(seed) ^ fmix64((index + 1) * GAMMA))


def draw(key: int, counter: int) -> int:
    """Output number ``counter`` (0-based) of the stream keyed by ``key``."""
    return fmix64(key + (counter + 1) * GAMMA)


_G = np.uint64(GAMMA)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)
_U1, _U2 = np.uint64(_M1), np.uint64(_M2)


def draw_array(keys: np.ndarray, counter: int) -> np.ndarray:
    """Vectorised :func:`draw` for an array of uint64 keys and one counter."""
    z = keys + np.uint64(((counter + 1) * GAMMA) & MASK64)
    z = (z ^ (z >> _S30)) * _U1
    z = (z ^ (z >> _S27)) * _U2
    return z ^ (z >> _S31)


def trial_keys(seed: int, trials: range | list[int], k: int) -> np.ndarray:
    """Walker keys for a block of trials, shape ``(len(trials), k)``."""
    out = np.empty((len(trials), k), dtype=np.uint64)
    for r, i in enumerate(trials):
        ts = mix(seed, i)
        for j in range(k):
            out[r, j] = mix(ts, j)
    return out


class WalkerStream:
    """Mutable cursor over one walker's stream (used by single-step calls)."""

    __slots__ = ("key", "counter")

    def __init__(self, key: int, counter: int = 0):
        self.key = key & MASK64
        self.counter = counter

    @classmethod
    def for_walker(cls, seed: int, trial: int = 0, walker: int = 0) -> "WalkerStream":
        return cls(mix(mix(seed, trial), walker))

    def next(self) -> int:
        out = draw(self.key, self.counter)
        self.counter += 1
        return out

    def __repr__(self) -> str:
        return f"WalkerStream(key={self.key:#018x}, counter={self.counter})"
