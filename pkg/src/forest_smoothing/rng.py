"""Counter-style random streams usable inside compiled kernels.

Every forest sample is driven by its own SplitMix64 stream, keyed by a
(seed, stream id) pair.  Sample ``k`` of a run always uses stream ``k``, so
a batch of forests can be split across workers in any way and still produce
the same values.
"""

from dataclasses import dataclass

import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_STREAM_SALT = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

MASK64 = (1 << 64) - 1

# Named sub-streams; the integer code enters the seed derivation.
STREAMS = {"sampling": 0, "noise": 1, "sbm": 2, "labels": 3, "signal": 4}


@nb.njit(nb.uint64(nb.uint64), cache=True, nogil=True)
def _mix64(z):
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@nb.njit(nb.uint64(nb.uint64, nb.uint64), cache=True, nogil=True)
def stream_state(seed, stream):
    """Initial generator state for ``(seed, stream)``."""
    return _mix64(_mix64(seed) ^ (stream * _STREAM_SALT + _GOLDEN))


@nb.njit(cache=True, nogil=True)
def next_uniform(state):
    """Advance ``state`` (a length-1 uint64 array) and return a double in [0, 1)."""
    s = state[0] + _GOLDEN
    state[0] = s
    return np.float64(_mix64(s) >> _S11) * _INV53


@dataclass(frozen=True)
class RngStream:
    """Identifies one reproducible random stream."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if not 0 <= int(v) <= MASK64:
                raise ValueError(f"{name} must fit in 64 unsigned bits, got {v}")

    def state(self) -> np.ndarray:
        return np.array(
            [stream_state(np.uint64(self.seed), np.uint64(self.stream))], dtype=np.uint64
        )

    def uniforms(self, size: int) -> np.ndarray:
        """First ``size`` draws of this stream (mostly for testing)."""
        st = self.state()
        return _draw(st, size)


@nb.njit(cache=True)
def _draw(state, size):
    out = np.empty(size)
    for i in range(size):
        out[i] = next_uniform(state)
    return out


def derive_seed(seed: int, name: str, *keys: int) -> int:
    """A 64-bit seed for the named sub-stream ``name`` and integer ``keys``.

    Used so that noise, SBM draws, label draws and forest sampling never
    share random numbers even though a run is configured by a single seed.
    """
    ss = np.random.SeedSequence([int(seed) & MASK64, STREAMS[name], *map(int, keys)])
    return int(ss.generate_state(1, np.uint64)[0])


def numpy_rng(seed: int, name: str, *keys: int) -> np.random.Generator:
    """A numpy Generator on the named sub-stream (for non-kernel randomness)."""
    return np.random.default_rng(derive_seed(seed, name, *keys))
