"""Counter-based uniform variates (splitmix64), identical in numba and numpy.

Draw ``k`` of trajectory ``i`` under ``seed`` is a pure function of
``(seed, i, k)``, so trajectories can be simulated in any order or in
parallel and still reproduce a serial run bit for bit.
"""

import numpy as np

from . import _accel

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_TWO53 = 1.0 / 9007199254740992.0


@_accel.njit
def splitmix64(z):
    z = z + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@_accel.njit
def stream_key(seed, traj):
    return splitmix64(splitmix64(np.uint64(seed)) ^ (np.uint64(traj) * _GOLDEN + _ONE))


@_accel.njit
def uniform(key, counter):
    """Uniform on ``(0, 1]`` for draw ``counter`` of the stream ``key``."""
    x = splitmix64(key + np.uint64(counter) * _GOLDEN)
    return (float(x >> _S11) + 1.0) * _TWO53


def splitmix64_np(z):
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        return z ^ (z >> _S31)


def stream_key_np(seed, traj):
    traj = np.asarray(traj, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return splitmix64_np(splitmix64_np(np.uint64(seed)) ^ (traj * _GOLDEN + _ONE))


def uniform_np(key, counter):
    with np.errstate(over="ignore"):
        x = splitmix64_np(key + np.asarray(counter, dtype=np.uint64) * _GOLDEN)
    return ((x >> _S11).astype(np.float64) + 1.0) * _TWO53
