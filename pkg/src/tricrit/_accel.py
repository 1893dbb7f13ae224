"""Backend selection for the hot kernels.

Every kernel in this package exists twice: a loop-level version compiled with
numba's ``@njit`` and a vectorised pure-numpy version.  The numba path is used
whenever numba imports cleanly, unless ``TRICRIT_NO_NUMBA`` is set to a truthy
value in the environment.
"""

import contextlib
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None

if HAVE_NUMBA:
    # the bundled TBB is often too old; prefer OpenMP, then the builtin queue
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    prange = numba.prange
else:  # pragma: no cover
    prange = range


def _env_disabled():
    return os.environ.get("TRICRIT_NO_NUMBA", "").strip().lower() not in ("", "0", "false", "no")


_use_numba = HAVE_NUMBA and not _env_disabled()


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` or a no-op decorator when numba is missing."""
    if not HAVE_NUMBA:  # pragma: no cover
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def set_threads(n):
    """Cap numba's worker pool (used for ``TRICRIT_THREADS``)."""
    if HAVE_NUMBA and n:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def use_numba():
    return _use_numba


def backend_name():
    return "numba" if _use_numba else "numpy"


@contextlib.contextmanager
def backend(name):
    """Temporarily force ``"numba"`` or ``"numpy"`` kernels."""
    global _use_numba
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:  # pragma: no cover
        raise RuntimeError("numba is not installed")
    old = _use_numba
    _use_numba = name == "numba"
    try:
        yield
    finally:
        _use_numba = old
