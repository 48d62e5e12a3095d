"""Optional numba acceleration.

Set ``JOINTSPARSE_DISABLE_NUMBA=1`` to force the pure-numpy kernels even when
numba is importable.
"""
import os
import warnings

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAS_NUMBA = False


class PerformanceWarning(UserWarning):
    """Issued when the slow numpy path is used because numba is missing."""


def _env_disabled():
    return os.environ.get("JOINTSPARSE_DISABLE_NUMBA", "").strip().lower() in {
        "1",
        "true",
        "yes",
        "on",
    }


USE_NUMBA = HAS_NUMBA and not _env_disabled()

if not HAS_NUMBA and not _env_disabled():  # pragma: no cover
    warnings.warn(
        "numba is not available; falling back to the numpy kernels, which are "
        "several times slower on ensemble sweeps",
        PerformanceWarning,
        stacklevel=2,
    )


def njit(func):
    """``numba.njit(cache=True)`` when numba is installed, identity otherwise.

    The decorated function is always compiled if numba exists, independent of
    ``USE_NUMBA``; the flag only selects which kernel the solvers dispatch to.
    """
    if not HAS_NUMBA:
        return func
    return numba.njit(cache=True)(func)
