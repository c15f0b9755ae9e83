"""Backend selection for the hot numeric kernels.

Kernels come in two flavours: a loop version compiled with numba and a
vectorised numpy version.  ``HBMGREEN_BACKEND=numpy`` (or a missing numba)
selects the numpy path; anything else uses numba.
"""
import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

BACKEND = os.environ.get("HBMGREEN_BACKEND", "numba").strip().lower()
if BACKEND not in ("numba", "numpy"):
    raise ValueError(f"HBMGREEN_BACKEND must be 'numba' or 'numpy', got {BACKEND!r}")
USE_NUMBA = HAVE_NUMBA and BACKEND == "numba"


def njit(fn=None, **kwargs):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise.

    The loop kernels are always defined so the benchmark can compare both
    paths; only the dispatch in the public modules depends on ``USE_NUMBA``.
    """
    kwargs.setdefault("cache", True)

    def wrap(f):
        if not HAVE_NUMBA:
            return f
        return numba.njit(**kwargs)(f)

    return wrap(fn) if fn is not None else wrap


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
