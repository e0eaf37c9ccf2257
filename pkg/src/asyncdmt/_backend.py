"""Backend switch for the compiled kernels.

Setting ``ASYNCDMT_DISABLE_NUMBA=1`` (or running without numba installed)
routes every hot loop to its vectorized numpy twin. Both paths are kept
in lock-step by the test-suite.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

_FLAG = "ASYNCDMT_DISABLE_NUMBA"


def numba_enabled():
    if numba is None:
        return False
    return os.environ.get(_FLAG, "").strip().lower() not in ("1", "true", "yes", "on")


def njit(f=None, **options):
    """``numba.njit`` when available, identity otherwise."""
    options.setdefault("cache", True)

    def wrap(fn):
        if numba is None:
            return fn
        return numba.njit(**options)(fn)

    return wrap if f is None else wrap(f)


def backend_name():
    return "numba" if numba_enabled() else "numpy"
