"""Numba switch.

Set ``ENSEMBLELAB_DISABLE_NUMBA=1`` to run every hot kernel through its
pure-numpy twin. When numba is missing the numpy path is used silently.
"""

import os

_FLAG = os.environ.get("ENSEMBLELAB_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(fn):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True)(fn)
