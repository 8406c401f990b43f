"""Backend selection for the numeric kernels.

Set ``FINVERIFY_NUMBA=0`` to force the pure-numpy path.  The flag is read
once at import time; the kernel module binds its public names accordingly.
"""

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("FINVERIFY_NUMBA", "1").strip() not in ("0", "false", "no", "off")


def njit(fn):
    """``numba.njit(cache=True)`` when numba is available, identity otherwise."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
