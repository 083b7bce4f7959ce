"""JIT switch: numba kernels unless ``MAMORL_DISABLE_NUMBA`` is set."""

import os

_FLAG = os.environ.get("MAMORL_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED


def njit(fn):
    """Compile ``fn`` in nopython mode when numba is available, else return it as-is."""
    if not HAVE_NUMBA:
        return fn
    return _njit(cache=False, nogil=True)(fn)
