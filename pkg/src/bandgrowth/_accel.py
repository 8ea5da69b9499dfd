"""Numba switch.

Set ``BANDGROWTH_PURE_NUMPY=1`` to bypass numba and run every hot kernel on
its pure-numpy path. The flag is read once at import time.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("BANDGROWTH_PURE_NUMPY", "").strip().lower()
PURE_NUMPY = _FLAG not in ("", "0", "false", "no")

try:
    if PURE_NUMPY:
        raise ImportError
    import numba as _nb
except ImportError:  # pragma: no cover - exercised via env flag in CI
    _nb = None

HAVE_NUMBA = _nb is not None


def njit(fn):
    """Compile ``fn`` with numba when enabled, else hand it back unchanged."""
    if _nb is None:
        return fn
    return _nb.njit(cache=True, nogil=True)(fn)


def backend_name() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
