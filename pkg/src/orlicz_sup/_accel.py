"""Backend selection for the hot kernels and the worker pool.

``ORLICZ_DISABLE_NUMBA=1`` forces the pure-numpy kernels even when numba is
importable. ``ORLICZ_THREADS`` caps the worker count (0 or unset = auto).
"""

import os
from concurrent.futures import ThreadPoolExecutor

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FALSY = {"", "0", "false", "no", "off"}

NUMBA_AVAILABLE = numba is not None


def numba_enabled():
    if not NUMBA_AVAILABLE:
        return False
    return os.environ.get("ORLICZ_DISABLE_NUMBA", "").strip().lower() in _FALSY


def njit(fn):
    """Compile ``fn`` with numba when available; otherwise return it unchanged."""
    if not NUMBA_AVAILABLE:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def thread_count():
    raw = os.environ.get("ORLICZ_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def ordered_map(fn, items):
    """Map ``fn`` over ``items`` on the worker pool; results keep input order."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
