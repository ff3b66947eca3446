"""Numba on/off switch for the hot kernels.

Every kernel in :mod:`isingrep._kernels` is written in numba-compatible
numpy style and decorated with :func:`jit`.  By default the kernels are
compiled with ``numba.njit``; setting the environment variable
``ISINGREP_NUMBA=0`` (before import) selects the pure-Python/numpy
fallback, which runs the identical source uncompiled.  The two paths are
bit-for-bit equivalent; ``benchmarks/bench_kernels.py`` compares their
speed.
"""

import os

__all__ = ["NUMBA_ENABLED", "jit"]


def _env_wants_numba() -> bool:
    flag = os.environ.get("ISINGREP_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


NUMBA_ENABLED = False
if _env_wants_numba():
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dep, but be safe
        NUMBA_ENABLED = False

if NUMBA_ENABLED:

    def jit(func):
        return _njit(cache=True)(func)

else:

    def jit(func):
        return func
