"""Backend selection for the hot kernels.

Numba is used when importable unless ``LAPDEFENSE_DISABLE_NUMBA`` is set to a
truthy value before import, in which case every kernel runs its pure-numpy
twin.
"""
import os

_TRUTHY = {"1", "true", "yes", "on"}

NUMBA_DISABLED = os.environ.get("LAPDEFENSE_DISABLE_NUMBA", "").strip().lower() in _TRUTHY

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

HAS_NUMBA = _numba is not None

numba_default = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "boundscheck": False,
    "error_model": "numpy",
}


def njit(func):
    """Compile ``func`` with numba if available, else return it unchanged."""
    if _numba is None:
        return func
    return _numba.njit(**numba_default)(func)


def use_numba():
    return HAS_NUMBA and not NUMBA_DISABLED


def backend_name():
    return "numba" if use_numba() else "numpy"
