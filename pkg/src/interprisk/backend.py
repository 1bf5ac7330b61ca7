"""Kernel backend selection.

The package ships two interchangeable implementations of its d=1 hot loops:
a numba-compiled one and a pure-numpy one.  Selection is per-call via the
INTERPRISK_BACKEND environment variable ("numba" or "numpy"); by default the
numba backend is used whenever it imports cleanly.

Both backends share contracts and branch logic; tiny floating-point
differences (summation order inside the normal equations) are expected.
"""

import os

from . import _kernels_numpy

ENV_VAR = "INTERPRISK_BACKEND"

_modules = {"numpy": _kernels_numpy}
_numba_error = None

try:
    from . import _kernels_numba

    _modules["numba"] = _kernels_numba
    HAS_NUMBA = True
except ImportError as exc:  # pragma: no cover - depends on environment
    HAS_NUMBA = False
    _numba_error = exc


def backend_name() -> str:
    """Resolve the active backend name from the environment."""
    choice = os.environ.get(ENV_VAR, "").strip().lower()
    if not choice:
        return "numba" if HAS_NUMBA else "numpy"
    if choice not in ("numba", "numpy"):
        raise ValueError(
            f"{ENV_VAR} must be 'numba' or 'numpy', got {choice!r}"
        )
    if choice == "numba" and not HAS_NUMBA:
        raise RuntimeError(
            f"numba backend requested via {ENV_VAR} but numba is unavailable: "
            f"{_numba_error}"
        )
    return choice


def get_kernels():
    """Module holding the active kernel implementations."""
    return _modules[backend_name()]
