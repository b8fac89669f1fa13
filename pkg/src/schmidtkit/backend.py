"""Iteration-kernel selection.

The compiled Cython kernel is preferred when the extension built; the
pure-numpy kernel is the fallback and the reference implementation.
Set ``SCHMIDTKIT_BACKEND=python`` (or ``cython``) to force a choice, e.g.
for the benchmark or for cross-checking.
"""

import os

from . import _rse_numpy

MODE_ASCENT = _rse_numpy.MODE_ASCENT
MODE_FOLLOW = _rse_numpy.MODE_FOLLOW

_FORCED = os.environ.get("SCHMIDTKIT_BACKEND", "").strip().lower()

if _FORCED == "python":
    _impl = _rse_numpy
    BACKEND_NAME = "python"
else:
    try:
        from . import _rse_kernel as _impl  # type: ignore[attr-defined]
        BACKEND_NAME = "cython"
    except ImportError:
        if _FORCED == "cython":
            raise
        _impl = _rse_numpy
        BACKEND_NAME = "python"

iterate_ansatz = _impl.iterate_ansatz


def get_kernel(name=None):
    """Return (iterate_ansatz, backend_name) for an explicit backend choice."""
    if name in (None, "", "auto"):
        return iterate_ansatz, BACKEND_NAME
    if name == "python":
        return _rse_numpy.iterate_ansatz, "python"
    if name == "cython":
        from . import _rse_kernel  # raises ImportError when not built
        return _rse_kernel.iterate_ansatz, "cython"
    raise ValueError(f"unknown backend {name!r}")
