"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise,
or when ``ARTICUKIT_PURE_PYTHON=1`` is set, the pure-Python versions in
``_pykernels`` are used. ``BACKEND`` names the active one.
"""
import os

from . import _pykernels

if os.environ.get("ARTICUKIT_PURE_PYTHON") == "1":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

dbscan_labels = _impl.dbscan_labels
solve_assignment = _impl.solve_assignment


def available_backends() -> dict:
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
