"""Hot-loop backend selection.

The compiled Cython extension is used when importable; otherwise (or when
``PPN_PURE_PYTHON=1`` is set) the numpy fallback is used. Both expose
``label_components`` and ``nms_select`` with identical results.
"""
from __future__ import annotations

import os

import numpy as np

from . import _fallback

BACKEND = "python"
_compiled = None
if not os.environ.get("PPN_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
        BACKEND = "cython"
    except ImportError:  # extension not built
        _compiled = None

_impl = _compiled if _compiled is not None else _fallback


def backends() -> dict:
    """Available kernel implementations keyed by name."""
    out = {"python": _fallback}
    if _compiled is not None:
        out["cython"] = _compiled
    return out


def label_components(mask, connectivity: int = 4):
    return _impl.label_components(np.ascontiguousarray(mask, dtype=np.uint8), connectivity)


def nms_select(x, y, conf, radius: float, threshold: float):
    return _impl.nms_select(
        np.ascontiguousarray(x, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(conf, dtype=np.float64),
        float(radius),
        float(threshold),
    )
