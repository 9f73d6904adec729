"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``INTERCONVERT_PURE_PYTHON=1`` before import to force the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("INTERCONVERT_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _pykernels

sibson_capacity_batch = _impl.sibson_capacity_batch
augustin_mi = _impl.augustin_mi
pair_min = _impl.pair_min


def backends():
    """Return ``{name: module}`` for every kernel backend available here."""
    out = {"python": _pykernels}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out
