"""Hot kernels: compiled core when available, pure Python otherwise.

Set ``BRANCHO_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

if os.environ.get("BRANCHO_PURE_PYTHON", "") == "1":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

segment_splits = _impl.segment_splits
tree_cost = _impl.tree_cost
golden_descent = _impl.golden_descent
weber_sweeps = _impl.weber_sweeps

__all__ = [
    "BACKEND",
    "segment_splits",
    "tree_cost",
    "golden_descent",
    "weber_sweeps",
]
