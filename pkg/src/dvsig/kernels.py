"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise (or when
``DVSIG_PURE_PYTHON=1``) the NumPy fallback is used. Both expose the same
functions and are checked against each other in the test suite.
"""

from __future__ import annotations

import os

from dvsig import _pykernels

if os.environ.get("DVSIG_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from dvsig import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "compiled" if _impl is not _pykernels else "numpy"

poly_mul = _impl.poly_mul
inner_product = _impl.inner_product
scalar_mul = _impl.scalar_mul
matrix_apply = _impl.matrix_apply
sparse_mul = _impl.sparse_mul
gadget_decode = _impl.gadget_decode


def backends():
    """Map of every importable backend name to its module."""
    found = {"numpy": _pykernels}
    try:
        from dvsig import _ckernels
    except ImportError:
        pass
    else:
        found["compiled"] = _ckernels
    return found
