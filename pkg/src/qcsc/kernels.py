"""Kernel dispatch: compiled extension when available, numpy fallback otherwise.

Set ``QCSC_PURE_PYTHON=1`` to force the fallback.  ``BACKEND`` names the
implementation in use.
"""
import os

from . import _kernels_py

if os.environ.get("QCSC_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = _impl.BACKEND

sum_duplicates = _impl.sum_duplicates
sparse_dot = _impl.sparse_dot
gather = _impl.gather
outer = _impl.outer
join_contract = _impl.join_contract
median_estimates = _impl.median_estimates


def implementations():
    """All importable kernel modules keyed by backend name."""
    impls = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        impls["cython"] = _kernels
    return impls
