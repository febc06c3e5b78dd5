"""Kernel dispatch: compiled extension if built, numpy fallback otherwise.

Set OVALBOWL_PURE_PYTHON=1 to force the fallback.
"""
import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("OVALBOWL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py


def assemble(uu, arrays, want_jac=True, impl=None):
    impl = impl or _impl
    return impl.assemble(
        np.ascontiguousarray(uu, dtype=np.float64),
        arrays["main_idx"], arrays["main_coef"], arrays["other_idx"], arrays["other_coef"],
        arrays["rows"], arrays["row_w"], arrays["node_idx"], arrays["node_coef"],
        arrays["slot_edge"], arrays["slot_node"], arrays["N"], arrays["nnz"], bool(want_jac))


def directed_hausdorff(P, Q, impl=None):
    impl = impl or _impl
    return impl.directed_hausdorff(np.ascontiguousarray(P, dtype=np.float64),
                                   np.ascontiguousarray(Q, dtype=np.float64))


def hausdorff(P, Q, impl=None):
    """Symmetric Hausdorff distance between two finite point sets in the plane."""
    if len(P) == 0 or len(Q) == 0:
        raise ValueError("Hausdorff distance of an empty point set")
    return max(directed_hausdorff(P, Q, impl), directed_hausdorff(Q, P, impl))
