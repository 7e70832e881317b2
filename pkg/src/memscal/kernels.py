"""
Kernel backend selection.

The compiled extension is used when it was built; otherwise the NumPy
implementation is loaded. Set ``MEMSCAL_PURE_PYTHON=1`` to force the
fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
cost_surface = _kernels_py.cost_surface

if os.environ.get("MEMSCAL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        cost_surface = _ckernels.cost_surface

__all__ = ["BACKEND", "cost_surface"]
