"""RK4 integration kernels with a compiled core and a pure-Python fallback.

The compiled extension is preferred when importable; set the environment
variable ``PENNYFLIP_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

if os.environ.get("PENNYFLIP_PURE_PYTHON", "") not in ("", "0"):
    from . import _python as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        from . import _python as _impl

        BACKEND = "python"

propagate_rk4 = _impl.propagate_rk4
adjoint_rk4 = _impl.adjoint_rk4

__all__ = ["BACKEND", "propagate_rk4", "adjoint_rk4"]
