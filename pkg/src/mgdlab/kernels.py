"""Backend selection for the hot update loops.

The compiled extension is preferred; set ``MGDLAB_FORCE_PYTHON=1`` to force
the pure-NumPy fallback (used by the backend benchmark and as a safety net
on installs without a C compiler).
"""

import os

if os.environ.get("MGDLAB_FORCE_PYTHON"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

ls_epoch = _impl.ls_epoch
glm_epoch = _impl.glm_epoch


def backend_name() -> str:
    return BACKEND
