"""Select the compiled kernels when available.

Set ``NMQ_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _kernels_py

if os.environ.get("NMQ_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

fwht4 = _impl.fwht4
volterra_heun = _impl.volterra_heun
