"""Kernel backend selection: compiled extension when available, NumPy otherwise.

Set the environment variable ``GWMC_PURE_PYTHON=1`` before import to force
the NumPy kernels (useful for benchmarking the two against each other).
"""

import os

from . import _kernels_py

if os.environ.get("GWMC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

exact_qx_sweep = _impl.exact_qx_sweep
gamp_qx_sweeps = _impl.gamp_qx_sweeps


def backend_name():
    """'compiled' when the extension kernels are active, 'python' otherwise."""
    return _impl.BACKEND_NAME
