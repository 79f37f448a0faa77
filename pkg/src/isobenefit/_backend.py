"""Pick the compiled kernels when importable, else the pure-Python ones.

Set ``ISOBENEFIT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("ISOBENEFIT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    NAME = "python"
else:
    try:
        from . import _kernels as _impl
        NAME = "cython"
    except ImportError:
        _impl = _kernels_py
        NAME = "python"

relax_field = _impl.relax_field
label_regions = _impl.label_regions
