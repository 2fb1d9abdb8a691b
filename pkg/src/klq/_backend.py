"""Kernel selection.

The compiled extension is used when importable. Setting ``KLQ_PURE_PYTHON=1``
forces the pure-Python kernels.
"""
import os

from . import _pykernels

pure = _pykernels

if os.environ.get("KLQ_PURE_PYTHON") == "1":
    kernels = _pykernels
    compiled = None
else:
    try:
        from . import _kernels as compiled
    except ImportError:
        compiled = None
    kernels = compiled if compiled is not None else _pykernels

BACKEND = "compiled" if kernels is not _pykernels else "python"
