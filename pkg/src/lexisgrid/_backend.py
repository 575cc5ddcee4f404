"""Selects the traversal kernel at import time.

The compiled kernel is used when present unless ``LEXISGRID_PURE=1``.
"""
import os

from . import _pykernels

python_traverse_batch = _pykernels.traverse_batch

try:
    if os.environ.get("LEXISGRID_PURE"):
        raise ImportError("pure-Python kernel forced by LEXISGRID_PURE")
    from ._kernels import traverse_batch as compiled_traverse_batch
except ImportError:
    compiled_traverse_batch = None

if compiled_traverse_batch is not None:
    traverse_batch = compiled_traverse_batch
    BACKEND = "compiled"
else:
    traverse_batch = python_traverse_batch
    BACKEND = "python"
