"""Kernel backend selection.

The compiled extension (``semvox._kernels``) is preferred; the numpy
implementation is used when the extension is missing or when
``SEMVOX_FORCE_NUMPY`` is set in the environment.  Both produce bit-identical
outputs; the compiled one is much faster on the per-ray loops.
"""

from __future__ import annotations

import os

from semvox import _kernels_py

HAVE_COMPILED = False
_impl = _kernels_py

if not os.environ.get("SEMVOX_FORCE_NUMPY"):
    try:
        from semvox import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        HAVE_COMPILED = True

BACKEND = "compiled" if _impl is not _kernels_py else "numpy"

raycast_boxes = _impl.raycast_boxes
trace_expand = _impl.trace_expand
bin_points = _impl.bin_points
trace_accumulate = _impl.trace_accumulate
