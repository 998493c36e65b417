"""Kernel backend selection.

Imports the compiled extension when present, otherwise the numpy
fallback. Set PINPLAN_PURE=1 to force the fallback (used by the
backend-comparison benchmark and tests).
"""

from __future__ import annotations

import os

if os.environ.get("PINPLAN_PURE"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND: str = _impl.BACKEND
segment_hits_triangles = _impl.segment_hits_triangles
segment_crossings = _impl.segment_crossings
box_hits_triangles = _impl.box_hits_triangles
