"""Kernel backend selection.

The hot loops (texel gather/scatter sampling, their adjoints, and facet
rasterization) exist twice: a compiled Cython core (_core) and a pure-NumPy
fallback (_numpy). The compiled core is used when importable; set
UVCAMO_KERNELS=python to force the fallback or UVCAMO_KERNELS=cython to
require the compiled core. Both backends implement the same contract and
agree to within float64 rounding; benchmarks/bench_kernels.py compares
their throughput.
"""

from __future__ import annotations

import os

from . import _numpy
from ._numpy import BILINEAR_CORNERS, TRILINEAR_CORNERS, texel_barycentrics

_requested = os.environ.get("UVCAMO_KERNELS", "auto").lower()
if _requested not in ("auto", "cython", "python"):
    raise ValueError(f"UVCAMO_KERNELS must be auto, cython, or python, not {_requested!r}")

_impl = None
if _requested in ("auto", "cython"):
    try:
        from . import _core as _impl
    except ImportError:
        if _requested == "cython":
            raise
if _impl is None:
    _impl = _numpy

BACKEND = "python" if _impl is _numpy else "cython"

gather_texels = _impl.gather_texels
gather_texels_grad = _impl.gather_texels_grad
scatter_pixels = _impl.scatter_pixels
scatter_pixels_grad = _impl.scatter_pixels_grad
rasterize_facets = _impl.rasterize_facets


def available_backends() -> dict:
    """Importable backend modules keyed by name (for tests and benchmarks)."""
    backends = {"python": _numpy}
    try:
        from . import _core

        backends["cython"] = _core
    except ImportError:
        pass
    return backends
