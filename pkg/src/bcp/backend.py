"""Kernel backend selection.

``BCP_BACKEND`` picks the implementation: ``numba`` (default when numba is
importable), ``numpy`` (pure-numpy fallback), or ``auto``. Both backends
expose the same function set; ``kernels`` is the active module.
"""

from __future__ import annotations

import os
import warnings

from . import _kernels_numpy as numpy_kernels

_requested = os.environ.get("BCP_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise RuntimeError(f"BCP_BACKEND must be auto, numba, or numpy, got {_requested!r}")

numba_kernels = None
if _requested != "numpy":
    try:
        from . import _kernels_numba as numba_kernels
    except ImportError as exc:
        if _requested == "numba":
            raise RuntimeError("BCP_BACKEND=numba but numba is not importable") from exc
        warnings.warn(f"numba unavailable ({exc}); falling back to numpy kernels")

kernels = numba_kernels if numba_kernels is not None else numpy_kernels
name: str = kernels.NAME
