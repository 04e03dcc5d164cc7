"""Histogram kernels: compiled extension when available, numpy fallback otherwise.

Set ``URBANTIER_FORCE_PY=1`` to force the pure-Python backend.
"""

import os

if os.environ.get("URBANTIER_FORCE_PY") == "1":
    from ._hist_py import build_histograms
    BACKEND = "python"
else:
    try:
        from ._hist import build_histograms  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:
        from ._hist_py import build_histograms  # type: ignore[no-redef]
        BACKEND = "python"

__all__ = ["build_histograms", "BACKEND"]
