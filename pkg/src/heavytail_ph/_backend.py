"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; the numpy
fallback is always available. Set HEAVYTAIL_PH_BACKEND=python to force the
fallback (used by the benchmark to compare both).
"""

import os

from . import _kernels_py

if os.environ.get("HEAVYTAIL_PH_BACKEND", "").lower() == "python":
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

BACKEND_NAME = kernels.BACKEND_NAME
bernstein_he_ccdf = kernels.bernstein_he_ccdf
lindley_waits = kernels.lindley_waits
