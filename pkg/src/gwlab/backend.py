"""Kernel backend selection.

The compiled extension is preferred when it imported cleanly; setting
GWLAB_PURE_PYTHON=1 forces the numpy fallback (used by the benchmark and
the backend-equivalence tests).
"""

import os

from gwlab import _kernels_np

if os.environ.get("GWLAB_PURE_PYTHON", "") == "1":
    kernels = _kernels_np
else:
    try:
        from gwlab import _kernels_c as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_np

KERNEL_BACKEND = kernels.BACKEND
