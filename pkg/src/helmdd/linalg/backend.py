"""Kernel backend selection.

The compiled extension is used when importable; the pure-Python module is
the fallback. Set HELMDD_BACKEND=pure (or =compiled) to force a choice at
import time, e.g. for the kernel benchmark or debugging.
"""

import os

from . import _kernels_py

_choice = os.environ.get("HELMDD_BACKEND", "auto").lower()

if _choice == "pure":
    kernels = _kernels_py
elif _choice == "compiled":
    from . import _kernels as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _kernels_py

BACKEND = "compiled" if kernels.COMPILED else "pure"
