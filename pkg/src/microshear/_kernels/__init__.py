"""Projection kernel backend selection.

The compiled Cython extension is preferred when it imported cleanly; the
pure-numpy fallback gives identical results (up to float summation order).
Set MICROSHEAR_KERNELS=python or =compiled to force a backend.
"""

import os

from . import _radon_py

_forced = os.environ.get("MICROSHEAR_KERNELS", "").strip().lower()

if _forced in ("python", "py"):
    _impl = _radon_py
    BACKEND = "python"
else:
    try:
        from . import _radon_cy as _impl

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise ImportError(
                "MICROSHEAR_KERNELS=compiled but the extension is not built"
            )
        _impl = _radon_py
        BACKEND = "python"

forward_project = _impl.forward_project
back_project = _impl.back_project
