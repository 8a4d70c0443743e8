"""Hot inner loops, compiled when available.

The Cython extension ``_ckernels`` is used if it was built; otherwise the
numpy implementations in ``_fallback`` are selected. Set
``NEUROBAND_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

if os.environ.get("NEUROBAND_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _fallback

BACKEND = "cython" if _impl is not _fallback else "python"

dwt_step = _impl.dwt_step
best_split = _impl.best_split
idwt_step = _fallback.idwt_step

__all__ = ["BACKEND", "best_split", "dwt_step", "idwt_step"]
