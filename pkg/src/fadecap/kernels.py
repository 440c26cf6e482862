"""Backend selection for the hot loops.

The compiled extension is used when it imports cleanly; set
``FADECAP_BACKEND=python`` to force the numpy fallback.
"""

import os

from . import _fallback

BACKEND = "python"
if os.environ.get("FADECAP_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

mixture_information = _impl.mixture_information
log_bessel_i0_array = _impl.log_bessel_i0_array

__all__ = ["BACKEND", "mixture_information", "log_bessel_i0_array"]
