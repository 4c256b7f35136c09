"""Split-scan kernels: compiled extension when available, numpy fallback.

The backend is chosen once at import. Set FEDT_PURE_KERNELS=1 to force the
pure numpy implementation; both produce bit-identical results.
"""

from __future__ import annotations

import logging
import os

from . import pure

log = logging.getLogger(__name__)

_impl = pure
if os.environ.get("FEDT_PURE_KERNELS", "") not in ("1", "true", "yes"):
    try:
        from . import _scan as _compiled

        _impl = _compiled
    except ImportError:
        log.debug("compiled kernel unavailable, using the pure numpy fallback")

BACKEND: str = _impl.BACKEND
scan_sorted_split = _impl.scan_sorted_split
sequential_sum = _impl.sequential_sum


def backend_name() -> str:
    return BACKEND
