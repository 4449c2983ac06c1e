"""Backend selection for the numeric hot loops.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``JITTERLOSS_BACKEND=python`` to force the fallback.
"""
import os

import numpy as np

from . import _fallback

_impl = _fallback
BACKEND = "python"

if os.environ.get("JITTERLOSS_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _fallback


def _c64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def matmul(a, b):
    """Dense product ``a @ b`` of two 2-D float64 arrays."""
    a, b = _c64(a), _c64(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("matmul expects 2-D arrays")
    return _impl.matmul(a, b)


def jitter_transform_many(loss, alpha):
    return _impl.jitter_transform_many(_c64(loss).ravel(), _c64(alpha).ravel())


def positive_part_mean(x):
    return _impl.positive_part_mean(_c64(x).ravel())
