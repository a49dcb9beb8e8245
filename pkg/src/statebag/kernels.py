"""Kernel backend selection: compiled ``_core`` when available, NumPy otherwise.

The environment variable ``STATEBAG_KERNELS`` overrides the choice:
``python`` forces the NumPy fallback, ``cython`` requires the compiled core
(import fails if it was not built). ``BACKEND`` names the active backend.

Both backends implement the same contract (lowest-index tie-breaking in
``assign_nearest``); floating-point results may differ in the last bits, so
bit-level reproducibility claims hold per backend.
"""

import os

import numpy as np

_requested = os.environ.get("STATEBAG_KERNELS", "").strip().lower()

if _requested == "python":
    from . import _core_py as _impl
    BACKEND = "python"
elif _requested == "cython":
    from . import _core as _impl
    BACKEND = "cython"
elif _requested == "":
    try:
        from . import _core as _impl
        BACKEND = "cython"
    except ImportError:
        from . import _core_py as _impl
        BACKEND = "python"
else:
    raise ValueError(f"STATEBAG_KERNELS must be 'python' or 'cython', got {_requested!r}")


def _as_c2d(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a 2-d array")
    return a


def pairwise_sqdist(x, c):
    """Squared Euclidean distances, shape ``(len(x), len(c))``."""
    return _impl.pairwise_sqdist(_as_c2d(x), _as_c2d(c))


def assign_nearest(x, c):
    """Per-row nearest neighbour in ``c``: ``(labels, sqdist)``, ties to lowest index."""
    return _impl.assign_nearest(_as_c2d(x), _as_c2d(c))


def rbf_gram(x, y, gamma):
    """Gaussian kernel matrix ``exp(-gamma * ||x_i - y_j||^2)``."""
    return _impl.rbf_gram(_as_c2d(x), _as_c2d(y), float(gamma))
