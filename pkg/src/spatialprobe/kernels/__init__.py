"""Batch relation kernels.

The numba build is used when numba imports cleanly; set
``SPATIALPROBE_DISABLE_NUMBA=1`` to force the vectorized numpy path.
"""

import os

from . import _numpy as numpy_backend

numba_backend = None
if os.environ.get("SPATIALPROBE_DISABLE_NUMBA", "").lower() not in ("1", "true", "yes"):
    try:
        from . import _numba as numba_backend
    except ImportError:  # numba missing or incompatible with this numpy
        numba_backend = None

backend = numba_backend if numba_backend is not None else numpy_backend
BACKEND = "numba" if backend is numba_backend else "numpy"

evaluate_batch = backend.evaluate_batch
mean_pairwise_batch = backend.mean_pairwise_batch

__all__ = ["BACKEND", "evaluate_batch", "mean_pairwise_batch", "numba_backend", "numpy_backend"]
