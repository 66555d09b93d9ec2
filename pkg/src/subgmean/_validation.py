"""Input validation helpers shared by the functional and estimator APIs."""
import math
from numbers import Real

import numpy as np


def check_samples(X, name="X"):
    """Return ``X`` as a 1-D float64 array of finite values.

    Raises ValueError for empty input, non-finite values or more than one
    dimension (column vectors of shape ``(n, 1)`` are accepted and raveled).
    """
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must contain at least one sample")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return arr


def check_delta(delta):
    """Validate a failure probability and return ``log(1/delta)``."""
    if isinstance(delta, bool) or not isinstance(delta, Real):
        raise ValueError(f"delta must be a real number, got {delta!r}")
    delta = float(delta)
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    return -math.log(delta)


def discard_budget(delta):
    """Total weight discarded by the estimator: ``log(1/delta) / 3``."""
    return check_delta(delta) / 3.0
