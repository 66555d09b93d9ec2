"""Reference location estimators used in benchmark comparisons."""
from dataclasses import dataclass
import math

import numpy as np

from ._validation import check_delta, check_samples
from .core import median_of_means
from .exceptions import EmptyAfterTrim, InfeasibleRegime, NoConvergence

__all__ = [
    "CatoniConfig",
    "sample_mean",
    "trimmed_mean",
    "median_of_means",
    "catoni_psi",
    "catoni_scale",
    "catoni_estimate",
]


@dataclass(frozen=True)
class CatoniConfig:
    variance: float
    max_iterations: int = 200
    tolerance: float = 1e-12

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(f"variance must be positive, got {self.variance!r}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


def sample_mean(X):
    x = check_samples(X)
    return float(np.sum(x) / x.size)


def trimmed_mean(X, trim_fraction):
    """Mean after dropping ``floor(trim_fraction * n)`` samples from each tail."""
    if not 0.0 <= trim_fraction < 0.5:
        raise ValueError(f"trim_fraction must lie in [0, 0.5), got {trim_fraction!r}")
    x = check_samples(X)
    k = math.floor(trim_fraction * x.size)
    kept = np.sort(x)[k : x.size - k]
    if kept.size == 0:
        raise EmptyAfterTrim(f"no samples left after trimming {k} from each tail")
    return float(np.sum(kept) / kept.size)


def catoni_psi(u):
    """Narrowest Catoni influence function ``sign(u) * log(1 + |u| + u**2/2)``."""
    u = np.asarray(u, dtype=np.float64)
    return np.sign(u) * np.log1p(np.abs(u) + 0.5 * u * u)


def catoni_scale(n, delta, variance):
    log_inv = check_delta(delta)
    if not n > 2.0 * log_inv:
        raise InfeasibleRegime(f"need n > 2*log(1/delta) = {2 * log_inv:.6g}, got n = {n}")
    correction = 1.0 + 2.0 * log_inv / (n - 2.0 * log_inv)
    return math.sqrt(2.0 * log_inv / (n * variance * correction))


def catoni_estimate(X, delta, cfg):
    """Catoni's known-variance M-estimator, solved by bisection.

    Finds ``theta`` with ``sum_i catoni_psi(s * (x_i - theta)) == 0``. The sum
    is nonincreasing in ``theta`` and changes sign on ``[min X, max X]``.
    """
    x = check_samples(X)
    s = catoni_scale(x.size, delta, cfg.variance)
    lo, hi = float(x.min()), float(x.max())

    def total(theta):
        return float(np.sum(catoni_psi(s * (x - theta))))

    for _ in range(cfg.max_iterations):
        if hi - lo <= 2.0 * cfg.tolerance:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            # bracket at floating-point resolution
            break
        val = total(mid)
        if val > 0:
            lo = mid
        elif val < 0:
            hi = mid
        else:
            return mid
    else:
        if hi - lo > 2.0 * cfg.tolerance:
            raise NoConvergence(
                f"bracket width {hi - lo:.3g} exceeds 2*tolerance after {cfg.max_iterations} iterations"
            )
    return 0.5 * (lo + hi)
