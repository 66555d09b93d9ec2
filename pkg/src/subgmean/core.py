"""Sub-Gaussian mean estimator for finite-variance data.

The estimator runs in three steps:

1. a median-of-means pilot ``kappa`` over ``ceil(log(1/delta))`` groups;
2. a trimming level ``alpha`` solving
   ``sum_i min(alpha * (x_i - kappa)**2, 1) == log(1/delta) / 3``;
3. ``kappa + mean((x - kappa) * (1 - min(alpha * (x - kappa)**2, 1)))``.

With ``kappa`` pinned to 0 the same estimate is the root of a pair of
estimating equations (``psi_vector``/``psi_root``), each a sum of
per-sample terms.
"""
from dataclasses import dataclass
import math
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq

from ._validation import check_delta, check_samples
from .exceptions import DegenerateSamples, InfeasibleBudget

__all__ = [
    "AlphaSolution",
    "Estimate",
    "PsiVector",
    "median_of_means",
    "n_groups",
    "solve_alpha",
    "weighted_trim_mean",
    "trim_weights",
    "estimate",
    "estimate_with_kappa",
    "psi_vector",
    "psi_root",
]


@dataclass(frozen=True)
class AlphaSolution:
    """Trimming level and its reparameterisation as a truncated variance.

    ``v_hat = log(1/delta) / (3 * n * alpha)`` equals the empirical second
    moment about ``kappa`` when no sample is clamped.
    """

    alpha: float
    v_hat: float
    clamp_count: int


class PsiVector(NamedTuple):
    psi_mu: float
    psi_alpha: float


@dataclass(frozen=True)
class Estimate:
    mu_hat: float
    kappa: float
    alpha: AlphaSolution


def n_groups(n, delta):
    """Number of median-of-means groups, ``min(n, max(1, ceil(log(1/delta))))``."""
    log_inv = check_delta(delta)
    return int(min(n, max(1, math.ceil(log_inv))))


def median_of_means(X, delta):
    """Median of the means of contiguous, near-equal index blocks.

    Block sizes differ by at most one (the first ``n % k`` blocks get the
    extra sample). For an even number of blocks the two central group means
    are averaged.

    >>> median_of_means([1, 2, 3, 4, 5, 6], delta=math.exp(-3))
    3.5
    """
    x = check_samples(X)
    k = n_groups(x.size, delta)
    means = np.array([blk.mean() for blk in np.array_split(x, k)])
    return float(np.median(means))


def _sq_dev(x, kappa):
    return (x - kappa) ** 2


def solve_alpha(X, kappa, delta):
    """Solve ``sum_i min(alpha * (x_i - kappa)**2, 1) = log(1/delta)/3``.

    The left side is continuous, nondecreasing and piecewise linear in
    ``alpha`` with breakpoints at ``1 / (x_i - kappa)**2``. With the squared
    deviations sorted in decreasing order ``d_0 >= d_1 >= ...`` and ``j``
    samples clamped, the left side equals ``j + alpha * S_j`` where ``S_j``
    is the tail sum ``d_j + d_{j+1} + ...``. The active segment is the first
    ``j`` whose right breakpoint ``1/d_j`` already reaches the budget.

    Raises
    ------
    InfeasibleBudget
        If the budget is not below the number of samples that differ from
        ``kappa`` (the supremum of the left side).
    DegenerateSamples
        If every sample equals ``kappa``.
    """
    x = check_samples(X)
    log_inv = check_delta(delta)
    budget = log_inv / 3.0
    n = x.size
    if budget >= n:
        raise InfeasibleBudget(
            f"budget log(1/delta)/3 = {budget:.6g} must be < n = {n}; delta too small"
        )
    d = _sq_dev(x, float(kappa))
    d = np.sort(d[d > 0])[::-1]
    m = d.size
    if m == 0:
        raise DegenerateSamples("all samples equal the pilot estimate kappa")
    if budget >= m:
        raise InfeasibleBudget(
            f"budget {budget:.6g} must be < {m}, the number of samples differing from kappa"
        )
    # suffix sums accumulated from the smallest deviations upward
    tail = np.cumsum(d[::-1])[::-1]
    at_break = np.arange(m) + tail / d
    j = int(np.searchsorted(at_break, budget, side="left"))
    alpha = (budget - j) / tail[j]
    clamp_count = int(np.count_nonzero(alpha * _sq_dev(x, float(kappa)) >= 1.0))
    v_hat = log_inv / (3.0 * n * alpha)
    return AlphaSolution(alpha=float(alpha), v_hat=float(v_hat), clamp_count=clamp_count)


def trim_weights(X, kappa, alpha):
    """Per-sample weights ``1 - min(alpha * (x - kappa)**2, 1)``, all in [0, 1]."""
    x = check_samples(X)
    return 1.0 - np.minimum(alpha * _sq_dev(x, kappa), 1.0)


def weighted_trim_mean(X, kappa, alpha):
    """``kappa + mean((x - kappa) * (1 - min(alpha * (x - kappa)**2, 1)))``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    x = check_samples(X)
    w = trim_weights(x, kappa, alpha)
    return float(kappa + np.sum((x - kappa) * w) / x.size)


def estimate_with_kappa(X, delta, kappa):
    """Run steps 2 and 3 with a caller-supplied pilot ``kappa``."""
    sol = solve_alpha(X, kappa, delta)
    return weighted_trim_mean(X, kappa, sol.alpha)


def estimate(X, delta):
    """Full three-step estimate; returns the pilot and trimming artifacts too.

    The estimate is affine equivariant: ``estimate(a*X + b).mu_hat`` equals
    ``a * estimate(X).mu_hat + b`` for ``a > 0``.
    """
    x = check_samples(X)
    kappa = median_of_means(x, delta)
    sol = solve_alpha(x, kappa, delta)
    mu_hat = weighted_trim_mean(x, kappa, sol.alpha)
    return Estimate(mu_hat=mu_hat, kappa=kappa, alpha=sol)


def psi_vector(X, mu_hat, alpha_hat, delta):
    """Evaluate the two estimating equations (pilot fixed at zero).

    ``psi_mu = sum_i (mu_hat - x_i * (1 - min(alpha_hat * x_i**2, 1)))``
    ``psi_alpha = sum_i (min(alpha_hat * x_i**2, 1) - log(1/delta) / (3n))``
    """
    if not alpha_hat > 0:
        raise ValueError(f"alpha_hat must be positive, got {alpha_hat!r}")
    x = check_samples(X)
    log_inv = check_delta(delta)
    n = x.size
    clamp = np.minimum(alpha_hat * x * x, 1.0)
    psi_mu = np.sum(mu_hat - x * (1.0 - clamp))
    psi_alpha = np.sum(clamp - log_inv / (3.0 * n))
    return PsiVector(float(psi_mu), float(psi_alpha))


def psi_root(X, delta):
    """Solve ``psi_mu = psi_alpha = 0`` for ``(mu_hat, alpha_hat)``.

    ``psi_alpha`` does not involve ``mu_hat`` and is monotone in
    ``alpha_hat``, so it is bracketed and solved with Brent's method in
    ``log(alpha_hat)``; ``psi_mu`` is affine in ``mu_hat`` with slope ``n``.
    This is deliberately a different numerical route from ``solve_alpha``.
    """
    x = check_samples(X)
    log_inv = check_delta(delta)
    budget = log_inv / 3.0
    n = x.size
    if budget >= n:
        raise InfeasibleBudget(f"budget {budget:.6g} must be < n = {n}")
    sq = x * x
    nz = sq[sq > 0]
    if nz.size == 0:
        raise DegenerateSamples("all samples are zero")
    if budget >= nz.size:
        raise InfeasibleBudget(f"budget {budget:.6g} must be < {nz.size} nonzero samples")

    def g(log_alpha):
        return psi_vector(x, 0.0, math.exp(log_alpha), delta).psi_alpha

    # psi_alpha <= alpha*sum(sq) - budget < 0 at lo; all nonzero samples clamp at hi
    lo = math.log(0.5 * budget / float(np.sum(sq)))
    hi = math.log(1.0 / float(nz.min())) + 1e-9
    log_alpha = brentq(g, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=500)
    alpha_hat = math.exp(log_alpha)
    # psi_mu(mu) = n*mu + psi_mu(0)
    mu_hat = -psi_vector(x, 0.0, alpha_hat, delta).psi_mu / n
    return mu_hat, alpha_hat
