"""Numerical certificates for the inequalities behind the estimator's guarantee.

Notation: ``v_hat`` is the truncated variance, ``y = x * sqrt(alpha_hat)``
a rescaled sample, and for coefficients ``(a, b)`` the quadratic-log
inequality reads

    a*y*(1 - min(y^2, 1)) - b*min(y^2, 1)
        <= log(1 + a*y + y^2 * v_hat * (-3 + a*sqrt(6)/sqrt(v_hat) - b)).

For ``v_hat`` in (0.05, 55.5], ``a`` is the positive root of
``sqrt(v_hat)*(a^2 - 12) + sqrt(6)*a = 0`` and ``b = 3 - a^2/2``; at
``v_hat = 0.05`` the pair ``(0.75, sqrt(3))`` is used instead.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import math
from typing import NamedTuple

import numpy as np

from ._validation import check_delta, check_samples
from .core import estimate_with_kappa, psi_vector, solve_alpha
from .exceptions import (
    NonpositiveLogArgument,
    OutOfRange,
    SubgMeanError,
    UnsupportedDistribution,
)

V_MIN = 0.05
V_MAX = 55.5
GAP_TOLERANCE = -1e-9

__all__ = [
    "V_MIN",
    "V_MAX",
    "InequalityCoefficients",
    "DirectionVector",
    "CertificateReport",
    "ThresholdParams",
    "MomentBound",
    "LipschitzReport",
    "KappaReport",
    "quadratic_root_a",
    "inequality_coefficients",
    "log_argument",
    "inequality_gap",
    "certify_inequality",
    "gap_derivative_identity",
    "neg_one_reduction",
    "chernoff_direction",
    "moment_factor_bound",
    "lipschitz_probe",
    "kappa_sensitivity_probe",
]


class InequalityCoefficients(NamedTuple):
    v_hat: float
    a: float
    b: float


class DirectionVector(NamedTuple):
    d_mu: float
    d_alpha: float


@dataclass(frozen=True)
class ThresholdParams:
    """Error threshold ``(1 + c*loglog(1/delta)/log(1/delta)) * sqrt(2*log(1/delta)/n)``.

    The constant ``c`` has no published value; 3 is this package's choice.
    Requires ``delta < 1/e`` so that ``log log(1/delta) > 0``.
    """

    n: int
    delta: float
    c_constant: float = 3.0

    @property
    def epsilon_prime(self):
        log_inv = check_delta(self.delta)
        return (1.0 + self.c_constant * math.log(log_inv) / log_inv) * math.sqrt(
            2.0 * log_inv / self.n
        )


def _check_v_hat(v_hat, upper_open=False):
    if not (V_MIN <= v_hat <= V_MAX) or (upper_open and v_hat >= V_MAX):
        bracket = ")" if upper_open else "]"
        raise OutOfRange(f"v_hat must lie in [{V_MIN}, {V_MAX}{bracket}, got {v_hat!r}")


def quadratic_root_a(v_hat):
    """Positive root of ``sqrt(v)*(a^2 - 12) + sqrt(6)*a = 0`` (vectorised)."""
    s = np.sqrt(np.asarray(v_hat, dtype=np.float64))
    return (-math.sqrt(6.0) + np.sqrt(6.0 + 48.0 * s * s)) / (2.0 * s)


def inequality_coefficients(v_hat):
    """Coefficients ``(a, b)`` making the quadratic-log inequality hold at ``v_hat``."""
    _check_v_hat(v_hat)
    if v_hat == V_MIN:
        return InequalityCoefficients(float(v_hat), 0.75, math.sqrt(3.0))
    a = float(quadratic_root_a(v_hat))
    return InequalityCoefficients(float(v_hat), a, 3.0 - a * a / 2.0)


def _curvature(v_hat, a, b):
    return v_hat * (-3.0 + a * math.sqrt(6.0) / math.sqrt(v_hat) - b)


def log_argument(v_hat, a, b, y):
    y = np.asarray(y, dtype=np.float64)
    return 1.0 + a * y + _curvature(v_hat, a, b) * y * y


def _gap_arrays(v_hat, a, b, y):
    """Right minus left side and the log argument, elementwise (NaN gap where arg <= 0)."""
    c = _curvature(v_hat, a, b)
    m = np.minimum(y * y, 1.0)
    lhs = a * y * (1.0 - m) - b * m
    lin = a * y + c * y * y
    arg = 1.0 + lin
    with np.errstate(invalid="ignore", divide="ignore"):
        rhs = np.log1p(np.where(arg > 0, lin, np.nan))
    return rhs - lhs, arg


def inequality_gap(v_hat, a, b, y):
    """RHS - LHS of the quadratic-log inequality at a single ``y``."""
    gap, arg = _gap_arrays(v_hat, a, b, np.float64(y))
    if not arg > 0:
        raise NonpositiveLogArgument(y, float(arg))
    return float(gap)


@dataclass(frozen=True)
class CertificateReport:
    v_hat_grid: tuple
    min_gap: float
    min_log_argument: float
    worst_point: tuple
    passed: bool

    def to_text(self):
        """``key = value`` lines; floats in 17 significant digits."""
        lines = [
            f"min_gap = {self.min_gap:.17g}",
            f"min_log_argument = {self.min_log_argument:.17g}",
            f"worst_v_hat = {self.worst_point[0]:.17g}",
            f"worst_y = {self.worst_point[1]:.17g}",
            f"passed = {'true' if self.passed else 'false'}",
        ]
        return "\n".join(lines) + "\n"


def _y_grid(lo, hi, step):
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count, dtype=np.float64)


def _scan_chunk(args):
    v_values, y_full, y_fine, corrupt_b = args
    best = (math.inf, math.nan, math.nan)  # (gap, v, y)
    min_arg = math.inf
    for v in v_values:
        _, a, b = inequality_coefficients(float(v))
        b += corrupt_b
        for y in (y_full, y_fine):
            if y.size == 0:
                continue
            gap, arg = _gap_arrays(v, a, b, y)
            min_arg = min(min_arg, float(arg.min()))
            bad = ~np.isfinite(gap)
            if bad.any():
                gap = np.where(bad, -math.inf, gap)
            i = int(np.argmin(gap))
            if gap[i] < best[0]:
                best = (float(gap[i]), float(v), float(y[i]))
    return best[0], min_arg, best[1], best[2]


def certify_inequality(v_hat_grid, y_range=(-50.0, 50.0), y_step=1e-3, corrupt_b=0.0, workers=1):
    """Grid certificate of the quadratic-log inequality.

    Every ``v_hat`` is checked on ``y_range`` at ``y_step`` plus a refined
    grid at ``y_step / 100`` on ``|y| <= 1.5``. Failures are reported in the
    returned report, never raised. ``corrupt_b`` shifts every ``b`` and
    exists for negative-control runs. The reduction only compares values,
    so the report does not depend on ``workers``.
    """
    grid = np.asarray(v_hat_grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("v_hat_grid must be nonempty")
    if grid.min() < V_MIN or grid.max() > V_MAX:
        raise OutOfRange(f"v_hat grid must lie within [{V_MIN}, {V_MAX}]")
    lo, hi = y_range
    if not (hi >= lo and y_step > 0):
        raise ValueError("need y_range lo <= hi and y_step > 0")
    y_full = _y_grid(lo, hi, y_step)
    f_lo, f_hi = max(lo, -1.5), min(hi, 1.5)
    y_fine = _y_grid(f_lo, f_hi, y_step / 100.0) if f_hi >= f_lo else np.empty(0)

    n_chunks = max(1, min(grid.size, 4 * workers))
    chunks = [(c, y_full, y_fine, corrupt_b) for c in np.array_split(grid, n_chunks)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_scan_chunk, chunks))
    else:
        results = [_scan_chunk(c) for c in chunks]

    min_gap, worst = math.inf, (math.nan, math.nan)
    min_arg = math.inf
    for gap, arg, v, y in results:
        min_arg = min(min_arg, arg)
        if gap < min_gap:
            min_gap, worst = gap, (v, y)
    passed = bool(min_gap >= GAP_TOLERANCE and min_arg > 0)
    return CertificateReport(tuple(float(v) for v in grid), min_gap, min_arg, worst, passed)


class DerivativeCheck(NamedTuple):
    direct: float
    factored: float
    denominator: float


def gap_derivative_identity(v_hat, y):
    """Compare the y-derivative of the gap on ``|y| < 1`` with its factored form.

    With ``a`` from ``quadratic_root_a`` and ``b = 3 - a^2/2`` the derivative

        (a + 2*y*C) / (1 + a*y + C*y^2) - a + 3*a*y^2 + 2*b*y,   C = 3a^2/(12 - a^2)

    factors as

        3a * y (y + 2/a) (y + 2/a - a/3)^2 / (y^2 + (4/a - a/3) y + 4/a^2 - 1/3).

    The denominator quadratic has discriminant ``(a^2 - 12)/9 < 0`` and is
    therefore positive; it is returned so callers can assert that.
    """
    if not (V_MIN < v_hat <= V_MAX):
        raise OutOfRange(f"v_hat must lie in ({V_MIN}, {V_MAX}], got {v_hat!r}")
    if not -1.0 < y < 1.0:
        raise OutOfRange(f"y must lie in (-1, 1), got {y!r}")
    a = float(quadratic_root_a(v_hat))
    b = 3.0 - a * a / 2.0
    c = _curvature(v_hat, a, b)
    direct = (a + 2.0 * y * c) / (1.0 + a * y + c * y * y) - a + 3.0 * a * y * y + 2.0 * b * y
    denom = y * y + (4.0 / a - a / 3.0) * y + (4.0 / (a * a) - 1.0 / 3.0)
    shift = y + 2.0 / a - a / 3.0
    factored = 3.0 * a * y * (y + 2.0 / a) * shift * shift / denom
    return DerivativeCheck(direct, factored, denom)


def neg_one_reduction(v_hat):
    """Both sides of the inequality at ``y = -1`` written in terms of ``a`` alone.

    Returns ``(a^2/2 - 3, log(-2 - a - 36/(a^2 - 12)))``; the inequality
    requires the first to be at most the second.
    """
    if not (V_MIN < v_hat <= V_MAX):
        raise OutOfRange(f"v_hat must lie in ({V_MIN}, {V_MAX}], got {v_hat!r}")
    a = float(quadratic_root_a(v_hat))
    return a * a / 2.0 - 3.0, math.log(-2.0 - a - 36.0 / (a * a - 12.0))


def chernoff_direction(v_hat, n, delta):
    """Direction ``(d_mu, d_alpha)`` along which the estimating equations are bounded."""
    _check_v_hat(v_hat)
    log_inv = check_delta(delta)
    if log_inv / 3.0 >= n:
        raise OutOfRange(f"budget log(1/delta)/3 must be < n = {n}")
    if v_hat == V_MAX:
        return DirectionVector(0.0, -4.0)
    _, a, b = inequality_coefficients(v_hat)
    alpha_hat = log_inv / (3.0 * n * v_hat)
    return DirectionVector(a * math.sqrt(alpha_hat), b)


class MomentBound(NamedTuple):
    lhs: float
    rhs: float
    allowance: float
    passed: bool


def _exp_moment_integrand(x, alpha_hat, d):
    m = np.minimum(alpha_hat * x * x, 1.0)
    with np.errstate(invalid="ignore"):
        kept = np.where(m >= 1.0, 0.0, x * (1.0 - m))
    return np.exp(d.d_mu * kept - d.d_alpha * m)


def moment_factor_bound(dist, v_hat, n, delta, quadrature_points=100_000):
    """Single-sample exponential moment against its quadratic upper bound.

    ``lhs = E[exp(d_mu*x*(1 - min(alpha*x^2, 1)) - d_alpha*min(alpha*x^2, 1))]``
    for ``x`` from the standardized ``dist`` and
    ``rhs = 1 + L/(3n) * (-3 + 3*d_mu*sqrt(2n/L) - d_alpha)`` with
    ``L = log(1/delta)`` and ``alpha = L / (3 n v_hat)``.

    Discrete families are summed exactly; continuous ones use the midpoint
    rule on an evenly spaced inverse-CDF grid over (0, 1). Endpoint nodes
    are avoided on purpose: there the integrand jumps to its clamped limit
    ``exp(-d_alpha)``, which is far from its value on the bulk of the
    tail cell. The check passes when
    ``lhs <= rhs * (1 + 1e-6) + allowance``; the allowance is 1e-4 for
    quadrature and 0 for exact sums.
    """
    if not (dist.standardize or (dist.mean == 0.0 and dist.variance == 1.0)):
        raise UnsupportedDistribution(f"{dist.dist_id} is not standardized to mean 0, variance 1")
    if not dist.variance > 0:
        raise UnsupportedDistribution(f"{dist.dist_id} has zero variance")
    _check_v_hat(v_hat, upper_open=True)
    if quadrature_points < 10_000:
        raise ValueError("quadrature_points must be at least 1e4")
    log_inv = check_delta(delta)
    d = chernoff_direction(v_hat, n, delta)
    alpha_hat = log_inv / (3.0 * n * v_hat)

    if dist.is_discrete:
        vals, probs = dist.atoms()
        lhs = float(np.sum(probs * _exp_moment_integrand(vals, alpha_hat, d)))
        allowance = 0.0
    else:
        u = (np.arange(quadrature_points) + 0.5) / quadrature_points
        g = _exp_moment_integrand(dist.ppf(u), alpha_hat, d)
        lhs = float(np.mean(g))
        allowance = 1e-4
    rhs = 1.0 + log_inv / (3.0 * n) * (
        -3.0 + 3.0 * d.d_mu * math.sqrt(2.0 * n / log_inv) - d.d_alpha
    )
    passed = lhs <= rhs * (1.0 + 1e-6) + allowance
    return MomentBound(lhs, rhs, allowance, bool(passed))


class LipschitzReport(NamedTuple):
    max_slope_mu: float
    max_slope_alpha: float
    slopes_mu: np.ndarray
    slopes_alpha: np.ndarray
    root_v_hat: float
    skipped_reason: str = None


def lipschitz_probe(X, delta, v_grid, mu_hat=0.0):
    """Finite-difference slopes in ``v_hat`` of the scaled estimating equations.

    Probes ``sqrt(L/n) * psi_mu`` and ``psi_alpha`` (pilot fixed at 0) at
    each ``alpha_hat = L / (3 n v)``, and returns the largest absolute
    difference quotient between consecutive grid points. The slopes are
    only meaningful when ``psi_alpha = 0`` has its root inside
    [0.05, 55.5]; otherwise the report is returned with ``skipped_reason``.
    """
    x = check_samples(X)
    log_inv = check_delta(delta)
    n = x.size
    v = np.asarray(v_grid, dtype=np.float64)
    if v.size == 0 or v.min() < V_MIN or v.max() > V_MAX:
        raise OutOfRange(f"v_grid must be nonempty and within [{V_MIN}, {V_MAX}]")
    empty = np.zeros(0)
    try:
        root = solve_alpha(x, 0.0, delta).v_hat
    except SubgMeanError as exc:
        return LipschitzReport(0.0, 0.0, empty, empty, math.nan, f"no root: {exc}")
    if not V_MIN <= root <= V_MAX:
        return LipschitzReport(
            0.0, 0.0, empty, empty, root, f"root v_hat={root:.6g} outside [{V_MIN}, {V_MAX}]"
        )
    if v.size < 2:
        return LipschitzReport(0.0, 0.0, empty, empty, root)
    scale = math.sqrt(log_inv / n)
    f_mu = np.empty(v.size)
    f_alpha = np.empty(v.size)
    for i, vi in enumerate(v):
        psi = psi_vector(x, mu_hat, log_inv / (3.0 * n * vi), delta)
        f_mu[i] = scale * psi.psi_mu
        f_alpha[i] = psi.psi_alpha
    dv = np.diff(v)
    s_mu = np.diff(f_mu) / dv
    s_alpha = np.diff(f_alpha) / dv
    return LipschitzReport(
        float(np.max(np.abs(s_mu))), float(np.max(np.abs(s_alpha))), s_mu, s_alpha, root
    )


class KappaReport(NamedTuple):
    max_slope: float
    failed: tuple


def kappa_sensitivity_probe(X, delta, kappa_grid):
    """Largest absolute difference quotient of the fixed-pilot estimate over ``kappa_grid``.

    Grid points where the pilot is infeasible are listed in ``failed`` with
    the error message and skipped.
    """
    x = check_samples(X)
    kg = np.asarray(kappa_grid, dtype=np.float64)
    ks, vals, failed = [], [], []
    for k in kg:
        try:
            vals.append(estimate_with_kappa(x, delta, float(k)))
            ks.append(float(k))
        except SubgMeanError as exc:
            failed.append((float(k), str(exc)))
    if len(ks) < 2:
        return KappaReport(0.0, tuple(failed))
    slopes = np.diff(vals) / np.diff(ks)
    return KappaReport(float(np.max(np.abs(slopes))), tuple(failed))
