"""Deterministic inverse-CDF samplers for standardized test distributions.

Uniforms come from a counter-based generator: the ``i``-th uniform for key
``seed`` is the SplitMix64 output at position ``i``, i.e. the mixing
function applied to ``seed + (i + 1) * 0x9E3779B97F4A7C15 (mod 2**64)``,
mapped to ``((z >> 11) + 0.5) * 2**-53``. Values never hit 0 or 1, and any
index can be produced without generating the ones before it.

Inverse CDFs used (``u`` uniform in (0, 1)):

* gaussian        AS241 (Wichura 1988, PPND16), |error| well below 1e-9
* pareto(beta)    ``(1 - u) ** (-1 / beta)``  (unit scale, support [1, inf))
* student_t(nu)   ``scipy.special.stdtrit(nu, u)`` (no closed form exists)
* lognormal(s)    ``exp(s * gaussian(u))``
* two_point_skew(p)  1 if ``u < p`` else 0 (Bernoulli)
* rademacher      -1 if ``u < 1/2`` else +1
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.special import stdtrit

from .exceptions import InvalidShape, UnsupportedDistribution

__all__ = [
    "DistributionSpec",
    "FAMILIES",
    "benchmark_suite",
    "counter_uniforms",
    "derive_seed",
    "gaussian_ppf",
    "parse_distribution",
    "sample_distribution",
    "splitmix64",
]

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15

FAMILIES = ("gaussian", "pareto", "student_t", "lognormal", "two_point_skew", "rademacher")
_DEFAULT_PARAM = {"pareto": 3.5, "student_t": 3.0, "lognormal": 1.0, "two_point_skew": 0.01}


def _mix_array(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def splitmix64(seed, index):
    """SplitMix64 output number ``index`` (0-based) for the given seed, as int."""
    z = (seed + (index + 1) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def counter_uniforms(seed, n, start=0):
    """Uniforms in (0, 1) for indices ``start .. start + n - 1`` under key ``seed``."""
    idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & _MASK) + idx * np.uint64(_GOLDEN)
        z = _mix_array(z)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _fnv1a64(text):
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK
    return h


def derive_seed(master_seed, dist_id, trial):
    """Per-trial seed: SplitMix64 output ``trial`` under key ``master_seed ^ FNV1a64(dist_id)``."""
    return splitmix64((master_seed & _MASK) ^ _fnv1a64(dist_id), trial)


# AS241 PPND16 coefficients
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coef, r):
    out = np.zeros_like(r)
    for c in reversed(coef):
        out = out * r + c
    return out


def gaussian_ppf(u):
    """Standard normal quantile via Wichura's AS241 rational approximations."""
    u = np.asarray(u, dtype=np.float64)
    q = u - 0.5
    out = np.empty_like(u)
    central = np.abs(q) <= 0.425
    if np.any(central):
        qc = q[central]
        r = 0.180625 - qc * qc
        out[central] = qc * _poly(_A, r) / _poly(_B, r)
    out[u <= 0.0] = -np.inf
    out[u >= 1.0] = np.inf
    tail = ~central & (u > 0.0) & (u < 1.0)
    if np.any(tail):
        ut = u[tail]
        r = np.sqrt(-np.log(np.minimum(ut, 1.0 - ut)))
        near = r <= 5.0
        rn = r[near] - 1.6
        rf = r[~near] - 5.0
        val = np.empty_like(r)
        val[near] = _poly(_C, rn) / _poly(_D, rn)
        val[~near] = _poly(_E, rf) / _poly(_F, rf)
        out[tail] = np.where(q[tail] < 0, -val, val)
    return out


@dataclass(frozen=True)
class DistributionSpec:
    """A sampling family plus its shape parameter.

    With ``standardize`` the samples are mapped through the exact affine
    transform to mean 0 and variance 1.
    """

    family: str
    param: float = None
    standardize: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidShape(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.param is None and self.family in _DEFAULT_PARAM:
            object.__setattr__(self, "param", _DEFAULT_PARAM[self.family])
        p = self.param
        if self.family == "pareto" and not (3.0 < p <= 5.0):
            raise InvalidShape(f"pareto exponent must lie in (3, 5], got {p!r}")
        if self.family == "student_t" and not p > 2.5:
            raise InvalidShape(f"student_t degrees of freedom must exceed 2.5, got {p!r}")
        if self.family == "lognormal" and not p > 0:
            raise InvalidShape(f"lognormal sigma must be positive, got {p!r}")
        if self.family == "two_point_skew" and not (0.0 < p < 1.0):
            raise InvalidShape(f"two_point_skew mass must lie in (0, 1), got {p!r}")

    @property
    def dist_id(self):
        base = self.family if self.param is None else f"{self.family}:{self.param:g}"
        return base if self.standardize else base + ":raw"

    @property
    def raw_mean(self):
        f, p = self.family, self.param
        if f == "pareto":
            return p / (p - 1.0)
        if f == "lognormal":
            return math.exp(p * p / 2.0)
        if f == "two_point_skew":
            return p
        return 0.0

    @property
    def raw_variance(self):
        f, p = self.family, self.param
        if f == "pareto":
            return p / ((p - 2.0) * (p - 1.0) ** 2)
        if f == "student_t":
            return p / (p - 2.0)
        if f == "lognormal":
            return math.expm1(p * p) * math.exp(p * p)
        if f == "two_point_skew":
            return p * (1.0 - p)
        return 1.0

    @property
    def mean(self):
        return 0.0 if self.standardize else self.raw_mean

    @property
    def variance(self):
        return 1.0 if self.standardize else self.raw_variance

    @property
    def is_discrete(self):
        return self.family in ("two_point_skew", "rademacher")

    def raw_ppf(self, u):
        u = np.asarray(u, dtype=np.float64)
        f, p = self.family, self.param
        if f == "gaussian":
            return gaussian_ppf(u)
        if f == "pareto":
            return (1.0 - u) ** (-1.0 / p)
        if f == "student_t":
            return stdtrit(p, u)
        if f == "lognormal":
            return np.exp(p * gaussian_ppf(u))
        if f == "two_point_skew":
            return np.where(u < p, 1.0, 0.0)
        return np.where(u < 0.5, -1.0, 1.0)

    def _standardize(self, x):
        if not self.standardize:
            return x
        return (x - self.raw_mean) / math.sqrt(self.raw_variance)

    def ppf(self, u):
        """Quantile function of the (possibly standardized) distribution."""
        return self._standardize(self.raw_ppf(u))

    def atoms(self):
        """Support points and probabilities for the discrete families."""
        if self.family == "two_point_skew":
            vals, probs = np.array([0.0, 1.0]), np.array([1.0 - self.param, self.param])
        elif self.family == "rademacher":
            vals, probs = np.array([-1.0, 1.0]), np.array([0.5, 0.5])
        else:
            raise UnsupportedDistribution(f"{self.family} is not discrete")
        return self._standardize(vals), probs


def parse_distribution(text):
    """Parse ``family[:param][:raw]``, e.g. ``pareto:3.5`` or ``gaussian``."""
    parts = [p.strip() for p in text.strip().split(":")]
    standardize = True
    if parts[-1] == "raw":
        standardize = False
        parts = parts[:-1]
    if not parts or len(parts) > 2:
        raise InvalidShape(f"cannot parse distribution {text!r}")
    param = None
    if len(parts) == 2:
        try:
            param = float(parts[1])
        except ValueError:
            raise InvalidShape(f"bad shape parameter in {text!r}") from None
    return DistributionSpec(parts[0], param, standardize)


def sample_distribution(spec, n, seed):
    """Draw ``n`` samples; bit-identical for identical ``(spec, n, seed)``."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return spec.ppf(counter_uniforms(seed, n))


def benchmark_suite():
    """The standardized families used by benchmarks and moment certificates."""
    return [
        DistributionSpec("gaussian"),
        DistributionSpec("pareto", 3.5),
        DistributionSpec("student_t", 3.0),
        DistributionSpec("lognormal", 1.0),
        DistributionSpec("two_point_skew", 0.01),
        DistributionSpec("rademacher"),
    ]
