"""Deterministic Monte Carlo benchmark harness and exact Poisson skew experiment."""
from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field
import math
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln, logsumexp

from ._validation import check_delta, check_samples
from .baselines import CatoniConfig, catoni_estimate, sample_mean, trimmed_mean
from .core import estimate, median_of_means
from .distributions import derive_seed, parse_distribution, sample_distribution
from .exceptions import (
    ConfigError,
    DegenerateSamples,
    EmptyGroup,
    InvalidLambda,
    SubgMeanError,
)

__all__ = [
    "CSV_HEADER",
    "ESTIMATORS",
    "BenchConfig",
    "PoissonReport",
    "SummaryStats",
    "TrialRecord",
    "corrected_empirical_mean",
    "format_summary",
    "parse_config",
    "poisson_skew_experiment",
    "poisson_tail",
    "read_records_csv",
    "run_trials",
    "summarize",
    "write_records_csv",
]

CSV_HEADER = ("distribution", "n", "delta", "trial", "seed", "estimator", "estimate", "true_mean", "abs_error")
TRIM_FRACTION = 0.05


def corrected_empirical_mean(X, delta):
    """Sample mean minus ``log(1/delta)/(3n)`` times the third-to-second moment ratio.

    This is the main estimator's output when nothing is clamped and the
    pilot is 0, and the third-order skew correction of the sample mean.
    """
    x = check_samples(X)
    log_inv = check_delta(delta)
    n = x.size
    m2 = float(np.sum(x * x))
    if m2 == 0.0:
        raise DegenerateSamples("sum of squares is zero")
    m3 = float(np.sum(x * x * x))
    return float(np.sum(x) / n) - log_inv / (3.0 * n) * m3 / m2


def _main(x, delta, spec):
    return estimate(x, delta).mu_hat


def _catoni(x, delta, spec):
    return catoni_estimate(x, delta, CatoniConfig(variance=spec.variance))


ESTIMATORS = {
    "main": _main,
    "sample_mean": lambda x, delta, spec: sample_mean(x),
    "trimmed_mean": lambda x, delta, spec: trimmed_mean(x, TRIM_FRACTION),
    "median_of_means": lambda x, delta, spec: median_of_means(x, delta),
    "catoni": _catoni,
    "corrected_mean": lambda x, delta, spec: corrected_empirical_mean(x, delta),
}


@dataclass(frozen=True)
class TrialRecord:
    """One estimator's output on one trial.

    Estimator failures are recorded with ``estimate`` and ``abs_error`` NaN.
    """

    distribution: str
    n: int
    delta: float
    trial: int
    seed: int
    estimator: str
    estimate: float
    true_mean: float
    abs_error: float


def _trial_block(args):
    spec, estimators, n, delta, master_seed, start, stop = args
    out = []
    for t in range(start, stop):
        seed = derive_seed(master_seed, spec.dist_id, t)
        x = sample_distribution(spec, n, seed)
        for name in estimators:
            try:
                est = float(ESTIMATORS[name](x, delta, spec))
            except (SubgMeanError, ArithmeticError, RuntimeError):
                est = math.nan
            out.append(
                TrialRecord(spec.dist_id, n, delta, t, seed, name, est, spec.mean, abs(est - spec.mean))
            )
    return out


def run_trials(specs, estimators, n, delta, trials, master_seed, workers=1):
    """Run every estimator on ``trials`` samples of size ``n`` from each spec.

    Trial ``t`` of distribution ``d`` uses seed ``derive_seed(master_seed,
    d.dist_id, t)``, so all estimators see the same sample. Records come back
    ordered by (distribution, trial, estimator) following the input order,
    whatever the worker count.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    unknown = [e for e in estimators if e not in ESTIMATORS]
    if unknown:
        raise ValueError(f"unknown estimators {unknown}; available: {sorted(ESTIMATORS)}")
    check_delta(delta)
    estimators = tuple(estimators)
    block = max(1, min(1000, math.ceil(trials / max(1, 4 * workers))))
    tasks = [
        (spec, estimators, n, delta, master_seed, s, min(trials, s + block))
        for spec in specs
        for s in range(0, trials, block)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_trial_block, tasks))
    else:
        chunks = [_trial_block(t) for t in tasks]
    return [rec for chunk in chunks for rec in chunk]


@dataclass(frozen=True)
class SummaryStats:
    distribution: str
    estimator: str
    n: int
    delta: float
    trials: int
    epsilon: float
    failure_rate: float
    quantiles: dict = field(default_factory=dict)


def _nearest_rank(sorted_vals, q):
    m = len(sorted_vals)
    k = max(1, math.ceil(round(q * m, 9)))
    return float(sorted_vals[min(k, m) - 1])


def summarize(records, slack=0.25, levels=None):
    """Error quantiles and failure rates per (distribution, estimator).

    Quantiles use the nearest-rank rule on sorted ``abs_error``; failed
    estimates (NaN) count as infinite error. The failure threshold is
    ``sqrt(2*log(1/delta)/n) * (1 + slack)``.
    """
    groups = {}
    for r in records:
        groups.setdefault((r.distribution, r.estimator, r.n, r.delta), []).append(r.abs_error)
    if not groups:
        raise EmptyGroup("no records to summarize")
    out = []
    for (dist, name, n, delta), errs in groups.items():
        if not errs:
            raise EmptyGroup(f"no records for {dist}/{name}")
        e = np.sort(np.where(np.isnan(errs), np.inf, errs))
        eps = math.sqrt(2.0 * check_delta(delta) / n) * (1.0 + slack)
        lv = levels if levels is not None else (0.5, 0.9, 0.99, 1.0 - delta)
        qs = {q: _nearest_rank(e, q) for q in sorted(set(lv))}
        rate = float(np.count_nonzero(e > eps)) / e.size
        out.append(SummaryStats(dist, name, n, delta, int(e.size), eps, rate, qs))
    return out


def format_summary(stats):
    lines = []
    for s in stats:
        qs = " ".join(f"q{q:g}={v:.6g}" for q, v in s.quantiles.items())
        lines.append(
            f"{s.distribution} {s.estimator} n={s.n} delta={s.delta:g} trials={s.trials} "
            f"eps={s.epsilon:.6g} failure_rate={s.failure_rate:.6g} {qs}"
        )
    return "\n".join(lines)


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def write_records_csv(records, path):
    """Write records as LF-terminated CSV with 17-significant-digit floats."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            fh.write(",".join(CSV_HEADER) + "\n")
            for r in records:
                fh.write(",".join(_fmt(getattr(r, k)) for k in CSV_HEADER) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write records to {path}: {exc}") from exc


def read_records_csv(path):
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [
            TrialRecord(
                row["distribution"], int(row["n"]), float(row["delta"]), int(row["trial"]),
                int(row["seed"]), row["estimator"], float(row["estimate"]),
                float(row["true_mean"]), float(row["abs_error"]),
            )
            for row in reader
        ]


@dataclass(frozen=True)
class BenchConfig:
    families: tuple
    n: int
    delta: float
    trials: int
    master_seed: int
    estimators: tuple = ("main", "sample_mean")
    slack: float = 0.25


_REQUIRED = ("families", "n", "delta", "trials", "master_seed")
_OPTIONAL = ("estimators", "slack")


def parse_config(text):
    """Parse ``key = value`` lines; ``#`` starts a comment, lists are comma separated."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _REQUIRED + _OPTIONAL:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value
    missing = [k for k in _REQUIRED if k not in raw]
    if missing:
        raise ConfigError(f"missing keys: {', '.join(missing)}")
    try:
        cfg = BenchConfig(
            families=tuple(parse_distribution(f) for f in raw["families"].split(",") if f.strip()),
            n=int(raw["n"]),
            delta=float(raw["delta"]),
            trials=int(raw["trials"]),
            master_seed=int(raw["master_seed"], 0),
            estimators=tuple(e.strip() for e in raw.get("estimators", "main, sample_mean").split(",") if e.strip()),
            slack=float(raw.get("slack", 0.25)),
        )
    except (ValueError, SubgMeanError) as exc:
        raise ConfigError(str(exc)) from exc
    if not cfg.families:
        raise ConfigError("families must list at least one distribution")
    if cfg.n < 1 or cfg.trials < 1 or not (0 <= cfg.master_seed < 2**64):
        raise ConfigError("n and trials must be positive; master_seed must fit in 64 bits")
    if not 0.0 < cfg.delta < 1.0:
        raise ConfigError(f"delta must lie in (0, 1), got {cfg.delta}")
    unknown = [e for e in cfg.estimators if e not in ESTIMATORS]
    if unknown:
        raise ConfigError(f"unknown estimators: {', '.join(unknown)}")
    return cfg


def _log_pmf(k, lam):
    return k * math.log(lam) - lam - gammaln(k + 1.0)


def poisson_tail(lam, threshold, upper):
    """Exact ``P[K > threshold]`` (upper) or ``P[K < threshold]`` for ``K ~ Poisson(lam)``.

    Summed in log space so tails far below double-precision underflow of the
    individual terms are still accurate.
    """
    if upper:
        k0 = max(0, math.floor(threshold) + 1)
        k1 = k0 + int(60.0 * math.sqrt(lam) + 200)
        ks = np.arange(k0, k1 + 1, dtype=np.float64)
    else:
        k1 = math.ceil(threshold) - 1
        if k1 < 0:
            return 0.0
        ks = np.arange(0, k1 + 1, dtype=np.float64)
    return float(np.exp(logsumexp(_log_pmf(ks, lam))))


class PoissonReport(NamedTuple):
    raw_upper_tail: float
    raw_lower_tail: float
    corrected_upper_tail: float
    corrected_lower_tail: float

    @property
    def raw_max_tail(self):
        return max(self.raw_upper_tail, self.raw_lower_tail)

    @property
    def corrected_max_tail(self):
        return max(self.corrected_upper_tail, self.corrected_lower_tail)


def poisson_skew_experiment(lam, delta):
    """Miss probabilities of ``k`` and ``k - log(1/delta)/3`` as estimates of ``lam``.

    An estimate misses when it is more than ``sqrt(2*lam*L)`` from ``lam``,
    ``L = log(1/delta)``, with ``k ~ Poisson(lam)``.
    """
    L = check_delta(delta)
    if not lam > 0:
        raise InvalidLambda(f"lambda must be positive, got {lam!r}")
    half = math.sqrt(2.0 * lam * L)
    if not lam - half > 0:
        raise InvalidLambda(f"lambda={lam} too small: lambda - sqrt(2*lambda*L) <= 0")
    shift = L / 3.0
    return PoissonReport(
        raw_upper_tail=poisson_tail(lam, lam + half, upper=True),
        raw_lower_tail=poisson_tail(lam, lam - half, upper=False),
        corrected_upper_tail=poisson_tail(lam, lam + shift + half, upper=True),
        corrected_lower_tail=poisson_tail(lam, lam + shift - half, upper=False),
    )
