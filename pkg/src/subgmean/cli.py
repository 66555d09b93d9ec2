"""Command-line interface: ``subgmean estimate | bench | verify``.

Exit codes: 0 success or certificate passed, 1 certificate failed,
2 usage or input error.
"""
import argparse
import math
from pathlib import Path
import sys

import numpy as np

from . import analysis
from .bench import (
    format_summary,
    parse_config,
    poisson_skew_experiment,
    run_trials,
    summarize,
    write_records_csv,
)
from .core import estimate, solve_alpha, weighted_trim_mean
from .distributions import DistributionSpec, benchmark_suite, sample_distribution
from .exceptions import SubgMeanError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _g(v):
    return format(float(v), ".17g")


def _kv(out, **pairs):
    for k, v in pairs.items():
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = _g(v)
        print(f"{k} = {v}", file=out)


def _check_delta_arg(delta):
    if not 0.0 < delta < 1.0:
        raise UsageError(f"invalid delta {delta!r}: must lie in (0, 1)")


def read_values(path):
    """One decimal number per line; blank lines and ``#`` comments are skipped."""
    values = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            v = float(s)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: not a number: {s!r}") from None
        if not math.isfinite(v):
            raise UsageError(f"{path}:{lineno}: non-finite value {s!r}")
        values.append(v)
    if not values:
        raise UsageError(f"{path}: no values")
    return np.array(values)


def cmd_estimate(args, out):
    _check_delta_arg(args.delta)
    x = read_values(args.input)
    if args.kappa is None:
        est = estimate(x, args.delta)
        mu_hat, kappa, sol = est.mu_hat, est.kappa, est.alpha
    else:
        kappa = args.kappa
        sol = solve_alpha(x, kappa, args.delta)
        mu_hat = weighted_trim_mean(x, kappa, sol.alpha)
    _kv(out, mu_hat=mu_hat, kappa=float(kappa), alpha=sol.alpha, v_hat=sol.v_hat,
        clamp_count=sol.clamp_count)
    return EXIT_OK


def cmd_bench(args, out):
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from None
    cfg = parse_config(text)
    records = run_trials(cfg.families, cfg.estimators, cfg.n, cfg.delta, cfg.trials,
                         cfg.master_seed, workers=args.workers)
    write_records_csv(records, args.out)
    print(format_summary(summarize(records, slack=cfg.slack)), file=out)
    return EXIT_OK


def _verify_inequality(args, out):
    grid = np.linspace(analysis.V_MIN, analysis.V_MAX, args.vhat_points)
    rep = analysis.certify_inequality(grid, (-50.0, 50.0), args.y_step, corrupt_b=args.corrupt_b,
                                      workers=args.workers)
    out.write(rep.to_text())
    return rep.passed


def _verify_moment(args, out):
    deltas = [args.delta] if args.delta is not None else [1e-2, 1e-4]
    ok = True
    for spec in benchmark_suite():
        for d in deltas:
            for v in (0.05, 0.1, 0.5, 1.0, 5.0, 20.0, 55.4):
                mb = analysis.moment_factor_bound(spec, v, args.n, d)
                ok &= mb.passed
                print(f"{spec.dist_id} delta={d:g} v_hat={v:g} lhs={_g(mb.lhs)} rhs={_g(mb.rhs)} "
                      f"passed={'true' if mb.passed else 'false'}", file=out)
    _kv(out, passed=ok)
    return ok


def _verify_lipschitz(args, out):
    delta = args.delta if args.delta is not None else 1e-3
    _check_delta_arg(delta)
    x = sample_distribution(DistributionSpec("gaussian"), args.n, args.seed)
    log_inv = -math.log(delta)
    lip = analysis.lipschitz_probe(x, delta, np.linspace(analysis.V_MIN, analysis.V_MAX, args.vhat_points))
    kappa_grid = np.linspace(-0.1, 0.1, 41)
    kap = analysis.kappa_sensitivity_probe(x, delta, kappa_grid)
    lip_bound = 10.0 * log_inv
    kap_bound = 10.0 * math.sqrt(log_inv / args.n)
    ok_lip = lip.skipped_reason is None and max(lip.max_slope_mu, lip.max_slope_alpha) <= lip_bound
    ok_kap = not kap.failed and kap.max_slope <= kap_bound
    _kv(out, root_v_hat=lip.root_v_hat, max_slope_mu=lip.max_slope_mu,
        max_slope_alpha=lip.max_slope_alpha, lipschitz_bound=lip_bound,
        kappa_max_slope=kap.max_slope, kappa_bound=kap_bound)
    if lip.skipped_reason:
        print(f"skipped = {lip.skipped_reason}", file=out)
    _kv(out, passed=bool(ok_lip and ok_kap))
    return ok_lip and ok_kap


def _verify_poisson(args, out):
    delta = args.delta if args.delta is not None else 1e-4
    _check_delta_arg(delta)
    rep = poisson_skew_experiment(args.lam, delta)
    ok = rep.corrected_max_tail <= rep.raw_max_tail
    _kv(out, raw_upper_tail=rep.raw_upper_tail, raw_lower_tail=rep.raw_lower_tail,
        corrected_upper_tail=rep.corrected_upper_tail, corrected_lower_tail=rep.corrected_lower_tail,
        raw_max_tail=rep.raw_max_tail, corrected_max_tail=rep.corrected_max_tail, passed=ok)
    return ok


_VERIFIERS = {
    "inequality": _verify_inequality,
    "lemma5": _verify_inequality,  # alias kept for existing scripts
    "moment": _verify_moment,
    "lipschitz": _verify_lipschitz,
    "poisson": _verify_poisson,
}


def cmd_verify(args, out):
    if args.vhat_points < 1 or args.y_step <= 0:
        raise UsageError("--vhat-points must be >= 1 and --y-step > 0")
    return EXIT_OK if _VERIFIERS[args.which](args, out) else EXIT_FAIL


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="subgmean", description="Sub-Gaussian mean estimation toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pe = sub.add_parser("estimate", help="estimate the mean of a one-value-per-line file")
    pe.add_argument("input")
    pe.add_argument("--delta", type=float, default=0.01)
    pe.add_argument("--kappa", type=float, default=None, help="fixed pilot estimate")
    pe.set_defaults(func=cmd_estimate)

    pb = sub.add_parser("bench", help="run a Monte Carlo benchmark from a config file")
    pb.add_argument("--config", required=True)
    pb.add_argument("--out", required=True)
    pb.add_argument("--workers", type=int, default=1)
    pb.set_defaults(func=cmd_bench)

    pv = sub.add_parser("verify", help="run a numerical certificate")
    pv.add_argument("which", choices=sorted(_VERIFIERS))
    pv.add_argument("--vhat-points", type=int, default=1000)
    pv.add_argument("--y-step", type=float, default=1e-3)
    pv.add_argument("--lambda", dest="lam", type=float, default=1000.0)
    pv.add_argument("--delta", type=float, default=None)
    pv.add_argument("--n", type=int, default=10_000)
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--workers", type=int, default=1)
    pv.add_argument("--corrupt-b", type=float, default=0.0, help=argparse.SUPPRESS)
    pv.set_defaults(func=cmd_verify)
    return p


def main(argv=None, out=None):
    out = out if out is not None else sys.stdout
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except (UsageError, SubgMeanError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
