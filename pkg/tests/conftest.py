import math

import numpy as np
import pytest

from subgmean.distributions import benchmark_suite, sample_distribution

_LINES = pytest.StashKey()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def acceptance_report(request):
    """Record one PASS/FAIL line per acceptance criterion and return the pass flag."""
    lines = request.config.stash[_LINES]

    def report(number, title, passed, detail):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        lines.append(line)
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


def corpus_stream(seed):
    """Endless randomized instances: n log-uniform in [10, 1e4], delta log-uniform in [1e-6, 0.3].

    Samples rotate through the standardized benchmark families.
    """
    rng = np.random.default_rng(seed)
    suite = benchmark_suite()
    i = 0
    while True:
        n = int(round(10 ** rng.uniform(1.0, 4.0)))
        delta = float(10 ** rng.uniform(-6.0, math.log10(0.3)))
        spec = suite[i % len(suite)]
        i += 1
        yield spec, sample_distribution(spec, n, int(rng.integers(2**63))), delta


def random_corpus(count, seed, feasible=None):
    """The first ``count`` instances of ``corpus_stream(seed)`` passing ``feasible``.

    Returns the instances and the number of rejected draws.
    """
    out, rejected = [], 0
    for spec, x, delta in corpus_stream(seed):
        if len(out) == count:
            break
        if feasible is None or feasible(x, delta):
            out.append((spec, x, delta))
        else:
            rejected += 1
    return out, rejected


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
