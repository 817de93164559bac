import itertools
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from plxrank import FeatureTensor, Profile, TopLOrder

settings.register_profile("repo", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

FIXTURES = Path(__file__).parent / "fixtures"

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_features(rng, n, m, d, lo=-1.0, hi=1.0) -> FeatureTensor:
    return FeatureTensor(rng.uniform(lo, hi, size=(n, m, d)))


def brute_log_prob(X, prefix, beta, subset=None):
    """Product of softmax factors written out with explicit loops.

    ``X`` is one agent's (m, d) feature matrix. ``subset`` restricts the
    alternatives (l-way orders, where the last position is not a choice).
    """
    u = [float(sum(beta[r] * X[i, r] for r in range(X.shape[1]))) for i in range(X.shape[0])]
    pool = list(range(X.shape[0])) if subset is None else list(subset)
    steps = prefix if subset is None else prefix[:-1]
    total = 0.0
    for i in steps:
        den = sum(np.exp(u[q]) for q in pool)
        total += u[i] - np.log(den)
        pool.remove(i)
    return total


def all_top_l(m, agent=0):
    for l in range(1, m):
        for p in itertools.permutations(range(m), l):
            yield TopLOrder(agent, p)


def random_profile(rng, features: FeatureTensor, n_orders: int, max_len=None) -> Profile:
    m = features.m
    max_len = m - 1 if max_len is None else max_len
    orders = []
    for _ in range(n_orders):
        l = int(rng.integers(1, max_len + 1))
        orders.append(TopLOrder(int(rng.integers(features.n)), tuple(rng.permutation(m)[:l])))
    return Profile.from_orders(orders, m)
