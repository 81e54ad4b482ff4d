import json
import math

import numpy as np
import pytest

from bipcompare.market_model import validate_universe

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def normal_cdf(x: float) -> float:
    """Oracle CDF, independent of scipy."""
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def kkt_min_variance(cov, mu, target):
    """Equality-constrained QP min w'Sw s.t. 1'w = 1, mu'w = target, via the bordered KKT system."""
    n = len(mu)
    k = np.zeros((n + 2, n + 2))
    k[:n, :n] = 2 * np.asarray(cov)
    k[:n, n] = k[n, :n] = 1.0
    k[:n, n + 1] = k[n + 1, :n] = mu
    rhs = np.zeros(n + 2)
    rhs[n], rhs[n + 1] = 1.0, target
    return np.linalg.solve(k, rhs)[:n]


def random_universe(rng, n, r0=0.01):
    m = rng.normal(size=(n, n))
    cov = (m @ m.T + n * np.eye(n)) * rng.uniform(0.001, 0.05) / n
    mu = rng.uniform(0.02, 0.2, size=n)
    return validate_universe(
        {"expected_returns": mu, "covariance": (cov + cov.T) / 2, "risk_free_rate": r0}
    )


TWO_ASSET = {
    "asset_names": ["x", "y"],
    "expected_returns": [0.10, 0.20],
    "covariance": [[0.04, 0.0], [0.0, 0.09]],
    "risk_free_rate": 0.05,
}


@pytest.fixture
def two_asset():
    return validate_universe(TWO_ASSET)


@pytest.fixture
def universe_file(tmp_path):
    def write(data=TWO_ASSET, name="universe.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path

    return write
