from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_corr(n: int, rng: np.random.Generator, df: int | None = None) -> np.ndarray:
    """Random positive definite correlation matrix (Wishart-like draw, standardized)."""
    X = rng.standard_normal((df or n + 3, n))
    S = X.T @ X
    d = np.sqrt(np.diag(S))
    R = S / np.outer(d, d)
    np.fill_diagonal(R, 1.0)
    return R


def dense_gaussian_conditional(prior_cov, obs_var, y):
    """Mean and covariance of x | y for x ~ N(0, prior_cov), y = x + e, e ~ N(0, diag(obs_var))."""
    K = prior_cov @ np.linalg.inv(prior_cov + np.diag(obs_var))
    return K @ y, prior_cov - K @ prior_cov


def affine_moments(draw, shape):
    """Mean and covariance of an affine-in-z sampler: ``draw(0)`` and ``M M'`` with columns ``draw(e_j) - draw(0)``."""
    z0 = np.zeros(shape)
    mean = draw(z0)
    cols = []
    for j in range(int(np.prod(shape))):
        e = np.zeros(int(np.prod(shape)))
        e[j] = 1.0
        cols.append((draw(e.reshape(shape)) - mean).ravel())
    M = np.array(cols).T
    return mean, M @ M.T


# --------------------------------------------------------------------------- acceptance reporting

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def detail(request):
    """List a criterion test appends measured values to; shown on its pass/fail line."""
    request.node.acceptance_detail = []
    return request.node.acceptance_detail


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    number, title = mark.args
    status = "PASS" if rep.passed else "FAIL"
    info = "; ".join(getattr(item, "acceptance_detail", []))
    line = f"[{status}] criterion {number:2d}: {title}" + (f" ({info})" if info else "")
    _ACCEPTANCE[number] = line
    print("\n" + line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
