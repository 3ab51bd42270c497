from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import affine_moments, random_corr
from dspcorr import sv
from dspcorr.kernels import _numba, _numpy

IMPLS = pytest.mark.parametrize("impl", [_numba, _numpy], ids=["numba", "numpy"])


def band_to_dense(ab_one):
    pp1, n = ab_one.shape
    Q = np.zeros((n, n))
    for d in range(pp1):
        for j in range(n - d):
            Q[j + d, j] = Q[j, j + d] = ab_one[d, j]
    return Q


def random_band(rng, k, p, n):
    ab = np.zeros((k, p + 1, n))
    ab[:, 0] = rng.uniform(2.0 * p + 1.0, 2.0 * p + 3.0, (k, n))
    for d in range(1, p + 1):
        ab[:, d, : n - d] = rng.uniform(-0.9, 0.9, (k, n - d))
    return ab


@IMPLS
@pytest.mark.parametrize("p", [1, 2])
def test_banded_sampler_dense_oracle(impl, p, rng):
    n = 5
    ab = random_band(rng, 1, p, n)
    lin = rng.standard_normal((1, n))
    Q = band_to_dense(ab[0])
    mean, cov = affine_moments(lambda z: impl.banded_precision_sample(ab, lin, z.reshape(1, n))[0], (n,))
    assert np.max(np.abs(mean - np.linalg.solve(Q, lin[0]))) < 1e-10
    assert np.max(np.abs(cov - np.linalg.inv(Q))) < 1e-10


@IMPLS
def test_banded_sampler_rejects_indefinite(impl):
    ab = np.zeros((1, 2, 3))
    ab[0, 0] = [1.0, -1.0, 1.0]
    with pytest.raises(ValueError):
        impl.banded_precision_sample(ab, np.zeros((1, 3)), np.zeros((1, 3)))


def ffbs_dense_oracle(y, x, obs_var, q, m0, p0):
    T = y.shape[0]
    # stacked state s = (s_1, ..., s_T), each (intercept, slope)
    A = np.zeros((2 * T, 2 * T + 2))      # s = A @ (s_0 deviations, w_1..w_{T-1}) + mean
    cov_in = np.zeros(2 * T + 2)
    cov_in[:2] = p0
    for t in range(1, T):
        cov_in[2 * t: 2 * t + 2] = q[:, t - 1]
    for t in range(T):
        A[2 * t: 2 * t + 2, 0:2] = np.eye(2)
        for u in range(1, t + 1):
            A[2 * t: 2 * t + 2, 2 * u: 2 * u + 2] = np.eye(2)
    A = A[:, : 2 * T]
    P = A @ np.diag(cov_in[: 2 * T]) @ A.T
    m = np.tile(m0, T)
    H = np.zeros((T, 2 * T))
    for t in range(T):
        H[t, 2 * t] = 1.0
        H[t, 2 * t + 1] = x[t]
    S = H @ P @ H.T + np.diag(obs_var)
    K = P @ H.T @ np.linalg.inv(S)
    return m + K @ (y - H @ m), P - K @ H @ P


@IMPLS
@pytest.mark.parametrize("T", [1, 2, 4])
def test_ffbs_dense_oracle(impl, T, rng):
    y = rng.standard_normal((1, T))
    x = rng.standard_normal(T)
    obs = rng.uniform(0.5, 2.0, (1, T))
    q = rng.uniform(0.01, 0.5, (1, 2, max(T - 1, 0)))
    m0 = np.array([0.1, -0.2])
    p0 = np.array([3.0, 2.0])
    mean, cov = affine_moments(
        lambda z: impl.ffbs_random_walk2(y, x, obs, q, m0, p0, z.reshape(1, T, 2))[0].ravel(), (T, 2))
    om, oc = ffbs_dense_oracle(y[0], x, obs[0], q[0], m0, p0)
    assert np.max(np.abs(mean - om)) < 1e-8
    assert np.max(np.abs(cov - oc)) < 1e-8


@IMPLS
def test_mixture_indicator_probabilities(impl, rng):
    resid = rng.standard_normal(2000) * 2 - 1.0
    u = rng.uniform(size=2000)
    idx = impl.mixture_indicators(resid, u, sv.MIX_LOG_WEIGHTS, sv.MIX_MEANS, sv.MIX_VARS)
    probs = sv.mixture_probabilities(resid)
    cum = np.cumsum(probs, axis=1)
    expected = np.argmax(u[:, None] * cum[:, -1:] < cum, axis=1)
    assert np.array_equal(idx, expected)


@IMPLS
def test_garch_recursion(impl):
    e2 = np.array([1.0, 4.0, 0.25])
    out = impl.garch_variance(e2, 0.1, 0.2, 0.7, 2.0)
    expected = [2.0, 0.1 + 0.2 * 1.0 + 0.7 * 2.0]
    expected.append(0.1 + 0.2 * 4.0 + 0.7 * expected[1])
    assert np.allclose(out, expected, atol=1e-15)


@IMPLS
def test_dcc_recursion(impl, rng):
    z = rng.standard_normal((6, 3))
    S = random_corr(3, rng)
    a, b = 0.05, 0.9
    R = impl.dcc_correlation(z, a, b, 0.0, S, np.zeros((3, 3)))
    Q = S.copy()
    for t in range(6):
        if t:
            Q = (1 - a - b) * S + a * np.outer(z[t - 1], z[t - 1]) + b * Q
        d = np.sqrt(np.diag(Q))
        assert np.allclose(R[t], Q / np.outer(d, d), atol=1e-14)


@IMPLS
def test_logdet(impl, rng):
    Rs = np.stack([random_corr(5, rng) for _ in range(8)] + [np.ones((5, 5))])
    out = impl.corr_logdet(Rs, 1e-12)
    assert np.allclose(out[:-1], np.linalg.slogdet(Rs[:-1])[1], atol=1e-12)
    assert out[-1] == -np.inf


@given(seed=st.integers(0, 2**32 - 1))
def test_backends_agree(seed):
    rng = np.random.default_rng(seed)
    k, n = 3, 12
    ab = random_band(rng, k, 1, n)
    args = (ab, rng.standard_normal((k, n)), rng.standard_normal((k, n)))
    assert np.allclose(_numba.banded_precision_sample(*args), _numpy.banded_precision_sample(*args),
                       atol=1e-12, rtol=1e-12)
    T = 10
    fargs = (rng.standard_normal((k, T)), rng.standard_normal(T), rng.uniform(0.5, 2, (k, T)),
             rng.uniform(1e-4, 0.1, (k, 2, T - 1)), np.zeros(2), np.full(2, 10.0), rng.standard_normal((k, T, 2)))
    assert np.allclose(_numba.ffbs_random_walk2(*fargs), _numpy.ffbs_random_walk2(*fargs), atol=1e-12, rtol=1e-12)
    z = rng.standard_normal((20, 4))
    S = random_corr(4, rng)
    N = np.cov(np.minimum(z, 0).T)
    dargs = (z, 0.04, 0.9, 0.02, S, N)
    assert np.allclose(_numba.dcc_correlation(*dargs), _numpy.dcc_correlation(*dargs), atol=1e-13)
    e2 = rng.standard_normal(50) ** 2
    assert np.allclose(_numba.garch_variance(e2, 0.05, 0.1, 0.85, 1.0),
                       _numpy.garch_variance(e2, 0.05, 0.1, 0.85, 1.0), atol=1e-13)


def test_pg_backends_same_distribution():
    c = np.full(40000, 1.5)
    a = _numba.polya_gamma_1(c, np.random.default_rng(1))
    b = _numpy.polya_gamma_1(c, np.random.default_rng(2))
    mean = np.tanh(0.75) / 3.0
    se = np.sqrt(np.var(a) / c.size)
    assert abs(a.mean() - mean) < 5 * se and abs(b.mean() - mean) < 5 * se


@pytest.mark.parametrize("value,expected", [("numpy", "numpy"), ("numba", "numba"), ("", "numba")])
def test_backend_selection(value, expected):
    env = dict(os.environ, DSPCORR_BACKEND=value)
    out = subprocess.run([sys.executable, "-c", "from dspcorr import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected


def test_backend_rejects_unknown():
    env = dict(os.environ, DSPCORR_BACKEND="fortran")
    out = subprocess.run([sys.executable, "-c", "import dspcorr.kernels"], env=env, capture_output=True, text=True)
    assert out.returncode != 0 and "DSPCORR_BACKEND" in out.stderr
