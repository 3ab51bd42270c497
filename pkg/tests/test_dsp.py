from __future__ import annotations

import numpy as np
import pytest
from scipy import integrate, stats

from conftest import affine_moments, dense_gaussian_conditional
from dspcorr import dsp
from dspcorr.sv import MIX_MEANS, MIX_VARS


def half_cauchy_cdf(x):
    return 2.0 / np.pi * np.arctan(x)


def z_cdf(x):
    # logit of Beta(1/2, 1/2): P(logit U <= x) = (2/pi) arcsin(sqrt(sigmoid(x)))
    return 2.0 / np.pi * np.arcsin(np.sqrt(1.0 / (1.0 + np.exp(-x))))


def pg_mean(b, c):
    return b / 4.0 if c == 0 else b / (2.0 * c) * np.tanh(c / 2.0)


class TestPolyaGamma:
    def test_mean_c0(self):
        x = dsp.sample_polya_gamma(1.0, 0.0, np.random.default_rng(0), size=200_000)
        assert abs(x.mean() - 0.25) < 0.005

    def test_mean_c2(self):
        x = dsp.sample_polya_gamma(1.0, 2.0, np.random.default_rng(1), size=200_000)
        assert x.mean() == pytest.approx(np.tanh(1.0) / 4.0, rel=0.02)

    @pytest.mark.parametrize("b,c", [(2.0, 1.0), (0.5, 0.0), (1.7, 3.0)])
    def test_mean_general(self, b, c):
        x = dsp.sample_polya_gamma(b, c, np.random.default_rng(2), size=100_000)
        assert x.mean() == pytest.approx(pg_mean(b, c), rel=0.02)

    def test_variance_c0(self):
        # Var PG(1, 0) = 1/24
        x = dsp.sample_polya_gamma(1.0, 0.0, np.random.default_rng(3), size=200_000)
        assert x.var() == pytest.approx(1.0 / 24.0, rel=0.03)

    @pytest.mark.parametrize("b", [0.0, -1.0])
    def test_rejects_nonpositive_shape(self, b):
        with pytest.raises(ValueError):
            dsp.sample_polya_gamma(b, 1.0, np.random.default_rng(0))


class TestZ:
    def test_mean(self):
        z = dsp.sample_z_innovation(np.random.default_rng(0), 200_000)
        assert abs(z.mean()) < 0.02

    def test_mgf_quarter(self):
        z = dsp.sample_z_innovation(np.random.default_rng(1), 200_000)
        assert np.mean(np.exp(0.25 * z)) == pytest.approx(1.0 / np.cos(np.pi / 4), rel=0.02)

    def test_mgf_by_quadrature(self):
        # the law itself (density sech(x/2) / (2 pi)) has MGF sec(pi t) at t = 0.4
        def integrand(x):
            # exp(t x) / cosh(x / 2) written without overflow
            return np.exp(0.4 * x - 0.5 * abs(x)) / (1.0 + np.exp(-abs(x))) / np.pi

        val = integrate.quad(integrand, -np.inf, np.inf, epsabs=1e-12, epsrel=1e-12)[0]
        assert val == pytest.approx(1.0 / np.cos(0.4 * np.pi), rel=1e-8)

    def test_ks_exact_cdf(self):
        z = dsp.sample_z_innovation(np.random.default_rng(2), 50_000)
        assert stats.kstest(z, z_cdf).statistic < 0.01

    def test_pg_augmentation_round_trip(self):
        # eta ~ Z, xi | eta ~ PG(1, eta), eta' | xi ~ N(0, 1/xi) must give eta' ~ Z again
        rng = np.random.default_rng(3)
        n = 50_000
        z = dsp.sample_z_innovation(rng, n)
        xi = dsp.sample_polya_gamma(1.0, z, rng)
        back = rng.standard_normal(n) / np.sqrt(xi)
        assert stats.ks_2samp(z, back).statistic < 0.02
        assert stats.kstest(back, z_cdf).statistic < 0.02

    def test_pg_scale_mixture_equivalence(self):
        # the density of Z is proportional to E_PG(1,0)[exp(-xi eta^2 / 2)], so the
        # mixing law of xi is PG(1, 0) tilted by xi^(-1/2); resample by that weight
        rng = np.random.default_rng(4)
        n = 50_000
        z = dsp.sample_z_innovation(rng, n)
        pool = dsp.sample_polya_gamma(1.0, 0.0, rng, size=20 * n)
        w = pool ** -0.5
        xi = rng.choice(pool, size=n, p=w / w.sum())
        mix = rng.standard_normal(n) / np.sqrt(xi)
        assert stats.ks_2samp(z, mix).statistic < 0.02


def random_channel(rng, n=3):
    ch = dsp.init_channels(1, n, np.zeros(1, dtype=int), T=n + 1)
    ch.phi = np.array([0.6])
    ch.log_tau2 = np.array([-1.0])
    ch.xi = rng.uniform(0.2, 2.0, (1, n))
    ch.mix = rng.integers(0, 10, (1, n))
    return ch


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_h_path_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    n = 3
    ch = random_channel(rng, n)
    ystar = rng.normal(-3.0, 2.0, (1, n))
    mean, cov = affine_moments(lambda z: dsp.h_conditional_draw(ch, ystar, z.reshape(1, n))[0], (n,))
    A = np.eye(n) - 0.6 * np.eye(n, k=-1)      # eta = A x
    prior_cov = np.linalg.inv(A.T @ np.diag(ch.xi[0]) @ A)
    mu = ch.mu[0]
    om, oc = dense_gaussian_conditional(prior_cov, MIX_VARS[ch.mix[0]], ystar[0] - MIX_MEANS[ch.mix[0]] - mu)
    assert np.max(np.abs(mean - mu - om)) < 1e-8
    assert np.max(np.abs(cov - oc)) < 1e-8


def test_zero_innovations_finite():
    ch = dsp.init_channels(2, 6, np.array([0, 1]), T=7)
    out = dsp.update_channels(ch, np.zeros((2, 6)), np.random.default_rng(0))
    out.check()
    assert np.all(np.isfinite(out.h)) and np.all(np.isfinite(out.log_tau2))


def test_rejects_bad_innovations():
    ch = dsp.init_channels(2, 6, np.array([0, 1]), T=7)
    with pytest.raises(ValueError):
        dsp.update_h_path(ch, np.full((2, 6), np.inf), np.random.default_rng(0))
    with pytest.raises(ValueError):
        dsp.update_h_path(ch, np.zeros((2, 5)), np.random.default_rng(0))


def test_determinism():
    omega = np.random.default_rng(1).standard_normal((3, 8)) * 0.1
    ch = dsp.init_channels(3, 8, np.array([0, 0, 1]), T=9)
    a = dsp.update_channels(ch, omega, np.random.default_rng(5))
    b = dsp.update_channels(ch, omega, np.random.default_rng(5))
    for name in ("h", "phi", "log_tau2", "log_tau0_2", "xi"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


@pytest.fixture(scope="module")
def prior_chain():
    """Prior-only chain from a deterministic (non-prior) start, 200 sweeps, 5000 independent channels."""
    rng = np.random.default_rng(11)
    k, n, T = 5000, 10, 11
    ch = dsp.init_channels(k, n, np.arange(k), T)
    for _ in range(200):
        ch = dsp.update_channels(ch, None, rng)
    return ch


def test_prior_chain_phi_mean(prior_chain):
    assert np.all(np.abs(prior_chain.phi) < 1)
    assert abs(prior_chain.phi.mean() - (2 * 10 / 12 - 1)) < 0.02


def test_prior_chain_h_variance(prior_chain):
    n = prior_chain.n
    beta = stats.beta(dsp.PHI_A, dsp.PHI_B)
    # Var x_n = Var(eta) * sum_j E[phi^(2j)], Var(eta) = pi^2
    exact = np.pi**2 * sum(beta.expect(lambda u, j=j: (2 * u - 1) ** (2 * j)) for j in range(n))
    x = prior_chain.h - prior_chain.mu[:, None]
    assert x[:, -1].var() == pytest.approx(exact, rel=0.03)


def test_prior_marginal_scales_half_cauchy():
    rng = np.random.default_rng(12)
    k, n, T = 50_000, 10, 11
    ch = dsp.simulate_prior(k, n, np.arange(k), T, rng)
    for _ in range(5):
        ch = dsp.update_channels(ch, None, rng)
    assert np.all(ch.tau > 0) and np.all(ch.tau0 > 0)
    assert stats.kstest(ch.tau, half_cauchy_cdf).statistic < 0.02
    assert stats.kstest(ch.tau0 * np.sqrt(T), half_cauchy_cdf).statistic < 0.02
    # the stationary h-path variance agrees with direct forward simulation
    ref = dsp.simulate_prior(k, n, np.arange(k), T, np.random.default_rng(13))
    v_chain = (ch.h - ch.mu[:, None])[:, -1].var()
    v_ref = (ref.h - ref.mu[:, None])[:, -1].var()
    assert v_chain == pytest.approx(v_ref, rel=0.03)


def test_tau0_prior_scale_family():
    k = 100_000
    med = {}
    for T in (100, 200, 400):
        ch = dsp.simulate_prior(k, 1, np.arange(k), T, np.random.default_rng(T))
        med[T] = np.median(ch.tau0)
        assert med[T] == pytest.approx(1 / np.sqrt(T), rel=0.02)
    assert med[200] / med[100] == pytest.approx(1 / np.sqrt(2), rel=0.03)
    assert med[400] / med[100] == pytest.approx(0.5, rel=0.03)
