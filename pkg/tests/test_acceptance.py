"""Numbered acceptance criteria; each prints one PASS/FAIL line.

Run with ``pytest -s tests/test_acceptance.py``; the lines are also collected
in the terminal summary.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest
from scipy.stats import ortho_group

import geweke
from conftest import affine_moments, dense_gaussian_conditional
from dspcorr import dsp, model, sv
from dspcorr.baselines import dcc_fit, ewma_corr, garch11_fit, mfsv_score_path, nearest_pd_correlation, simulate_garch
from dspcorr.metrics import evaluate, mae_steady, mae_transient, response_lag, rmse, settling_lag
from dspcorr.scenarios import build_equicorr, generate
from dspcorr.score import score, total_correlation
from test_dsp import random_channel
from test_model import coefficient_dense_oracle, small_state
from test_sv import ar1_cov


def acceptance(number, title):
    return pytest.mark.acceptance(number, title)


@acceptance(1, "score closed forms")
def test_score_closed_forms(detail):
    t0 = time.perf_counter()
    worst = 0.0
    for n in (2, 5, 30):
        assert score(np.eye(n)) == 0.0
        assert score(build_equicorr(n, -1.0 / (n - 1))) == pytest.approx(1.0, abs=1e-12)
    for n, rho in ((2, 0.6), (30, 0.10), (30, 0.70)):
        R = build_equicorr(n, rho)
        expected = 1.0 - ((1 - rho) ** (n - 1) * (1 + (n - 1) * rho)) ** (1.0 / n)
        worst = max(worst, abs(score(R) - expected), abs(score(R) - (1.0 - math.exp(-2.0 * total_correlation(R)))))
    elapsed = time.perf_counter() - t0
    detail += [f"max abs err {worst:.1e}", f"{elapsed:.3f}s"]
    assert worst <= 1e-12
    assert elapsed < 1.0


@acceptance(2, "Z innovation MGF equals sec(pi t)")
def test_z_mgf(detail):
    t0 = time.perf_counter()
    z = dsp.sample_z_innovation(np.random.default_rng(2), 200_000)
    errs = {t: abs(np.mean(np.exp(t * z)) * math.cos(math.pi * t) - 1.0) for t in (0.1, 0.25, 0.4)}
    elapsed = time.perf_counter() - t0
    detail += [f"rel err t={t}: {e:.4f}" for t, e in errs.items()] + [f"{elapsed:.1f}s"]
    assert errs[0.1] < 0.02 and errs[0.25] < 0.02 and errs[0.4] < 0.05
    assert elapsed < 10.0


@acceptance(3, "Polya-Gamma moments")
def test_pg_moments(detail):
    t0 = time.perf_counter()
    m0 = dsp.sample_polya_gamma(1.0, 0.0, np.random.default_rng(3), size=200_000).mean()
    m2 = dsp.sample_polya_gamma(1.0, 2.0, np.random.default_rng(4), size=200_000).mean()
    rel2 = abs(m2 / (math.tanh(1.0) / 4.0) - 1.0)
    elapsed = time.perf_counter() - t0
    detail += [f"PG(1,0) mean {m0:.5f}", f"PG(1,2) rel err {rel2:.4f}", f"{elapsed:.1f}s"]
    assert abs(m0 - 0.25) <= 0.005 and rel2 <= 0.02
    assert elapsed < 10.0


def _dsp_path_error(seed):
    rng = np.random.default_rng(seed)
    n = 3
    ch = random_channel(rng, n)
    ystar = rng.normal(-3.0, 2.0, (1, n))
    mean, cov = affine_moments(lambda z: dsp.h_conditional_draw(ch, ystar, z.reshape(1, n))[0], (n,))
    A = np.eye(n) - ch.phi[0] * np.eye(n, k=-1)
    prior_cov = np.linalg.inv(A.T @ np.diag(ch.xi[0]) @ A)
    mu = ch.mu[0]
    om, oc = dense_gaussian_conditional(prior_cov, sv.MIX_VARS[ch.mix[0]], ystar[0] - sv.MIX_MEANS[ch.mix[0]] - mu)
    return max(np.max(np.abs(mean - mu - om)), np.max(np.abs(cov - oc)))


def _sv_path_error(seed, T):
    rng = np.random.default_rng(seed)
    params = sv.SvParams([0.3], [0.85], [0.2])
    mix = rng.integers(0, 10, (1, T))
    ystar = rng.normal(-1.0, 2.0, (1, T))
    mean, cov = affine_moments(lambda z: sv.sv_path_draw(ystar, params, mix, z.reshape(1, T))[0], (T,))
    om, oc = dense_gaussian_conditional(ar1_cov(T, 0.85, 0.2), sv.MIX_VARS[mix[0]], ystar[0] - sv.MIX_MEANS[mix[0]] - 0.3)
    return max(np.max(np.abs(mean - 0.3 - om)), np.max(np.abs(cov - oc)))


def _coefficient_path_error(seed, T):
    N = 2
    state, rng = small_state(T=T, N=N, r=1, seed=seed)
    y = rng.standard_normal((T, N))
    rm = rng.standard_normal(T)
    mean, cov = affine_moments(
        lambda z: model.coefficient_conditional(y, rm, state, z.reshape(N, T, 2), 10.0).ravel(), (N, T, 2))
    fac = state.factor
    target = y - fac.f @ fac.lam.T
    err = np.max(np.abs(cov[: 2 * T, 2 * T:]))
    for a in range(N):
        om, oc = coefficient_dense_oracle(target[:, a], rm, np.exp(fac.h_bar[:, a]),
                                          np.exp(state.channels.h[a]), np.exp(state.channels.h[N + a]), 10.0)
        blk = slice(a * 2 * T, (a + 1) * 2 * T)
        err = max(err, np.max(np.abs(mean[blk] - om)), np.max(np.abs(cov[blk, blk] - oc)))
    return err


@acceptance(4, "smoother conditionals match dense Gaussian conditioning")
def test_smoother_oracles(detail):
    errs = {
        "dsp": max(_dsp_path_error(s) for s in range(3)),
        "sv": max(_sv_path_error(s, T) for s in range(3) for T in (2, 3, 4)),
        "coef": max(_coefficient_path_error(s, T) for s in range(3) for T in (2, 4)),
    }
    detail += [f"{k} max err {v:.1e}" for k, v in errs.items()]
    assert max(errs.values()) < 1e-8


@acceptance(5, "Gibbs sweep rank uniformity (N=2, T=30, r=1)")
def test_getting_it_right(detail):
    t0 = time.perf_counter()
    ranks, failures = geweke.rank_draws(1000, 9, seed=5)
    p = geweke.uniformity_pvalues(ranks, 9)
    corrected = float(p.min() * len(p))
    elapsed = time.perf_counter() - t0
    detail += [f"{len(p)} stats", f"min p {p.min():.3f}", f"Bonferroni p {corrected:.3f}",
               f"{failures} failed reps", f"{elapsed:.0f}s"]
    assert len(p) >= 12 and failures == 0
    assert corrected > 0.01
    assert elapsed < 15 * 60


@acceptance(6, "Scenario 1: model RMSE below EWMA on every seed, coverage >= 0.85")
def test_scenario1_ordering(detail):
    t0 = time.perf_counter()
    N, T = 10, 400
    for seed in (0, 1, 2):
        data = generate(1, seed, N=N, T=T)
        summ = model.fit(data.panel, model.ModelConfig(r=3, n_burn=300, n_retain=600, thin=2, seed=seed)).summary()
        rep = evaluate("dsp_mfsv_capm", summ.mean, data.truth_score, data.breaks, summ.hdi_lo, summ.hdi_hi)
        ewma = rmse(ewma_corr(data.panel, 60, 0.94).score, data.truth_score, (60, T))
        detail.append(f"seed {seed}: {rep.rmse:.3f} vs {ewma:.3f}, cov {rep.coverage:.2f}")
        assert rep.rmse < ewma
        assert rep.coverage >= 0.85
    elapsed = time.perf_counter() - t0
    detail.append(f"{elapsed:.0f}s")
    assert elapsed < 45 * 60


@acceptance(7, "Scenario 4: Gaussian DCC RMSE below model RMSE")
def test_scenario4_ordering(detail):
    t0 = time.perf_counter()
    N, T = 5, 600
    for seed in (0, 1):
        data = generate(4, seed, N=N, T=T)
        summ = model.fit(data.panel, model.ModelConfig(r=3, n_burn=300, n_retain=600, thin=2, seed=seed)).summary()
        ours = rmse(summ.mean, data.truth_score, (60, T))
        dcc = rmse(dcc_fit(data.panel, "gaussian").score, data.truth_score, (60, T))
        detail.append(f"seed {seed}: dcc {dcc:.3f} vs {ours:.3f}")
        assert dcc < ours
    elapsed = time.perf_counter() - t0
    detail.append(f"{elapsed:.0f}s")
    assert elapsed < 30 * 60


@acceptance(8, "DCC parameter recovery (a, b) = (0.03, 0.95)")
def test_dcc_recovery(detail):
    t0 = time.perf_counter()
    path = dcc_fit(generate(4, 1, N=5, T=2000).panel, "gaussian")
    a, b = path.params["a"], path.params["b"]
    elapsed = time.perf_counter() - t0
    detail += [f"a {a:.4f}", f"b {b:.4f}", f"{elapsed:.1f}s"]
    assert abs(a - 0.03) <= 0.02 and abs(b - 0.95) <= 0.05
    assert elapsed < 5 * 60


@acceptance(9, "GARCH(1,1) parameter recovery (0.08, 0.90)")
def test_garch_recovery(detail):
    t0 = time.perf_counter()
    fit = garch11_fit(simulate_garch(5000, 0.05, 0.08, 0.90, np.random.default_rng(8)))
    elapsed = time.perf_counter() - t0
    detail += [f"alpha {fit.arch:.4f}", f"beta {fit.garch:.4f}", f"{elapsed:.1f}s"]
    assert abs(fit.arch - 0.08) <= 0.03 and abs(fit.garch - 0.90) <= 0.04
    assert elapsed < 60


@acceptance(10, "metrics on hand-built step and ramp paths")
def test_metrics_oracles(detail):
    T, b = 1000, 250
    truth = np.full(T, 0.2)
    truth[b:] = 0.6                                   # times 251.. are post-break
    ramp = truth.copy()
    ramp[b:b + 10] = 0.2 + 0.04 * np.arange(1, 11)     # reaches the new level at period 10
    late = truth.copy()
    late[b:b + 6] = 0.2                               # periods 1..6 still at the old level
    steady = truth.copy()
    steady[b + 20:b + 70] += 0.2                      # periods 21..70
    early = truth.copy()
    early[b:b + 50] -= 0.3                            # periods 1..50
    checks = {
        "response exact": response_lag(truth, truth, [b]) == 1.0,
        "response ramp": response_lag(ramp, truth, [b]) == 5.0,
        "response never": response_lag(np.full(T, 0.2), truth, [b]) == math.inf,
        "settling exact": settling_lag(truth, truth, [b]) == 1.0,
        "settling late": settling_lag(late, truth, [b]) == 7.0,
        "mae1 window": abs(mae_steady(steady, truth, [b]) - 0.2) < 1e-15,
        "mae1 ignores 1-20": mae_steady(late, truth, [b]) == 0.0,
        "mae2 window": abs(mae_transient(early, truth, [b]) - 0.3) < 1e-15,
        "mae2 ignores 51+": mae_transient(steady, truth, [b]) == pytest.approx(0.2 * 30 / 50, abs=1e-15),
    }
    failed = [k for k, ok in checks.items() if not ok]
    detail.append(f"{len(checks) - len(failed)}/{len(checks)} exact" + (f", failed {failed}" if failed else ""))
    assert not failed


@acceptance(11, "nearest-PD projection on 50 non-PSD matrices")
def test_nearest_pd(detail):
    rng = np.random.default_rng(11)
    worst_idem, worst_eig, done = 0.0, np.inf, 0
    while done < 50:
        n = int(rng.integers(3, 11))
        A = rng.uniform(-1, 1, (n, n))
        A = 0.5 * (A + A.T)
        np.fill_diagonal(A, 1.0)
        if np.linalg.eigvalsh(A)[0] >= 0:
            continue
        X = nearest_pd_correlation(A)
        assert np.all(np.diag(X) == 1.0)
        worst_idem = max(worst_idem, np.max(np.abs(nearest_pd_correlation(X) - X)))
        worst_eig = min(worst_eig, np.linalg.eigvalsh(X)[0])
        done += 1
    detail += [f"idempotence {worst_idem:.1e}", f"min eig {worst_eig:.3e}"]
    assert worst_idem <= 1e-9
    assert worst_eig >= 1e-8 - 1e-12


def _working_scale_state(seed, N=6, T=60, r=3, sweeps=20):
    """A sampler state after a few sweeps on simulated returns scaled to unit market sd."""
    panel = generate(1, seed, N=N, T=T).panel
    scale = panel.market.std()
    y, rm = panel.excess / scale, panel.market / scale
    state = model.init_state(y, rm, r, np.random.default_rng(seed))
    hyper = model.Hyperparameters()
    for s in range(1, sweeps + 1):
        state = model.gibbs_sweep(y, rm, state, hyper, seed, s)
    return state


@acceptance(12, "rotation invariance of covariance_path and mfsv_score_path")
def test_rotation_invariance(detail):
    # states come from the sampler on unit-scale data; raw prior draws can put
    # covariance entries near 1e6, where one ulp already exceeds 1e-10
    worst = 0.0
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        state = _working_scale_state(seed)
        T = state.T
        fac = state.factor
        fac.fac_path.h[:] = fac.fac_path.h[0][None, :]   # equal across factors, time-varying
        Q = ortho_group.rvs(3, random_state=rng)
        rot = state.copy()
        rot.factor.lam = fac.lam @ Q
        rot.factor.f = fac.f @ Q
        for t in range(T):
            worst = max(worst, np.max(np.abs(model.covariance_path(rot, t) - model.covariance_path(state, t))))
        a = mfsv_score_path(fac.lam, fac.h_tilde, fac.h_bar)
        b = mfsv_score_path(fac.lam @ Q, fac.h_tilde, fac.h_bar)
        worst = max(worst, np.max(np.abs(a - b)))
    detail.append(f"max abs change {worst:.1e}")
    assert worst < 1e-10
