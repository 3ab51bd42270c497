"""Simulation designs with exact ground-truth correlation and score paths.

All designs are laid out on a 1000-period clock and rescaled to the requested
``T``: a time ``s`` on the reference clock becomes ``round(s * T / 1000)``.
Assets are split into three near-equal groups with ``numpy.array_split``.

Designs
-------
1. Four regimes of market-driven dependence with breaks at 250, 500, 750.
2. Sparse group dependence with three crisis windows.
3. Latent factor dimension switching between one, six and two factors.
4. A correctly specified DCC(1,1) process with Student-t innovations.
5. Design 1 with persistent AR(1) intercepts/slopes and stochastic market volatility.

For designs 1, 2 and 5 the residual covariance of each regime is calibrated
so that the total asset covariance has the target correlation exactly. When
the market part alone would exceed the target covariance in some direction
(so no valid residual covariance exists), the regime's asset standard
deviations are inflated by a common factor until the market share of any
portfolio variance is at most ``MAX_MARKET_SHARE``; correlations are
unaffected by this scalar inflation.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from dspcorr.panel import ReturnPanel, write_panel_csv
from dspcorr.score import cov_to_corr, score_batch, validate_correlation

REFERENCE_T = 1000
MAX_MARKET_SHARE = 0.5
EIG_TOL = -1e-10


class CalibrationError(ValueError):
    """Target correlation cannot be produced with the given market component."""


def build_equicorr(N: int, rho: float) -> np.ndarray:
    """``(1 - rho) I + rho 11'``; requires ``-1/(N-1) <= rho <= 1``."""
    if N < 1:
        raise ValueError("N must be positive")
    lower = -1.0 / (N - 1) if N > 1 else -1.0
    if not lower - 1e-15 <= rho <= 1.0:
        raise ValueError(f"rho={rho} outside the feasible range [{lower:.6g}, 1] for N={N}")
    R = np.full((N, N), float(rho))
    np.fill_diagonal(R, 1.0)
    return R


def build_block_corr(block_sizes, within, between) -> np.ndarray:
    """Block-constant correlation matrix.

    Parameters
    ----------
    block_sizes : sequence of int
    within : float or sequence
        Within-block correlation, scalar or one value per block.
    between : float or (B, B) array
        Between-block correlation, scalar or a symmetric block matrix whose
        diagonal is ignored.
    """
    sizes = [int(s) for s in block_sizes]
    if not sizes or min(sizes) < 1:
        raise ValueError("block sizes must be positive")
    B = len(sizes)
    within = np.broadcast_to(np.asarray(within, dtype=float), (B,))
    between = np.asarray(between, dtype=float)
    between = np.full((B, B), float(between)) if between.ndim == 0 else between
    if between.shape != (B, B) or not np.allclose(between, between.T):
        raise ValueError("between-block matrix must be symmetric B x B")
    block = between.copy()
    block[np.diag_indices(B)] = within
    lab = np.repeat(np.arange(B), sizes)
    R = block[lab[:, None], lab[None, :]]
    np.fill_diagonal(R, 1.0)
    lam = np.linalg.eigvalsh(R)[0]
    if lam < EIG_TOL:
        raise ValueError(f"block correlation is not PSD (min eigenvalue {lam:.3g})")
    return R


def market_share(target_R, asset_sds, betas, market_var) -> float:
    """Largest fraction of any portfolio's target variance explained by the market term."""
    D = np.asarray(asset_sds, dtype=float)
    S = D[:, None] * np.asarray(target_R, dtype=float) * D[None, :]
    b = np.asarray(betas, dtype=float)
    return float(market_var * b @ np.linalg.solve(S, b))


def calibrate_residual_cov(target_R, asset_sds, betas, market_var) -> np.ndarray:
    """``D R D - market_var * beta beta'``, checked to be PSD."""
    R = validate_correlation(target_R)
    D = np.asarray(asset_sds, dtype=float)
    b = np.asarray(betas, dtype=float)
    if np.any(D <= 0):
        raise ValueError("asset standard deviations must be positive")
    S = D[:, None] * R * D[None, :] - market_var * np.outer(b, b)
    lam = np.linalg.eigvalsh(S)[0]
    if lam < EIG_TOL:
        raise CalibrationError(f"residual covariance is not PSD: eigenvalue {lam:.6g}")
    return S


def _inflated_residual_cov(R, sds, betas, market_var):
    kappa = market_share(R, sds, betas, market_var)
    s2 = max(1.0, kappa / (1.0 - MAX_MARKET_SHARE))
    sds = sds * np.sqrt(s2)
    return calibrate_residual_cov(R, sds, betas, market_var), float(np.sqrt(s2))


def _scaled(s: float, T: int) -> int:
    return int(round(s * T / REFERENCE_T))


def _groups(N: int) -> list[np.ndarray]:
    return np.array_split(np.arange(N), 3)


@dataclass
class ScenarioData:
    """Simulated panel and exact truth. ``breaks`` are 1-based last pre-break times."""

    panel: ReturnPanel
    truth_corr: np.ndarray
    truth_score: np.ndarray
    breaks: tuple
    scenario_id: int
    seed: int
    regime: np.ndarray
    params: dict = field(default_factory=dict)

    def export(self, out_dir) -> None:
        """Panel CSV, truth CSV ``(t, score, regime)`` and a JSON parameter manifest."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_panel_csv(self.panel, out / "panel.csv")
        with (out / "truth.csv").open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "score", "regime"])
            for d, s, g in zip(self.panel.dates, self.truth_score, self.regime):
                w.writerow([d, repr(float(s)), int(g)])
        manifest = {"scenario": self.scenario_id, "seed": self.seed, "breaks": list(self.breaks),
                    "T": self.panel.T, "N": self.panel.N, "params": self.params}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")


def _common_draws(rng, N):
    alpha = rng.normal(0.0, 0.03, N)
    beta = rng.uniform(0.7, 1.4, N)
    return alpha, beta


def _regime_labels(T, breaks):
    lab = np.zeros(T, dtype=np.int64)
    for b in breaks:
        lab[b:] += 1
    return lab


def _scenario1_targets(N):
    g = _groups(N)
    block = build_block_corr([len(x) for x in g], 0.65, 0.35)
    return [build_equicorr(N, 0.10), build_equicorr(N, 0.70), build_equicorr(N, 0.25), block]


def _finish(sid, seed, rng_used, y, rm, truth_corr, breaks, regime, params):
    T, N = y.shape
    dates = [f"{t:05d}" for t in range(1, T + 1)]
    assets = [f"A{a + 1:02d}" for a in range(N)]
    panel = ReturnPanel(dates, assets, y, rm, np.zeros(T))
    return ScenarioData(panel, truth_corr, score_batch(truth_corr), tuple(int(b) for b in breaks), sid, seed,
                        regime, params)


def _regime_switching(sid, seed, rng, N, T, breaks, targets, sd_mult, mkt_sd):
    alpha, beta = _common_draws(rng, N)
    sig = rng.uniform(1.20, 2.00, N)
    regime = _regime_labels(T, breaks)
    resid = []
    inflation = []
    for j, R in enumerate(targets):
        S, s = _inflated_residual_cov(R, sig * sd_mult[j], beta, mkt_sd[j] ** 2)
        resid.append(S)
        inflation.append(s)
    chol = [np.linalg.cholesky(S + 1e-12 * np.eye(N)) for S in resid]
    rm = rng.standard_normal(T) * np.asarray(mkt_sd)[regime]
    z = rng.standard_normal((T, N))
    eps = np.empty((T, N))
    for j in range(len(targets)):
        sel = regime == j
        eps[sel] = z[sel] @ chol[j].T
    y = alpha + beta * rm[:, None] + eps
    truth = np.stack([targets[j] for j in regime])
    params = {"alpha": alpha.tolist(), "beta": beta.tolist(), "sigma": sig.tolist(),
              "market_sd": list(mkt_sd), "sd_multiplier": list(sd_mult), "inflation": inflation}
    return _finish(sid, seed, rng, y, rm, truth, breaks, regime, params)


def _scenario1(seed, rng, N, T):
    breaks = [_scaled(s, T) for s in (250, 500, 750)]
    return _regime_switching(1, seed, rng, N, T, breaks, _scenario1_targets(N),
                             (1.0, 1.35, 1.10, 1.25), (0.80, 2.20, 1.10, 1.60))


def _scenario2(seed, rng, N, T):
    g = _groups(N)
    sizes = [len(x) for x in g]
    calm = build_block_corr(sizes, 0.20, 0.0)
    between = np.full((3, 3), 0.05)
    between[0, 1] = between[1, 0] = 0.35
    crisis = build_block_corr(sizes, 0.75, between)
    windows = [(250, 350), (600, 700), (850, 925)]
    breaks = [_scaled(s, T) for w in windows for s in w]
    # regime index alternates calm (even) / crisis (odd)
    targets = [calm if j % 2 == 0 else crisis for j in range(len(breaks) + 1)]
    sd_mult = [1.0 if j % 2 == 0 else 1.25 for j in range(len(breaks) + 1)]
    mkt = [0.80 if j % 2 == 0 else 2.20 for j in range(len(breaks) + 1)]
    data = _regime_switching(2, seed, rng, N, T, breaks, targets, sd_mult, mkt)
    data.regime = data.regime % 2
    return data


def _scenario3(seed, rng, N, T):
    alpha, beta = _common_draws(rng, N)
    g = _groups(N)
    member = np.zeros((3, N), dtype=bool)
    for j, idx in enumerate(g):
        member[j, idx] = True

    def tn(mean):
        return np.maximum(0.0, rng.normal(mean, 0.08, N))

    gamma = (member[0] | member[1]) * tn(0.75)
    delta = member[0] * tn(0.90)
    eta = member[1] * tn(0.80)
    theta = member[2] * tn(0.80)
    kappa = tn(0.65)
    sig_e = rng.uniform(0.70, 1.20, N)
    breaks = [_scaled(300, T), _scaled(700, T)]
    regime = _regime_labels(T, breaks)
    L = np.column_stack([beta, gamma, delta, eta, theta, kappa])
    fsd = np.array([[0.80, 0, 0, 0, 0, 0],
                    [2.00, 1.10, 0.95, 0.85, 0.80, 0.75],
                    [1.20, 0.65, 0, 0, 0, 0]])
    load_scale = np.array([[1, 1, 1, 1, 1, 1], [1, 1, 1, 1, 1, 1], [1, 0.7, 1, 1, 1, 1]], dtype=float)
    c = np.array([1.0, 1.35, 1.10])
    covs = []
    for j in range(3):
        Lj = L * load_scale[j]
        covs.append((Lj * fsd[j] ** 2) @ Lj.T + np.diag((c[j] * sig_e) ** 2))
    zf = rng.standard_normal((T, 6)) * fsd[regime]
    e = rng.standard_normal((T, N)) * (c[regime][:, None] * sig_e)
    loads = L[None, :, :] * load_scale[regime][:, None, :]
    y = alpha + np.einsum("tnk,tk->tn", loads, zf) + e
    rm = zf[:, 0]
    truth = np.stack([cov_to_corr(covs[j]) for j in regime])
    params = {"alpha": alpha.tolist(), "beta": beta.tolist(), "gamma": gamma.tolist(), "delta": delta.tolist(),
              "eta": eta.tolist(), "theta": theta.tolist(), "kappa": kappa.tolist(), "sigma_e": sig_e.tolist()}
    return _finish(3, seed, rng, y, rm, truth, breaks, regime, params)


def dcc_joint_target(N: int, market_asset: float = 0.35, asset_asset: float = 0.15) -> np.ndarray:
    """(N+1) x (N+1) long-run correlation, market first."""
    R = np.full((N + 1, N + 1), asset_asset)
    R[0, :] = R[:, 0] = market_asset
    np.fill_diagonal(R, 1.0)
    return R


def simulate_dcc(Qbar: np.ndarray, a: float, b: float, T: int, rng: np.random.Generator,
                 df: float | None = 8.0, burn: int = 300) -> tuple[np.ndarray, np.ndarray]:
    """Unit-variance innovations ``z_t`` and their correlations ``R_t`` from DCC(1,1).

    ``df=None`` gives Gaussian innovations; otherwise standardized multivariate
    Student-t (Gaussian scaled by an inverse chi-square mixing variable).
    """
    K = Qbar.shape[0]
    n = T + burn
    Q = Qbar.copy()
    C = (1.0 - a - b) * Qbar
    zs = np.empty((n, K))
    Rs = np.empty((n, K, K))
    g = rng.standard_normal((n, K))
    w = rng.chisquare(df, n) if df is not None else None
    for t in range(n):
        if t > 0:
            zp = zs[t - 1]
            Q = C + a * np.outer(zp, zp) + b * Q
        d = np.sqrt(np.diag(Q))
        R = Q / np.outer(d, d)
        np.fill_diagonal(R, 1.0)
        Rs[t] = R
        x = np.linalg.cholesky(R) @ g[t]
        if df is not None:
            x *= np.sqrt((df - 2.0) / w[t])
        zs[t] = x
    return zs[burn:], Rs[burn:]


def _scenario4(seed, rng, N, T):
    alpha = rng.normal(0.0, 0.03, N)
    sds = np.concatenate([[1.20], rng.uniform(0.80, 1.40, N)])
    z, R = simulate_dcc(dcc_joint_target(N), 0.03, 0.95, T, rng, df=8.0, burn=300)
    w = np.concatenate([[0.0], alpha]) + z * sds
    truth = R[:, 1:, 1:].copy()
    params = {"alpha": alpha.tolist(), "sds": sds.tolist(), "a": 0.03, "b": 0.95, "df": 8, "burn": 300}
    return _finish(4, seed, rng, w[:, 1:], w[:, 0], truth, [], np.zeros(T, dtype=np.int64), params)


def _scenario5(seed, rng, N, T):
    alpha_bar, beta_bar = _common_draws(rng, N)
    sig = rng.uniform(1.20, 2.00, N)
    breaks = [_scaled(s, T) for s in (250, 500, 750)]
    regime = _regime_labels(T, breaks)
    targets = _scenario1_targets(N)
    sd_mult = (1.0, 1.35, 1.10, 1.25)
    mkt_sd = np.array([0.80, 2.20, 1.10, 1.60])
    resid = [_inflated_residual_cov(R, sig * sd_mult[j], beta_bar, mkt_sd[j] ** 2)[0]
             for j, R in enumerate(targets)]
    chol = [np.linalg.cholesky(S + 1e-12 * np.eye(N)) for S in resid]
    mult = np.array([1.0, 3.0, 1.2, 1.8])[regime]
    phi = 0.995
    alpha = np.empty((T, N))
    beta = np.empty((T, N))
    alpha[0], beta[0] = alpha_bar, beta_bar
    ea = rng.standard_normal((T, N))
    eb = rng.standard_normal((T, N))
    for t in range(1, T):
        alpha[t] = alpha_bar + phi * (alpha[t - 1] - alpha_bar) + 0.004 * mult[t] * ea[t]
        beta[t] = beta_bar + phi * (beta[t - 1] - beta_bar) + 0.012 * mult[t] * eb[t]
    level = np.log(mkt_sd**2)[regime]
    hm = np.empty(T)
    hm[0] = level[0]
    eh = rng.standard_normal(T)
    for t in range(1, T):
        hm[t] = level[t] + 0.98 * (hm[t - 1] - level[t - 1]) + 0.1 * eh[t]
    v = np.exp(hm)
    rm = np.sqrt(v) * rng.standard_normal(T)
    z = rng.standard_normal((T, N))
    eps = np.empty((T, N))
    for j in range(4):
        sel = regime == j
        eps[sel] = z[sel] @ chol[j].T
    y = alpha + beta * rm[:, None] + eps
    cov = v[:, None, None] * beta[:, :, None] * beta[:, None, :] + np.stack(resid)[regime]
    truth = cov_to_corr(cov)
    params = {"alpha_bar": alpha_bar.tolist(), "beta_bar": beta_bar.tolist(), "sigma": sig.tolist(),
              "phi": phi, "market_log_var_phi": 0.98, "market_log_var_sd": 0.1}
    return _finish(5, seed, rng, y, rm, truth, breaks, regime, params)


_GENERATORS = {1: _scenario1, 2: _scenario2, 3: _scenario3, 4: _scenario4, 5: _scenario5}


def generate(scenario_id: int, seed: int, N: int = 30, T: int = 1000) -> ScenarioData:
    """Simulate one design; identical ``(scenario_id, seed, N, T)`` give identical data."""
    if scenario_id not in _GENERATORS:
        raise ValueError(f"scenario_id must be one of 1..5, got {scenario_id}")
    if N < 3 or T < 20:
        raise ValueError("need N >= 3 and T >= 20")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(scenario_id)]))
    return _GENERATORS[scenario_id](int(seed), rng, int(N), int(T))
