"""Time-varying CAPM with dynamic shrinkage coefficients and factor-SV errors.

Observation model for asset ``a`` at time ``t``::

    r_{a,t} = alpha_{a,t} + beta_{a,t} r_{M,t} + e_{a,t},     r_{M,t} = exp(h_{M,t} / 2) eps_t
    e_t = Lambda f_t + u_t                                       (see :mod:`dspcorr.mfsv`)
    alpha_{a,t+1} = alpha_{a,t} + omega,  omega ~ N(0, exp(h_alpha))   (see :mod:`dspcorr.dsp`)
    beta_{a,t+1}  = beta_{a,t}  + omega,  omega ~ N(0, exp(h_beta))

The conditional covariance of ``r_t`` given one posterior draw is::

    Sigma_t = exp(h_{M,t}) beta_t beta_t' + Lambda diag(exp(h_tilde_t)) Lambda' + diag(exp(h_bar_t))

and the per-draw score path is ``score(cov_to_corr(Sigma_t))``.

A Gibbs sweep updates, in order: coefficient paths, DSP channels, factors,
loadings, loading shrinkage, factor SV, idiosyncratic SV, market SV. Each of
the eight blocks draws from its own generator, seeded from
``SeedSequence(seed, spawn_key=(sweep, block))``.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from dspcorr import dsp, kernels, mfsv, sv
from dspcorr.panel import ReturnPanel
from dspcorr.score import cov_to_corr, score_batch
from dspcorr.sv import SvParams, SvPath, SvPrior

N_BLOCKS = 8
DRAWS_MAGIC = b"DSPCDRAW"
DRAWS_VERSION = 1


class SamplerError(ValueError):
    """The chain produced a non-finite or otherwise invalid state."""


@dataclass(frozen=True)
class Hyperparameters:
    """Prior constants.

    ``coef_init_var`` is the variance of the ``N(0, v)`` prior on the first
    intercept and slope of every asset.
    """

    market: SvPrior = field(default_factory=lambda: SvPrior(mu_var=100.0, phi_a=10.0, phi_b=3.0))
    factor: mfsv.MfsvPrior = field(default_factory=mfsv.MfsvPrior)
    coef_init_var: float = 10.0

    def __post_init__(self):
        if not self.coef_init_var > 0:
            raise ValueError("coef_init_var must be positive")


@dataclass(frozen=True)
class ModelConfig:
    """Chain settings. ``rescale`` divides all returns by the market sd before sampling."""

    r: int = 3
    n_burn: int = 1500
    n_retain: int = 3000
    thin: int = 4
    seed: int = 0
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    rescale: bool = True

    def __post_init__(self):
        if self.r < 1 or self.n_retain < 1 or self.thin < 1 or self.n_burn < 0:
            raise ValueError("r, n_retain and thin must be positive and n_burn non-negative")

    @property
    def n_sweeps(self) -> int:
        return self.n_burn + self.n_retain * self.thin

    def retained_sweeps(self) -> list[int]:
        """1-based sweep numbers whose states are stored."""
        return [self.n_burn + k * self.thin for k in range(1, self.n_retain + 1)]


@dataclass
class ModelState:
    """All latent quantities after one sweep.

    ``alpha`` and ``beta`` are (T, N). ``channels`` holds the 2N DSP channels,
    intercept channels first, grouped by asset.
    """

    alpha: np.ndarray
    beta: np.ndarray
    channels: dsp.DspChannels
    market_params: SvParams
    market_path: SvPath
    factor: mfsv.FactorState

    @property
    def T(self) -> int:
        return self.alpha.shape[0]

    @property
    def N(self) -> int:
        return self.alpha.shape[1]

    @property
    def alpha_channels(self) -> dsp.DspChannels:
        return _subset_channels(self.channels, slice(0, self.N))

    @property
    def beta_channels(self) -> dsp.DspChannels:
        return _subset_channels(self.channels, slice(self.N, 2 * self.N))

    @property
    def h_market(self) -> np.ndarray:
        return self.market_path.h[0]

    def copy(self) -> "ModelState":
        return ModelState(self.alpha.copy(), self.beta.copy(), self.channels.copy(),
                          self.market_params.copy(), self.market_path.copy(), self.factor.copy())

    def check(self) -> None:
        if not (np.all(np.isfinite(self.alpha)) and np.all(np.isfinite(self.beta))):
            raise SamplerError("coefficient paths are not finite")
        if not np.all(np.isfinite(self.market_path.h)):
            raise SamplerError("market log-variance path is not finite")
        try:
            self.channels.check()
            self.factor.check()
        except ValueError as exc:
            raise SamplerError(str(exc)) from exc


def _subset_channels(ch: dsp.DspChannels, sl: slice) -> dsp.DspChannels:
    return dsp.DspChannels(ch.h[sl], ch.phi[sl], ch.log_tau2[sl], ch.log_tau0_2, ch.group[sl], ch.xi[sl],
                           ch.xi_tau[sl], ch.xi_tau0, ch.mix[sl], ch.T)


def site_rng(seed: int, sweep: int, site: int) -> np.random.Generator:
    """Generator for one update site of one sweep; independent of execution order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(sweep, site)))


# --------------------------------------------------------------------------- coefficient paths

def coefficient_conditional(y: np.ndarray, rm: np.ndarray, state: ModelState, z: np.ndarray,
                            coef_init_var: float = 10.0) -> np.ndarray:
    """Joint (intercept, slope) path draw per asset as an affine map of ``z`` (N, T, 2).

    Observations are ``y_{a,t} - Lambda_a f_t`` with design ``(1, r_{M,t})``
    and variance ``exp(h_bar_{a,t})``; states follow random walks with
    variances ``exp(h_alpha)``, ``exp(h_beta)``. ``z = 0`` gives the mean.
    """
    N, T = state.N, state.T
    fac = state.factor
    target = np.ascontiguousarray((y - fac.f @ fac.lam.T).T)
    obs_var = np.ascontiguousarray(np.exp(fac.h_bar.T))
    q = np.empty((N, 2, T - 1))
    q[:, 0, :] = np.exp(state.channels.h[:N])
    q[:, 1, :] = np.exp(state.channels.h[N:])
    m0 = np.zeros(2)
    p0 = np.full(2, coef_init_var)
    return kernels.ffbs_random_walk2(target, np.ascontiguousarray(rm, dtype=float), obs_var, q, m0, p0,
                                     np.ascontiguousarray(z, dtype=float))


def sample_coefficient_paths(y: np.ndarray, rm: np.ndarray, state: ModelState, rng: np.random.Generator,
                             coef_init_var: float = 10.0) -> ModelState:
    """Exact simulation-smoother draw of all intercept and slope paths."""
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(rm))):
        raise ValueError("non-finite returns passed to the coefficient sampler")
    draw = coefficient_conditional(y, rm, state, rng.standard_normal((state.N, state.T, 2)), coef_init_var)
    new = state.copy()
    new.alpha = draw[:, :, 0].T.copy()
    new.beta = draw[:, :, 1].T.copy()
    return new


def residuals(y: np.ndarray, rm: np.ndarray, state: ModelState) -> np.ndarray:
    """``r_t - alpha_t - beta_t r_{M,t}`` (T, N)."""
    return y - state.alpha - state.beta * rm[:, None]


def coefficient_increments(state: ModelState) -> np.ndarray:
    """Increments of intercept then slope paths, (2N, T-1), in channel order."""
    return np.concatenate([np.diff(state.alpha, axis=0).T, np.diff(state.beta, axis=0).T])


# --------------------------------------------------------------------------- sweep

def gibbs_sweep(y: np.ndarray, rm: np.ndarray, state: ModelState, hyper: Hyperparameters,
                seed: int, sweep: int) -> ModelState:
    """One full sweep in the fixed block order; block ``j`` uses ``site_rng(seed, sweep, j)``."""
    rngs = [site_rng(seed, sweep, j) for j in range(N_BLOCKS)]
    state = sample_coefficient_paths(y, rm, state, rngs[0], hyper.coef_init_var)
    state.channels = dsp.update_channels(state.channels, coefficient_increments(state), rngs[1])
    E = residuals(y, rm, state)
    state.factor = mfsv.update_block(E, state.factor, hyper.factor, rngs[2:7])
    state.market_params, state.market_path = sv.update_sv(rm[None, :], state.market_params,
                                                          state.market_path, hyper.market, rngs[7])
    return state


def init_state(y: np.ndarray, rm: np.ndarray, r: int, rng: np.random.Generator) -> ModelState:
    """Reproducible starting point.

    Intercepts 0 and slopes 1; DSP log variances at ``log(1e-4 var)`` of the
    relevant scale (residual variance for intercepts, 1 for slopes); factor
    block from residuals ``y - r_M``; market log variance flat at the log of
    the sample variance; persistence parameters at their prior means.
    """
    T, N = y.shape
    if T < 3:
        raise ValueError("need at least three time points")
    alpha = np.zeros((T, N))
    beta = np.ones((T, N))
    E = y - rm[:, None]
    res_var = np.maximum(E.var(axis=0), 1e-8)
    h0 = np.concatenate([np.log(1e-4 * res_var), np.full(N, np.log(1e-4))])
    channels = dsp.init_channels(2 * N, T - 1, np.tile(np.arange(N), 2), T, h0=h0)
    factor = mfsv.init_factor_state(E, r, rng)
    hm = math.log(max(float(rm.var()), 1e-8))
    phi_m = 2.0 * 10.0 / 13.0 - 1.0
    mp = SvParams(np.array([hm]), np.array([phi_m]), np.array([0.1]))
    mpath = SvPath(np.full((1, T), hm), np.full((1, T), 4))
    factor.fac_params.phi[:] = phi_m
    factor.idio_params.phi[:] = phi_m
    return ModelState(alpha, beta, channels, mp, mpath, factor)


# --------------------------------------------------------------------------- prior simulation

def simulate_prior(T: int, N: int, r: int, hyper: Hyperparameters, rng: np.random.Generator) -> ModelState:
    """Exact forward draw of every latent quantity (and augmentation variable) from the prior."""
    channels = dsp.simulate_prior(2 * N, T - 1, np.tile(np.arange(N), 2), T, rng)
    omega = dsp.simulate_innovations(channels, rng)
    sd0 = math.sqrt(hyper.coef_init_var)
    start = sd0 * rng.standard_normal((2, N))
    alpha = np.vstack([start[0], start[0] + np.cumsum(omega[:N].T, axis=0)])
    beta = np.vstack([start[1], start[1] + np.cumsum(omega[N:].T, axis=0)])

    def sv_prior_draw(k, prior):
        mu = prior.mu_mean + math.sqrt(prior.mu_var) * rng.standard_normal(k)
        phi = 2.0 * rng.beta(prior.phi_a, prior.phi_b, k) - 1.0
        s2 = rng.gamma(prior.s_shape, 1.0 / prior.s_rate, k)
        p = SvParams(mu, phi, np.maximum(s2, 1e-300))
        return p, SvPath(sv.simulate_sv(p, T, rng), np.full((k, T), 4))

    mp, mpath = sv_prior_draw(1, hyper.market)
    fp, fpath = sv_prior_draw(r, hyper.factor.sv)
    ip, ipath = sv_prior_draw(N, hyper.factor.sv)
    lam2, tau2, lam = mfsv.simulate_shrinkage_prior(N, r, hyper.factor, rng)
    f = np.exp(0.5 * fpath.h.T) * rng.standard_normal((T, r))
    factor = mfsv.FactorState(lam, f, tau2, lam2, fp, fpath, ip, ipath)
    return ModelState(alpha, beta, channels, mp, mpath, factor)


def simulate_data(state: ModelState, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Returns ``(y, r_M)`` drawn from the likelihood given all latent quantities."""
    T, N = state.T, state.N
    rm = np.exp(0.5 * state.h_market) * rng.standard_normal(T)
    fac = state.factor
    u = np.exp(0.5 * fac.h_bar) * rng.standard_normal((T, N))
    y = state.alpha + state.beta * rm[:, None] + fac.f @ fac.lam.T + u
    return y, rm


# --------------------------------------------------------------------------- covariance and score

def covariance_paths(beta: np.ndarray, h_market: np.ndarray, lam: np.ndarray, h_factor: np.ndarray,
                     h_idio: np.ndarray) -> np.ndarray:
    """(T, N, N) conditional covariances from one draw's stored quantities."""
    S = np.exp(h_market)[:, None, None] * beta[:, :, None] * beta[:, None, :]
    S += np.einsum("ik,tk,jk->tij", lam, np.exp(h_factor), lam)
    idx = np.arange(beta.shape[1])
    S[:, idx, idx] += np.maximum(np.exp(h_idio), mfsv.IDIO_VAR_FLOOR)
    return S


def covariance_path(state: ModelState, t: int) -> np.ndarray:
    """``Sigma_t`` for one state at 0-based time ``t``."""
    if not 0 <= t < state.T:
        raise ValueError(f"time index {t} outside [0, {state.T})")
    b = state.beta[t]
    return math.exp(state.h_market[t]) * np.outer(b, b) + mfsv.assemble_residual_cov(state.factor, t)


def hdi(x: np.ndarray, level: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
    """Shortest window over sorted draws (axis 0) holding ``ceil(level * n)`` of them."""
    if not 0.0 < level <= 1.0:
        raise ValueError("level must lie in (0, 1]")
    s = np.sort(np.asarray(x, dtype=float), axis=0)
    n = s.shape[0]
    if n == 0:
        raise ValueError("no draws")
    m = min(n, max(1, math.ceil(level * n - 1e-9)))
    width = s[m - 1:] - s[: n - m + 1]
    j = np.argmin(width, axis=0)
    lo = np.take_along_axis(s, j[None], axis=0)[0]
    hi = np.take_along_axis(s, (j + m - 1)[None], axis=0)[0]
    return lo, hi


@dataclass(frozen=True)
class ScorePathSummary:
    """Posterior mean score path with 95% HDI bounds, each of length T."""

    mean: np.ndarray
    hdi_lo: np.ndarray
    hdi_hi: np.ndarray

    def to_csv(self, path, dates=None) -> None:
        dates = range(1, len(self.mean) + 1) if dates is None else dates
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            fh.write("t,mean,lo,hi\n")
            for d, m, lo, hi in zip(dates, self.mean, self.hdi_lo, self.hdi_hi):
                fh.write(f"{d},{float(m)!r},{float(lo)!r},{float(hi)!r}\n")


def summarize_scores(scores: np.ndarray, level: float = 0.95) -> ScorePathSummary:
    """Summary of a (draws, T) array of per-draw score paths."""
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2 or scores.shape[0] == 0:
        raise ValueError("expected a non-empty (draws, T) score array")
    lo, hi = hdi(scores, level)
    return ScorePathSummary(scores.mean(axis=0), lo, hi)


_DRAW_FIELDS = ("alpha", "beta", "h_market", "loadings", "h_factor", "h_idio")


@dataclass
class PosteriorDraws:
    """Retained draws of the quantities that determine ``Sigma_t``.

    Arrays: ``alpha``, ``beta`` (D, T, N); ``h_market`` (D, T); ``loadings``
    (D, N, r); ``h_factor`` (D, T, r); ``h_idio`` (D, T, N). All in the units
    of the input panel.
    """

    alpha: np.ndarray
    beta: np.ndarray
    h_market: np.ndarray
    loadings: np.ndarray
    h_factor: np.ndarray
    h_idio: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        D, T, N = self.alpha.shape
        r = self.loadings.shape[2]
        shapes = {"alpha": (D, T, N), "beta": (D, T, N), "h_market": (D, T), "loadings": (D, N, r),
                  "h_factor": (D, T, r), "h_idio": (D, T, N)}
        for name, shp in shapes.items():
            arr = getattr(self, name)
            if arr.shape != shp:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shp}")
            arr.setflags(write=False)

    @property
    def n_draws(self) -> int:
        return self.alpha.shape[0]

    @property
    def dims(self) -> tuple[int, int, int, int]:
        D, T, N = self.alpha.shape
        return D, T, N, self.loadings.shape[2]

    def covariance(self, d: int) -> np.ndarray:
        return covariance_paths(self.beta[d], self.h_market[d], self.loadings[d], self.h_factor[d],
                                self.h_idio[d])

    def correlation(self, d: int) -> np.ndarray:
        return cov_to_corr(self.covariance(d))

    def score_paths(self) -> np.ndarray:
        """(D, T) per-draw score paths."""
        return np.stack([score_batch(self.correlation(d)) for d in range(self.n_draws)])

    def summary(self, level: float = 0.95) -> ScorePathSummary:
        return summarize_scores(self.score_paths(), level)

    def save(self, path, include_timing: bool = False) -> None:
        """Binary layout: 8-byte magic, int64 version, int64 dims (D, T, N, r),
        then each array as little-endian float64 in C order, in the order
        alpha, beta, h_market, loadings, h_factor, h_idio. Metadata goes to
        ``<path>.json``; wall time is left out unless ``include_timing`` so
        that identical runs produce identical files."""
        path = Path(path)
        with path.open("wb") as fh:
            fh.write(DRAWS_MAGIC)
            fh.write(np.array([DRAWS_VERSION, *self.dims], dtype="<i8").tobytes())
            for name in _DRAW_FIELDS:
                fh.write(np.ascontiguousarray(getattr(self, name), dtype="<f8").tobytes())
        meta = dict(self.meta)
        if not include_timing:
            meta.pop("wall_seconds", None)
        meta.update({"dims": dict(zip(("draws", "T", "N", "r"), self.dims)), "layout": list(_DRAW_FIELDS)})
        Path(str(path) + ".json").write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "PosteriorDraws":
        path = Path(path)
        raw = path.read_bytes()
        if raw[:8] != DRAWS_MAGIC:
            raise ValueError(f"{path}: not a draws file")
        version, D, T, N, r = np.frombuffer(raw[8:48], dtype="<i8")
        if version != DRAWS_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        shapes = [(D, T, N), (D, T, N), (D, T), (D, N, r), (D, T, r), (D, T, N)]
        arrays = []
        off = 48
        for shp in shapes:
            n = int(np.prod(shp))
            arrays.append(np.frombuffer(raw, dtype="<f8", count=n, offset=off).reshape(shp).copy())
            off += 8 * n
        if off != len(raw):
            raise ValueError(f"{path}: trailing or missing bytes")
        meta_path = Path(str(path) + ".json")
        meta = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.exists() else {}
        return cls(*arrays, meta=meta)


# --------------------------------------------------------------------------- fit

def _snapshot(state: ModelState, scale: float):
    log_s2 = 2.0 * math.log(scale)
    fac = state.factor
    return (state.alpha * scale, state.beta.copy(), state.h_market + log_s2, fac.lam * scale,
            fac.h_tilde.copy(), fac.h_bar + log_s2)


def fit(panel: ReturnPanel, config: ModelConfig = ModelConfig(), progress=None) -> PosteriorDraws:
    """Run the chain and keep every ``thin``-th state after burn-in.

    Parameters
    ----------
    panel : ReturnPanel
    config : ModelConfig
    progress : callable, optional
        Called as ``progress(sweep, n_sweeps)`` after each sweep.
    """
    y = panel.excess
    rm = panel.market
    scale = float(rm.std()) if config.rescale else 1.0
    if not scale > 0:
        raise ValueError("market series has zero variance")
    y = y / scale
    rm = rm / scale
    init_rng = site_rng(config.seed, 0, N_BLOCKS)
    state = init_state(y, rm, config.r, init_rng)
    keep = set(config.retained_sweeps())
    stores = [[] for _ in _DRAW_FIELDS]
    t0 = time.perf_counter()
    for s in range(1, config.n_sweeps + 1):
        try:
            state = gibbs_sweep(y, rm, state, config.hyper, config.seed, s)
            state.check()
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SamplerError(f"sweep {s}: {exc}") from exc
        if s in keep:
            for store, arr in zip(stores, _snapshot(state, scale)):
                store.append(arr)
        if progress is not None:
            progress(s, config.n_sweeps)
    elapsed = time.perf_counter() - t0
    cfg = asdict(config)
    meta = {"config": cfg, "wall_seconds": elapsed, "scale": scale, "assets": list(panel.assets),
            "dates": [panel.dates[0], panel.dates[-1]], "backend": kernels.BACKEND}
    return PosteriorDraws(*(np.stack(s) for s in stores), meta=meta)
