"""Multivariate factor stochastic volatility block.

Residual vector model::

    e_t = Lambda f_t + u_t,   u_t ~ N(0, diag(exp(h_bar_t))),   f_t ~ N(0, diag(exp(h_tilde_t)))
    Lambda_ij | tau2_ij ~ N(0, tau2_ij),  tau2_ij | lam2_i ~ Ga(a, rate a lam2_i / 2),  lam2_i ~ Ga(c, rate d)

with univariate Gaussian-AR(1) SV for every column of ``h_bar`` and
``h_tilde``. Loadings are left unidentified: covariances, correlations and
scores are invariant under ``Lambda -> Lambda Q``, ``f_t -> Q' f_t`` for
orthogonal ``Q`` whenever the factor variances are equal, and the sampler
never reports rotation-dependent quantities.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from dspcorr import sv
from dspcorr.sv import SvParams, SvPath, SvPrior

IDIO_VAR_FLOOR = 1e-10


@dataclass(frozen=True)
class MfsvPrior:
    """Prior constants for the factor block (``a``: loading-shrinkage shape)."""

    a: float = 0.1
    lam2_shape: float = 1.0
    lam2_rate: float = 1.0
    sv: SvPrior = field(default_factory=lambda: SvPrior(mu_var=10.0, phi_a=10.0, phi_b=3.0))

    def __post_init__(self):
        if min(self.a, self.lam2_shape, self.lam2_rate) <= 0:
            raise ValueError("shrinkage prior constants must be positive")


@dataclass
class FactorState:
    """Latent quantities of the factor block.

    ``lam`` (N, r), ``f`` (T, r), ``tau2`` (N, r), ``lam2`` (N,). SV paths are
    stored process-major: ``fac_path.h`` is (r, T) and ``idio_path.h`` is
    (N, T); :attr:`h_tilde` and :attr:`h_bar` give the time-major views.
    """

    lam: np.ndarray
    f: np.ndarray
    tau2: np.ndarray
    lam2: np.ndarray
    fac_params: SvParams
    fac_path: SvPath
    idio_params: SvParams
    idio_path: SvPath

    @property
    def N(self) -> int:
        return self.lam.shape[0]

    @property
    def r(self) -> int:
        return self.lam.shape[1]

    @property
    def T(self) -> int:
        return self.f.shape[0]

    @property
    def h_tilde(self) -> np.ndarray:
        return self.fac_path.h.T

    @property
    def h_bar(self) -> np.ndarray:
        return self.idio_path.h.T

    def copy(self) -> "FactorState":
        return FactorState(self.lam.copy(), self.f.copy(), self.tau2.copy(), self.lam2.copy(),
                           self.fac_params.copy(), self.fac_path.copy(),
                           self.idio_params.copy(), self.idio_path.copy())

    def check(self) -> None:
        if np.any(~(self.tau2 > 0.0)) or np.any(~(self.lam2 > 0.0)):
            raise ValueError("shrinkage variances must be positive")
        for a in (self.lam, self.f, self.fac_path.h, self.idio_path.h):
            if not np.all(np.isfinite(a)):
                raise ValueError("factor block has non-finite entries")


def init_factor_state(E: np.ndarray, r: int, rng: np.random.Generator) -> FactorState:
    """Starting values from residuals ``E`` (T, N).

    Log variances start at the log of each column's sample variance (factor
    variances at zero), loadings at small-noise draws, factors at zero.
    """
    T, N = E.shape
    var = np.maximum(E.var(axis=0), 1e-8)
    hb = np.log(var)
    idio_params = SvParams(hb.copy(), np.full(N, 0.9), np.full(N, 0.1))
    idio_path = SvPath(np.repeat(hb[:, None], T, axis=1), np.full((N, T), 4))
    fac_params = SvParams(np.zeros(r), np.full(r, 0.9), np.full(r, 0.1))
    fac_path = SvPath(np.zeros((r, T)), np.full((r, T), 4))
    lam = 0.01 * np.sqrt(var)[:, None] * rng.standard_normal((N, r))
    return FactorState(lam=lam, f=np.zeros((T, r)), tau2=np.ones((N, r)), lam2=np.ones(N),
                       fac_params=fac_params, fac_path=fac_path,
                       idio_params=idio_params, idio_path=idio_path)


def _batched_gaussian(prec: np.ndarray, lin: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Draws ``P^{-1} lin + L^{-T} z`` for a stack of precisions ``P = L L'``."""
    L = np.linalg.cholesky(prec)
    v = np.linalg.solve(L, lin[..., None])
    # L' x = v + z  (solve with the transposed factor)
    return np.linalg.solve(np.swapaxes(L, -1, -2), v + z[..., None])[..., 0]


def factor_conditional(E: np.ndarray, state: FactorState, z: np.ndarray) -> np.ndarray:
    """Factor draws as an affine map of standard normals ``z`` (T, r)."""
    lam = state.lam
    w = np.exp(-state.h_bar)                      # (T, N)
    prec = np.einsum("ni,tn,nj->tij", lam, w, lam)
    idx = np.arange(state.r)
    prec[:, idx, idx] += np.exp(-state.h_tilde)
    lin = (w * E) @ lam
    return _batched_gaussian(prec, lin, z)


def sample_factors(E: np.ndarray, state: FactorState, rng: np.random.Generator) -> FactorState:
    """Per-t exact draw of ``f_t`` given residuals ``E`` (T, N), loadings and volatilities."""
    new = state.copy()
    new.f = factor_conditional(E, state, rng.standard_normal((state.T, state.r)))
    return new


def loading_conditional(E: np.ndarray | None, state: FactorState, z: np.ndarray) -> np.ndarray:
    """Row-wise loading draws as an affine map of ``z`` (N, r); ``E=None`` is prior-only."""
    N, r = state.N, state.r
    prec = np.zeros((N, r, r))
    lin = np.zeros((N, r))
    if E is not None:
        w = np.exp(-state.h_bar)                  # (T, N)
        f = state.f
        prec = np.einsum("ti,tn,tj->nij", f, w, f)
        lin = (w * E).T @ f
    idx = np.arange(r)
    prec[:, idx, idx] += 1.0 / state.tau2
    return _batched_gaussian(prec, lin, z)


def sample_loadings(E: np.ndarray | None, state: FactorState, rng: np.random.Generator) -> FactorState:
    """Exact Gaussian draw of each loading row (heteroskedastic regression with ridge prior)."""
    new = state.copy()
    new.lam = loading_conditional(E, state, rng.standard_normal((state.N, state.r)))
    return new


def sample_tau2(state: FactorState, prior: MfsvPrior, rng: np.random.Generator) -> FactorState:
    """``tau2_ij | Lambda_ij, lam2_i ~ GIG(a - 1/2, a lam2_i, Lambda_ij^2)``."""
    new = state.copy()
    a = prior.a
    lam2 = np.repeat(state.lam2[:, None], state.r, axis=1)
    new.tau2 = sv.sample_gig(a - 0.5, a * lam2, state.lam**2, rng)
    return new


def sample_lam2(state: FactorState, prior: MfsvPrior, rng: np.random.Generator) -> FactorState:
    """``lam2_i | tau2_i. ~ Ga(c + r a, rate d + (a/2) sum_j tau2_ij)``."""
    new = state.copy()
    a = prior.a
    shape = prior.lam2_shape + state.r * a
    rate = prior.lam2_rate + 0.5 * a * state.tau2.sum(1)
    new.lam2 = rng.gamma(shape, 1.0 / rate)
    return new


def sample_loading_shrinkage(state: FactorState, prior: MfsvPrior, rng: np.random.Generator) -> FactorState:
    """``tau2`` from its GIG conditional, then ``lam2`` from its Gamma conditional."""
    return sample_lam2(sample_tau2(state, prior, rng), prior, rng)


def update_factor_sv(state: FactorState, prior: MfsvPrior, rng: np.random.Generator,
                     use_data: bool = True) -> FactorState:
    """Indicators, paths and parameters of the ``r`` factor log-variances (data: ``f``)."""
    new = state.copy()
    new.fac_params, new.fac_path = sv.update_sv(state.f.T, state.fac_params, state.fac_path,
                                                prior.sv, rng, use_data=use_data)
    return new


def update_idio_sv(E: np.ndarray, state: FactorState, prior: MfsvPrior, rng: np.random.Generator,
                   use_data: bool = True) -> FactorState:
    """Same for the ``N`` idiosyncratic log-variances (data: ``E - f Lambda'``)."""
    new = state.copy()
    u = (E - state.f @ state.lam.T).T if use_data else np.zeros((state.N, state.T))
    new.idio_params, new.idio_path = sv.update_sv(u, state.idio_params, state.idio_path,
                                                  prior.sv, rng, use_data=use_data)
    return new


def update_block(E: np.ndarray, state: FactorState, prior: MfsvPrior,
                 rngs: list[np.random.Generator]) -> FactorState:
    """Factors, loadings, shrinkage, factor SV, idiosyncratic SV, one generator per step."""
    if len(rngs) != 5:
        raise ValueError("update_block needs five generators")
    state = sample_factors(E, state, rngs[0])
    state = sample_loadings(E, state, rngs[1])
    state = sample_loading_shrinkage(state, prior, rngs[2])
    state = update_factor_sv(state, prior, rngs[3])
    return update_idio_sv(E, state, prior, rngs[4])


def assemble_residual_cov(state: FactorState, t: int | None = None) -> np.ndarray:
    """``Lambda diag(exp(h_tilde_t)) Lambda' + diag(exp(h_bar_t))``.

    ``t`` is a 0-based time index; ``None`` returns the (T, N, N) stack.
    Idiosyncratic variances are floored at ``1e-10``.
    """
    lam = state.lam
    if t is None:
        ft = np.exp(state.h_tilde)
        idio = np.maximum(np.exp(state.h_bar), IDIO_VAR_FLOOR)
        S = np.einsum("ik,tk,jk->tij", lam, ft, lam)
        idx = np.arange(state.N)
        S[:, idx, idx] += idio
        return S
    if not 0 <= t < state.T:
        raise ValueError(f"time index {t} outside [0, {state.T})")
    S = (lam * np.exp(state.h_tilde[t])) @ lam.T
    S[np.diag_indices_from(S)] += np.maximum(np.exp(state.h_bar[t]), IDIO_VAR_FLOOR)
    return S


def woodbury_solve(lam: np.ndarray, fvar: np.ndarray, dvar: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``(Lambda diag(fvar) Lambda' + diag(dvar)) x = b`` through an r x r system."""
    dinv = 1.0 / dvar
    core = np.diag(1.0 / fvar) + (lam.T * dinv) @ lam
    y = dinv * b
    return y - dinv * (lam @ np.linalg.solve(core, lam.T @ y))


def simulate_shrinkage_prior(N: int, r: int, prior: MfsvPrior, rng: np.random.Generator):
    """Forward draw of ``(lam2, tau2, Lambda)`` from the shrinkage prior."""
    lam2 = rng.gamma(prior.lam2_shape, 1.0 / prior.lam2_rate, N)
    tau2 = rng.gamma(prior.a, 1.0 / (0.5 * prior.a * lam2[:, None]), (N, r))
    lam = np.sqrt(tau2) * rng.standard_normal((N, r))
    return lam2, tau2, lam
