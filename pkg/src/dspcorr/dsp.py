"""Dynamic shrinkage process channels.

Each channel governs the innovation variance of one random-walk coefficient
path. With ``omega_t`` the path increments (``t = 1..n``, ``n = T - 1``)::

    omega_t ~ N(0, exp(h_t))
    h_1 = mu + eta_1,   h_t = mu + phi (h_{t-1} - mu) + eta_t,   eta_t ~ Z(1/2, 1/2, 0, 1)
    mu = log tau0^2 + log tau^2,   tau0 ~ C+(0, 1/sqrt(T)),   tau ~ C+(0, 1)
    (phi + 1) / 2 ~ Beta(10, 2)

``Z(1/2, 1/2, 0, 1)`` is the logit of a Beta(1/2, 1/2) variate; its density is
proportional to ``1 / cosh(eta / 2)``, which is the Laplace transform of the
PG(1, 0) law. Hence the augmentation ``eta | xi ~ N(0, 1 / xi)`` with
``xi | eta ~ PG(1, eta)``. The log-scales ``log tau^2`` and
``log tau0^2 + log T`` are Z(1/2, 1/2, 0, 1) as well (log of a squared
standard half-Cauchy) and are augmented the same way, so every conditional is
Gaussian or Polya-Gamma.

Channels are stored in batches: ``k`` channels of length ``n`` belonging to
``g`` groups that share one global scale ``tau0`` (one group per asset).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dspcorr import kernels
from dspcorr._slice import slice_sample
from dspcorr.sv import MIX_MEANS, MIX_VARS, draw_indicators, log_square

PHI_A = 10.0
PHI_B = 2.0
_PG_SERIES_TERMS = 200


def sample_polya_gamma(b, c, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draws from the Polya-Gamma law PG(b, c).

    The integer part of ``b`` is a sum of exact PG(1, c) draws; a fractional
    remainder uses the infinite-convolution representation truncated at 200
    gamma terms plus the mean of the omitted tail.

    Parameters
    ----------
    b : float or array_like
        Shape, strictly positive.
    c : float or array_like
        Tilt.
    size : int or tuple, optional
        Output shape; defaults to the broadcast shape of ``b`` and ``c``.
    """
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(~(b > 0.0)):
        raise ValueError("Polya-Gamma shape b must be positive")
    shape = np.broadcast_shapes(b.shape, c.shape) if size is None else tuple(np.atleast_1d(size))
    b = np.broadcast_to(b, shape).ravel()
    c = np.ascontiguousarray(np.broadcast_to(c, shape).ravel())
    out = np.zeros(b.size)
    whole = np.floor(b).astype(np.int64)
    for m in range(1, int(whole.max(initial=0)) + 1):
        sel = np.flatnonzero(whole >= m)
        out[sel] += kernels.polya_gamma_1(np.ascontiguousarray(c[sel]), rng)
    frac = b - whole
    sel = np.flatnonzero(frac > 0.0)
    if sel.size:
        out[sel] += _pg_series(frac[sel], c[sel], rng)
    return out.reshape(shape)


def _pg_series(b, c, rng):
    kk = np.arange(1, _PG_SERIES_TERMS + 1) - 0.5
    d = (c / (2.0 * np.pi)) ** 2
    denom = kk[None, :] ** 2 + d[:, None]
    g = rng.gamma(np.broadcast_to(b[:, None], denom.shape))
    head = (g / denom).sum(1)
    # omitted terms replaced by their mean, sum_{k > K} 1 / ((k - 1/2)^2 + d)
    # approximated by the integral of 1 / (x^2 + d) over [K, inf)
    rd = np.sqrt(np.maximum(d, 1e-300))
    tail = b * (0.5 * np.pi - np.arctan(_PG_SERIES_TERMS / rd)) / rd
    return (head + tail) / (2.0 * np.pi**2)


def sample_z_innovation(rng: np.random.Generator, size=None) -> np.ndarray | float:
    """Draws from Z(1/2, 1/2, 0, 1) as ``logit(G1 / (G1 + G2))``, ``Gi ~ Gamma(1/2)``.

    Written as ``log G1 - log G2`` this is the logit of the Beta(1/2, 1/2)
    variate without the cancellation of ``log(1 - u)`` near ``u = 1``.
    """
    g1 = rng.standard_gamma(0.5, size)
    g2 = rng.standard_gamma(0.5, size)
    with np.errstate(divide="ignore"):
        z = np.log(g1) - np.log(g2)
    return z


@dataclass
class DspChannels:
    """A batch of DSP channels.

    Attributes
    ----------
    h : ndarray (k, n)
        Log-variance paths.
    phi : ndarray (k,)
        AR coefficients.
    log_tau2 : ndarray (k,)
        Channel-specific log scale ``log tau^2``.
    log_tau0_2 : ndarray (g,)
        Group-level log scale ``log tau0^2``.
    group : ndarray (k,) of int
        Group of each channel.
    xi : ndarray (k, n)
        Polya-Gamma auxiliaries of the ``eta`` innovations.
    xi_tau, xi_tau0 : ndarray (k,), (g,)
        Polya-Gamma auxiliaries of the log scales.
    mix : ndarray (k, n) of int
        Mixture indicators for ``log(omega^2 + 1e-12)``.
    T : int
        Panel length; sets the ``tau0`` prior scale ``1/sqrt(T)``.
    """

    h: np.ndarray
    phi: np.ndarray
    log_tau2: np.ndarray
    log_tau0_2: np.ndarray
    group: np.ndarray
    xi: np.ndarray
    xi_tau: np.ndarray
    xi_tau0: np.ndarray
    mix: np.ndarray
    T: int

    def __post_init__(self):
        k, n = self.h.shape
        if self.phi.shape != (k,) or self.log_tau2.shape != (k,) or self.group.shape != (k,):
            raise ValueError("per-channel arrays must have length k")
        if self.xi.shape != (k, n) or self.mix.shape != (k, n):
            raise ValueError("xi and mix must match h")
        if np.any(np.abs(self.phi) >= 1.0):
            raise ValueError("DSP persistence must lie in (-1, 1)")

    @property
    def k(self) -> int:
        return self.h.shape[0]

    @property
    def n(self) -> int:
        return self.h.shape[1]

    @property
    def mu(self) -> np.ndarray:
        return self.log_tau0_2[self.group] + self.log_tau2

    @property
    def tau(self) -> np.ndarray:
        return np.exp(0.5 * self.log_tau2)

    @property
    def tau0(self) -> np.ndarray:
        return np.exp(0.5 * self.log_tau0_2)

    def copy(self) -> "DspChannels":
        return DspChannels(self.h.copy(), self.phi.copy(), self.log_tau2.copy(), self.log_tau0_2.copy(),
                           self.group.copy(), self.xi.copy(), self.xi_tau.copy(), self.xi_tau0.copy(),
                           self.mix.copy(), self.T)

    def check(self) -> None:
        if not np.all(np.isfinite(self.h)):
            raise ValueError("DSP log-variance path is not finite")
        if np.any(~(self.xi > 0.0)) or np.any(~(self.xi_tau > 0.0)) or np.any(~(self.xi_tau0 > 0.0)):
            raise ValueError("Polya-Gamma auxiliaries must be positive")


def init_channels(k: int, n: int, group: np.ndarray, T: int, h0: np.ndarray | float = 0.0,
                  phi0: float = 2.0 * PHI_A / (PHI_A + PHI_B) - 1.0) -> DspChannels:
    """Deterministic starting values: flat ``h`` at ``h0``, prior-mean ``phi``.

    The level is split so ``log tau0^2`` sits at its prior centre ``-log T``.
    """
    group = np.asarray(group, dtype=np.int64)
    g = int(group.max()) + 1
    h = np.broadcast_to(np.asarray(h0, dtype=float), (k, n)).copy() if np.ndim(h0) != 1 \
        else np.repeat(np.asarray(h0, float)[:, None], n, axis=1)
    log_tau0_2 = np.full(g, -np.log(T))
    log_tau2 = h.mean(1) - log_tau0_2[group]
    return DspChannels(h=h, phi=np.full(k, phi0), log_tau2=log_tau2, log_tau0_2=log_tau0_2, group=group,
                       xi=np.full((k, n), 0.25), xi_tau=np.full(k, 0.25), xi_tau0=np.full(g, 0.25),
                       mix=np.full((k, n), 4, dtype=np.int64), T=T)


def h_system(ch: DspChannels, ystar: np.ndarray | None):
    """Banded precision (lower form) and linear term of ``x = h - mu``.

    Conditions on the current ``xi``, ``mix``, ``phi`` and level. With
    ``ystar=None`` only the prior term is used.
    """
    k, n = ch.k, ch.n
    phi = ch.phi[:, None]
    xi = ch.xi
    ab = np.zeros((k, 2, n))
    ab[:, 0, :] = xi
    ab[:, 0, :-1] += phi * phi * xi[:, 1:]
    ab[:, 1, :-1] = -phi * xi[:, 1:]
    lin = np.zeros((k, n))
    if ystar is not None:
        v = MIX_VARS[ch.mix]
        ab[:, 0, :] += 1.0 / v
        lin = (ystar - MIX_MEANS[ch.mix] - ch.mu[:, None]) / v
    return ab, lin


def h_conditional_draw(ch: DspChannels, ystar: np.ndarray | None, z: np.ndarray) -> np.ndarray:
    """Path draw as an affine map of standard normals ``z`` (``z = 0``: conditional mean)."""
    ab, lin = h_system(ch, ystar)
    x = kernels.banded_precision_sample(ab, lin, np.ascontiguousarray(z, dtype=float))
    return ch.mu[:, None] + x


def innovations_of(h: np.ndarray, mu: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """``eta`` implied by paths: ``eta_1 = h_1 - mu``, ``eta_t = x_t - phi x_{t-1}``."""
    x = h - mu[:, None]
    eta = x.copy()
    eta[:, 1:] -= phi[:, None] * x[:, :-1]
    return eta


def sample_h_indicators(ch: DspChannels, ystar: np.ndarray, rng: np.random.Generator) -> DspChannels:
    """Mixture indicators of ``ystar = log(omega^2 + 1e-12)`` given ``h``."""
    ch = ch.copy()
    ch.mix = draw_indicators(ystar - ch.h, rng)
    return ch


def sample_h(ch: DspChannels, ystar: np.ndarray | None, rng: np.random.Generator) -> DspChannels:
    """Exact Gaussian draw of the paths given indicators, ``xi`` and the level."""
    ch = ch.copy()
    ch.h = h_conditional_draw(ch, ystar, rng.standard_normal(ch.h.shape))
    return ch


def sample_xi(ch: DspChannels, rng: np.random.Generator) -> DspChannels:
    """``xi_t | eta_t ~ PG(1, eta_t)``."""
    ch = ch.copy()
    eta = innovations_of(ch.h, ch.mu, ch.phi)
    ch.xi = kernels.polya_gamma_1(np.ascontiguousarray(eta.ravel()), rng).reshape(eta.shape)
    return ch


def innovation_observations(ch: DspChannels, innovations: np.ndarray | None) -> np.ndarray | None:
    """``log(omega^2 + 1e-12)`` after a shape check; ``None`` passes through."""
    if innovations is None:
        return None
    innovations = np.asarray(innovations, dtype=float)
    if innovations.shape != ch.h.shape:
        raise ValueError(f"innovations have shape {innovations.shape}, expected {ch.h.shape}")
    return log_square(innovations)


def update_h_path(ch: DspChannels, innovations: np.ndarray | None, rng: np.random.Generator) -> DspChannels:
    """Mixture indicators, then the exact Gaussian path draw, then fresh ``xi``.

    Parameters
    ----------
    innovations : ndarray (k, n) or None
        Current coefficient-path increments ``omega``. ``None`` runs the
        update without a data term (prior-only chain).
    """
    ystar = innovation_observations(ch, innovations)
    if ystar is not None:
        ch = sample_h_indicators(ch, ystar, rng)
    ch = sample_h(ch, ystar, rng)
    return sample_xi(ch, rng)


def update_phi(ch: DspChannels, rng: np.random.Generator) -> DspChannels:
    """Slice step for each ``phi`` on the Beta(10, 2) scale ``u = (phi + 1) / 2``."""
    ch = ch.copy()
    x = ch.h - ch.mu[:, None]
    w = ch.xi[:, 1:]
    s00 = (w * x[:, :-1] ** 2).sum(1)
    s01 = (w * x[:, :-1] * x[:, 1:]).sum(1)

    def logp(u, idx):
        with np.errstate(divide="ignore", invalid="ignore"):
            p = 2.0 * u - 1.0
            out = -0.5 * p * p * s00[idx] + p * s01[idx] + (PHI_A - 1.0) * np.log(u) + (PHI_B - 1.0) * np.log1p(-u)
        return np.where((u > 0.0) & (u < 1.0), out, -np.inf)

    u = slice_sample(logp, 0.5 * (ch.phi + 1.0), rng, width=0.1, lower=0.0, upper=1.0)
    ch.phi = np.clip(2.0 * u - 1.0, -1.0 + 1e-12, 1.0 - 1e-12)
    return ch


def _level_stats(ch: DspChannels):
    """Precision ``P`` and linear term ``L`` of the path likelihood in ``mu``."""
    phi = ch.phi
    xi = ch.xi
    h = ch.h
    one_m = 1.0 - phi
    P = xi[:, 0] + one_m**2 * xi[:, 1:].sum(1)
    L = xi[:, 0] * h[:, 0] + one_m * (xi[:, 1:] * (h[:, 1:] - phi[:, None] * h[:, :-1])).sum(1)
    return P, L


def update_log_tau2(ch: DspChannels, rng: np.random.Generator) -> DspChannels:
    """``log tau^2`` per channel given paths, group level and ``xi_tau``."""
    ch = ch.copy()
    P, L = _level_stats(ch)
    mu0 = ch.log_tau0_2[ch.group]
    prec = P + ch.xi_tau
    ch.log_tau2 = (L - P * mu0) / prec + rng.standard_normal(ch.k) / np.sqrt(prec)
    return ch


def update_log_tau0_2(ch: DspChannels, rng: np.random.Generator) -> DspChannels:
    """``log tau0^2`` per group given the channels of the group and ``xi_tau0``."""
    ch = ch.copy()
    P, L = _level_stats(ch)
    g = ch.log_tau0_2.shape[0]
    centre = -np.log(ch.T)
    prec0 = np.bincount(ch.group, weights=P, minlength=g) + ch.xi_tau0
    lin0 = np.bincount(ch.group, weights=L - P * ch.log_tau2, minlength=g) + ch.xi_tau0 * centre
    ch.log_tau0_2 = lin0 / prec0 + rng.standard_normal(g) / np.sqrt(prec0)
    return ch


def update_scale_aux(ch: DspChannels, rng: np.random.Generator) -> DspChannels:
    """Polya-Gamma auxiliaries of both log scales."""
    ch = ch.copy()
    ch.xi_tau = kernels.polya_gamma_1(np.ascontiguousarray(ch.log_tau2), rng)
    ch.xi_tau0 = kernels.polya_gamma_1(np.ascontiguousarray(ch.log_tau0_2 + np.log(ch.T)), rng)
    return ch


def update_global_scales(ch: DspChannels, rng: np.random.Generator) -> DspChannels:
    """Update ``log tau^2`` per channel, then ``log tau0^2`` per group, then their PG auxiliaries.

    ``log tau^2 | xi_tau ~ N(0, 1/xi_tau)`` and
    ``log tau0^2 | xi_tau0 ~ N(-log T, 1/xi_tau0)`` are the augmented priors.
    """
    ch = update_log_tau2(ch, rng)
    ch = update_log_tau0_2(ch, rng)
    return update_scale_aux(ch, rng)


def update_channels(ch: DspChannels, innovations: np.ndarray | None, rng: np.random.Generator) -> DspChannels:
    """Full DSP block: path (with indicators and ``xi``), ``phi``, then global scales."""
    ch = update_h_path(ch, innovations, rng)
    ch = update_phi(ch, rng)
    return update_global_scales(ch, rng)


def simulate_prior(k: int, n: int, group: np.ndarray, T: int, rng: np.random.Generator) -> DspChannels:
    """Forward draw of scales, ``phi`` and paths from the DSP prior.

    Auxiliaries are drawn from their conditionals given the simulated values, so
    the returned state is an exact draw from the augmented joint prior.
    """
    group = np.asarray(group, dtype=np.int64)
    g = int(group.max()) + 1
    log_tau0_2 = -np.log(T) + sample_z_innovation(rng, g)
    log_tau2 = sample_z_innovation(rng, k)
    phi = 2.0 * rng.beta(PHI_A, PHI_B, k) - 1.0
    mu = log_tau0_2[group] + log_tau2
    eta = sample_z_innovation(rng, (k, n))
    x = np.empty((k, n))
    x[:, 0] = eta[:, 0]
    for t in range(1, n):
        x[:, t] = phi * x[:, t - 1] + eta[:, t]
    h = mu[:, None] + x
    xi = kernels.polya_gamma_1(np.ascontiguousarray(eta.ravel()), rng).reshape(k, n)
    xi_tau = kernels.polya_gamma_1(np.ascontiguousarray(log_tau2), rng)
    xi_tau0 = kernels.polya_gamma_1(np.ascontiguousarray(log_tau0_2 + np.log(T)), rng)
    return DspChannels(h, phi, log_tau2, log_tau0_2, group, xi, xi_tau, xi_tau0,
                       np.full((k, n), 4, dtype=np.int64), T)


def simulate_innovations(ch: DspChannels, rng: np.random.Generator) -> np.ndarray:
    """Increments ``omega_t ~ N(0, exp(h_t))`` for each channel."""
    return np.exp(0.5 * ch.h) * rng.standard_normal(ch.h.shape)
