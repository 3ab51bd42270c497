"""Pure numpy/scipy kernels, used when numba is unavailable or disabled.

Deterministic kernels agree with the compiled ones to rounding error. The
Polya-Gamma sampler uses a vectorised rejection loop, so it consumes the
random stream in a different order and only agrees in distribution.
"""
from __future__ import annotations

import numpy as np
from scipy import linalg, signal, special

PG_TRUNC = 0.64


def banded_precision_sample(ab, lin, z):
    k, pp1, n = ab.shape
    p = pp1 - 1
    out = np.empty((k, n))
    upper = np.zeros((pp1, n))
    for b in range(k):
        try:
            Lb = linalg.cholesky_banded(ab[b], lower=True, check_finite=False)
        except linalg.LinAlgError as exc:
            raise ValueError("precision matrix is not positive definite") from exc
        v = linalg.solve_banded((p, 0), Lb, lin[b], check_finite=False)
        # upper band storage of L.T
        for d in range(pp1):
            upper[p - d, d:] = Lb[d, : n - d]
        out[b] = linalg.solve_banded((0, p), upper, v + z[b], check_finite=False)
    return out


def ffbs_random_walk2(y, x, obs_var, q, m0, p0, z):
    k, T = y.shape
    mf = np.empty((T, 2, k))
    Pf = np.empty((T, 3, k))
    a1 = np.full(k, m0[0], dtype=float)
    a2 = np.full(k, m0[1], dtype=float)
    r11 = np.full(k, p0[0], dtype=float)
    r12 = np.zeros(k)
    r22 = np.full(k, p0[1], dtype=float)
    for t in range(T):
        if t > 0:
            a1 = mf[t - 1, 0]
            a2 = mf[t - 1, 1]
            r11 = Pf[t - 1, 0] + q[:, 0, t - 1]
            r12 = Pf[t - 1, 1]
            r22 = Pf[t - 1, 2] + q[:, 1, t - 1]
        xt = x[t]
        rf1 = r11 + r12 * xt
        rf2 = r12 + r22 * xt
        v = obs_var[:, t]
        s = rf1 + rf2 * xt + v
        k1 = rf1 / s
        k2 = rf2 / s
        e = y[:, t] - a1 - a2 * xt
        mf[t, 0] = a1 + k1 * e
        mf[t, 1] = a2 + k2 * e
        i11 = 1.0 - k1
        i12 = -k1 * xt
        i21 = -k2
        i22 = 1.0 - k2 * xt
        t11 = i11 * r11 + i12 * r12
        t12 = i11 * r12 + i12 * r22
        t21 = i21 * r11 + i22 * r12
        t22 = i21 * r12 + i22 * r22
        Pf[t, 0] = t11 * i11 + t12 * i12 + k1 * k1 * v
        Pf[t, 1] = t11 * i21 + t12 * i22 + k1 * k2 * v
        Pf[t, 2] = t21 * i21 + t22 * i22 + k2 * k2 * v

    out = np.empty((k, T, 2))
    p11, p12, p22 = Pf[T - 1]
    l11 = np.sqrt(p11)
    l21 = p12 / l11
    l22 = np.sqrt(np.maximum(p22 - l21 * l21, 0.0))
    out[:, T - 1, 0] = mf[T - 1, 0] + l11 * z[:, T - 1, 0]
    out[:, T - 1, 1] = mf[T - 1, 1] + l21 * z[:, T - 1, 0] + l22 * z[:, T - 1, 1]
    for t in range(T - 2, -1, -1):
        p11, p12, p22 = Pf[t]
        q1 = q[:, 0, t]
        q2 = q[:, 1, t]
        s11 = p11 + q1
        s22 = p22 + q2
        det = s11 * s22 - p12 * p12
        g11 = (p11 * s22 - p12 * p12) / det
        g12 = (-p11 * p12 + p12 * s11) / det
        g21 = (p12 * s22 - p22 * p12) / det
        g22 = (-p12 * p12 + p22 * s11) / det
        d1 = out[:, t + 1, 0] - mf[t, 0]
        d2 = out[:, t + 1, 1] - mf[t, 1]
        mu1 = mf[t, 0] + g11 * d1 + g12 * d2
        mu2 = mf[t, 1] + g21 * d1 + g22 * d2
        v11 = g11 * q1
        v22 = g22 * q2
        v12 = 0.5 * (g12 * q2 + g21 * q1)
        l11 = np.sqrt(np.maximum(v11, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            l21 = np.where(l11 > 0.0, v12 / l11, 0.0)
        l22 = np.sqrt(np.maximum(v22 - l21 * l21, 0.0))
        out[:, t, 0] = mu1 + l11 * z[:, t, 0]
        out[:, t, 1] = mu2 + l21 * z[:, t, 0] + l22 * z[:, t, 1]
    return out


def mixture_indicators(resid, u, log_w, means, variances):
    d = resid[:, None] - means[None, :]
    lp = log_w - 0.5 * np.log(variances) - 0.5 * d * d / variances
    w = np.exp(lp - lp.max(axis=1, keepdims=True))
    cum = np.cumsum(w, axis=1)
    hit = (u * cum[:, -1])[:, None] < cum
    return np.where(hit.any(axis=1), hit.argmax(axis=1), len(means) - 1).astype(np.int64)


def _pigauss(t, z):
    rt = np.sqrt(1.0 / t)
    b = rt * (t * z - 1.0)
    a = -rt * (t * z + 1.0)
    return np.exp(special.log_ndtr(b)) + np.exp(2.0 * z + special.log_ndtr(a))


def _pg_coef(n, x):
    k = (n + 0.5) * np.pi
    with np.errstate(over="ignore", divide="ignore"):
        big = k * np.exp(-0.5 * k * k * x)
        small = (2.0 / (np.pi * x)) ** 1.5 * k * np.exp(-2.0 * (n + 0.5) ** 2 / x)
    return np.where(x > PG_TRUNC, big, small)


def _rtigauss(z, rng):
    t = PG_TRUNC
    x = np.empty_like(z)
    with np.errstate(divide="ignore"):
        mu = 1.0 / z
    levy = mu > t

    todo = np.flatnonzero(levy)
    while todo.size:
        m = todo.size
        e1 = rng.exponential(size=m)
        e2 = rng.exponential(size=m)
        ok = e1 * e1 <= 2.0 * e2 / t
        cand = 1.0 + e1 * t
        cand = t / (cand * cand)
        alpha = np.exp(-0.5 * z[todo] ** 2 * cand)
        ok &= rng.random(m) <= alpha
        x[todo[ok]] = cand[ok]
        todo = todo[~ok]

    todo = np.flatnonzero(~levy)
    while todo.size:
        m = todo.size
        mu_t = mu[todo]
        y = rng.standard_normal(m) ** 2
        mu_y = mu_t * y
        cand = mu_t + 0.5 * mu_t * mu_y - 0.5 * mu_t * np.sqrt(4.0 * mu_y + mu_y * mu_y)
        flip = rng.random(m) > mu_t / (mu_t + cand)
        cand = np.where(flip, mu_t * mu_t / cand, cand)
        ok = cand < t
        x[todo[ok]] = cand[ok]
        todo = todo[~ok]
    return x


def polya_gamma_1(c, rng):
    z = 0.5 * np.abs(np.asarray(c, dtype=float))
    out = np.empty_like(z)
    todo = np.arange(z.size)
    while todo.size:
        zz = z[todo]
        kk = np.pi**2 / 8.0 + 0.5 * zz * zz
        p = 0.5 * np.pi * np.exp(-kk * PG_TRUNC) / kk
        q = 2.0 * np.exp(-zz) * _pigauss(PG_TRUNC, zz)
        use_exp = rng.random(todo.size) < p / (p + q)
        x = np.empty(todo.size)
        x[use_exp] = PG_TRUNC + rng.exponential(size=int(use_exp.sum())) / kk[use_exp]
        if (~use_exp).any():
            x[~use_exp] = _rtigauss(zz[~use_exp], rng)

        s = _pg_coef(0, x)
        y = rng.random(todo.size) * s
        accepted = np.zeros(todo.size, dtype=bool)
        open_ = np.ones(todo.size, dtype=bool)
        n = 0
        while open_.any():
            n += 1
            idx = np.flatnonzero(open_)
            if n % 2 == 1:
                s[idx] -= _pg_coef(n, x[idx])
                hit = y[idx] <= s[idx]
                accepted[idx[hit]] = True
                open_[idx[hit]] = False
            else:
                s[idx] += _pg_coef(n, x[idx])
                open_[idx[y[idx] > s[idx]]] = False
        out[todo[accepted]] = 0.25 * x[accepted]
        todo = todo[~accepted]
    return out


def garch_variance(e2, omega, alpha, beta, s0):
    s = np.empty(e2.shape[0])
    s[0] = s0
    if s.shape[0] > 1:
        drive = omega + alpha * e2[:-1]
        s[1:] = signal.lfilter([1.0], [1.0, -beta], drive, zi=[beta * s0])[0]
    return s


def dcc_correlation(z, a, b, g, sbar, nbar):
    T, N = z.shape
    C = (1.0 - a - b) * sbar - g * nbar
    Q = np.empty((T, N, N))
    Q[0] = sbar
    if T > 1:
        zl = z[:-1]
        nl = np.minimum(zl, 0.0)
        drive = C + a * zl[:, :, None] * zl[:, None, :] + g * nl[:, :, None] * nl[:, None, :]
        flat = signal.lfilter([1.0], [1.0, -b], drive.reshape(T - 1, N * N), axis=0,
                              zi=(b * sbar).reshape(1, N * N))[0]
        Q[1:] = flat.reshape(T - 1, N, N)
    d = np.sqrt(np.einsum("tii->ti", Q))
    R = Q / (d[:, :, None] * d[:, None, :])
    idx = np.arange(N)
    R[:, idx, idx] = 1.0
    return R


def _logdet_single(R, tol):
    N = R.shape[0]
    L = np.zeros((N, N))
    ld = 0.0
    for j in range(N):
        s = R[j, j] - L[j, :j] @ L[j, :j]
        if s < tol:
            return -np.inf
        L[j, j] = np.sqrt(s)
        ld += np.log(s)
        L[j + 1:, j] = (R[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return ld


def corr_logdet(Rs, tol):
    try:
        L = np.linalg.cholesky(Rs)
    except np.linalg.LinAlgError:
        return np.array([_logdet_single(R, tol) for R in Rs])
    piv = np.einsum("kii->ki", L) ** 2
    with np.errstate(divide="ignore"):
        ld = np.log(piv).sum(axis=1)
    return np.where(piv.min(axis=1) < tol, -np.inf, ld)
