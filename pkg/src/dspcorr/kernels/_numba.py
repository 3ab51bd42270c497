"""Compiled kernels. Signatures mirror :mod:`dspcorr.kernels._numpy` exactly."""
from __future__ import annotations

import math

import numpy as np
from numba import njit

PG_TRUNC = 0.64
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@njit(cache=True)
def banded_precision_sample(ab, lin, z):
    k, pp1, n = ab.shape
    p = pp1 - 1
    out = np.empty((k, n))
    L = np.empty((pp1, n))
    v = np.empty(n)
    for b in range(k):
        # band Cholesky, L[d, j] holds entry (j + d, j)
        for j in range(n):
            s = ab[b, 0, j]
            for m in range(max(0, j - p), j):
                s -= L[j - m, m] * L[j - m, m]
            if not s > 0.0:
                raise ValueError("precision matrix is not positive definite")
            ljj = math.sqrt(s)
            L[0, j] = ljj
            for i in range(j + 1, min(n, j + p + 1)):
                s = ab[b, i - j, j]
                for m in range(max(0, i - p), j):
                    s -= L[i - m, m] * L[j - m, m]
                L[i - j, j] = s / ljj
        for i in range(n):
            s = lin[b, i]
            for m in range(max(0, i - p), i):
                s -= L[i - m, m] * v[m]
            v[i] = s / L[0, i]
        for i in range(n - 1, -1, -1):
            s = v[i] + z[b, i]
            for m in range(i + 1, min(n, i + p + 1)):
                s -= L[m - i, i] * out[b, m]
            out[b, i] = s / L[0, i]
    return out


@njit(cache=True)
def ffbs_random_walk2(y, x, obs_var, q, m0, p0, z):
    # state (intercept_t, slope_t) random walk, observation y_t = s1 + s2 * x_t + e_t
    k, T = y.shape
    out = np.empty((k, T, 2))
    mf = np.empty((T, 2))
    Pf = np.empty((T, 3))  # (P11, P12, P22)
    for b in range(k):
        a1 = m0[0]
        a2 = m0[1]
        r11 = p0[0]
        r12 = 0.0
        r22 = p0[1]
        for t in range(T):
            if t > 0:
                a1 = mf[t - 1, 0]
                a2 = mf[t - 1, 1]
                r11 = Pf[t - 1, 0] + q[b, 0, t - 1]
                r12 = Pf[t - 1, 1]
                r22 = Pf[t - 1, 2] + q[b, 1, t - 1]
            xt = x[t]
            rf1 = r11 + r12 * xt
            rf2 = r12 + r22 * xt
            s = rf1 + rf2 * xt + obs_var[b, t]
            k1 = rf1 / s
            k2 = rf2 / s
            e = y[b, t] - a1 - a2 * xt
            mf[t, 0] = a1 + k1 * e
            mf[t, 1] = a2 + k2 * e
            # Joseph form: (I - K F) R (I - K F)' + K v K'
            i11 = 1.0 - k1
            i12 = -k1 * xt
            i21 = -k2
            i22 = 1.0 - k2 * xt
            t11 = i11 * r11 + i12 * r12
            t12 = i11 * r12 + i12 * r22
            t21 = i21 * r11 + i22 * r12
            t22 = i21 * r12 + i22 * r22
            v = obs_var[b, t]
            Pf[t, 0] = t11 * i11 + t12 * i12 + k1 * k1 * v
            Pf[t, 1] = t11 * i21 + t12 * i22 + k1 * k2 * v
            Pf[t, 2] = t21 * i21 + t22 * i22 + k2 * k2 * v
        # backward sampling
        p11 = Pf[T - 1, 0]
        p12 = Pf[T - 1, 1]
        p22 = Pf[T - 1, 2]
        l11 = math.sqrt(p11)
        l21 = p12 / l11
        l22 = math.sqrt(max(p22 - l21 * l21, 0.0))
        out[b, T - 1, 0] = mf[T - 1, 0] + l11 * z[b, T - 1, 0]
        out[b, T - 1, 1] = mf[T - 1, 1] + l21 * z[b, T - 1, 0] + l22 * z[b, T - 1, 1]
        for t in range(T - 2, -1, -1):
            p11 = Pf[t, 0]
            p12 = Pf[t, 1]
            p22 = Pf[t, 2]
            q1 = q[b, 0, t]
            q2 = q[b, 1, t]
            s11 = p11 + q1
            s22 = p22 + q2
            det = s11 * s22 - p12 * p12
            # G = P S^{-1}
            g11 = (p11 * s22 - p12 * p12) / det
            g12 = (-p11 * p12 + p12 * s11) / det
            g21 = (p12 * s22 - p22 * p12) / det
            g22 = (-p12 * p12 + p22 * s11) / det
            d1 = out[b, t + 1, 0] - mf[t, 0]
            d2 = out[b, t + 1, 1] - mf[t, 1]
            mu1 = mf[t, 0] + g11 * d1 + g12 * d2
            mu2 = mf[t, 1] + g21 * d1 + g22 * d2
            # V = P S^{-1} Q = G Q, symmetrised
            v11 = g11 * q1
            v22 = g22 * q2
            v12 = 0.5 * (g12 * q2 + g21 * q1)
            l11 = math.sqrt(max(v11, 0.0))
            l21 = v12 / l11 if l11 > 0.0 else 0.0
            l22 = math.sqrt(max(v22 - l21 * l21, 0.0))
            out[b, t, 0] = mu1 + l11 * z[b, t, 0]
            out[b, t, 1] = mu2 + l21 * z[b, t, 0] + l22 * z[b, t, 1]
    return out


@njit(cache=True)
def mixture_indicators(resid, u, log_w, means, variances):
    n = resid.shape[0]
    K = means.shape[0]
    out = np.empty(n, np.int64)
    lp = np.empty(K)
    const = np.empty(K)
    half_prec = np.empty(K)
    for j in range(K):
        const[j] = log_w[j] - 0.5 * math.log(variances[j])
        half_prec[j] = 0.5 / variances[j]
    for i in range(n):
        mx = -np.inf
        for j in range(K):
            d = resid[i] - means[j]
            lp[j] = const[j] - half_prec[j] * d * d
            if lp[j] > mx:
                mx = lp[j]
        tot = 0.0
        for j in range(K):
            lp[j] = math.exp(lp[j] - mx)
            tot += lp[j]
        target = u[i] * tot
        acc = 0.0
        idx = K - 1
        for j in range(K):
            acc += lp[j]
            if target < acc:
                idx = j
                break
        out[i] = idx
    return out


@njit(cache=True)
def _log_pnorm(x):
    if x > -37.0:
        return math.log(0.5 * math.erfc(-x / math.sqrt(2.0)))
    return -0.5 * x * x - math.log(-x) - _LOG_SQRT_2PI


@njit(cache=True)
def _pigauss(t, z):
    # CDF at t of the inverse Gaussian with mean 1/z and shape 1
    rt = math.sqrt(1.0 / t)
    b = rt * (t * z - 1.0)
    a = -rt * (t * z + 1.0)
    return math.exp(_log_pnorm(b)) + math.exp(2.0 * z + _log_pnorm(a))


@njit(cache=True)
def _pg_coef(n, x):
    k = (n + 0.5) * math.pi
    if x > PG_TRUNC:
        return k * math.exp(-0.5 * k * k * x)
    return (2.0 / (math.pi * x)) ** 1.5 * k * math.exp(-2.0 * (n + 0.5) ** 2 / x)


@njit(cache=True)
def _rtigauss(z, rng):
    t = PG_TRUNC
    x = t + 1.0
    if z == 0.0 or 1.0 / z > t:
        alpha = 0.0
        while rng.random() > alpha:
            e1 = rng.exponential()
            e2 = rng.exponential()
            while e1 * e1 > 2.0 * e2 / t:
                e1 = rng.exponential()
                e2 = rng.exponential()
            x = 1.0 + e1 * t
            x = t / (x * x)
            alpha = math.exp(-0.5 * z * z * x)
    else:
        mu = 1.0 / z
        while x >= t:
            y = rng.standard_normal()
            y = y * y
            mu_y = mu * y
            x = mu + 0.5 * mu * mu_y - 0.5 * mu * math.sqrt(4.0 * mu_y + mu_y * mu_y)
            if rng.random() > mu / (mu + x):
                x = mu * mu / x
    return x


@njit(cache=True)
def _pg1(z, rng):
    kk = math.pi * math.pi / 8.0 + 0.5 * z * z
    p = 0.5 * math.pi * math.exp(-kk * PG_TRUNC) / kk
    q = 2.0 * math.exp(-z) * _pigauss(PG_TRUNC, z)
    while True:
        if rng.random() < p / (p + q):
            x = PG_TRUNC + rng.exponential() / kk
        else:
            x = _rtigauss(z, rng)
        s = _pg_coef(0, x)
        y = rng.random() * s
        n = 0
        while True:
            n += 1
            if n % 2 == 1:
                s -= _pg_coef(n, x)
                if y <= s:
                    return 0.25 * x
            else:
                s += _pg_coef(n, x)
                if y > s:
                    break


@njit(cache=True)
def polya_gamma_1(c, rng):
    out = np.empty(c.shape[0])
    for i in range(c.shape[0]):
        out[i] = _pg1(0.5 * abs(c[i]), rng)
    return out


@njit(cache=True)
def garch_variance(e2, omega, alpha, beta, s0):
    T = e2.shape[0]
    s = np.empty(T)
    s[0] = s0
    for t in range(1, T):
        s[t] = omega + alpha * e2[t - 1] + beta * s[t - 1]
    return s


@njit(cache=True)
def dcc_correlation(z, a, b, g, sbar, nbar):
    T, N = z.shape
    R = np.empty((T, N, N))
    Q = sbar.copy()
    C = (1.0 - a - b) * sbar - g * nbar
    d = np.empty(N)
    for t in range(T):
        if t > 0:
            for i in range(N):
                zi = z[t - 1, i]
                ni = min(zi, 0.0)
                for j in range(N):
                    zj = z[t - 1, j]
                    nj = min(zj, 0.0)
                    Q[i, j] = C[i, j] + a * zi * zj + g * ni * nj + b * Q[i, j]
        for i in range(N):
            d[i] = math.sqrt(Q[i, i])
        for i in range(N):
            for j in range(N):
                R[t, i, j] = Q[i, j] / (d[i] * d[j])
            R[t, i, i] = 1.0
    return R


@njit(cache=True)
def corr_logdet(Rs, tol):
    k, N, _ = Rs.shape
    out = np.empty(k)
    L = np.empty((N, N))
    for b in range(k):
        ld = 0.0
        singular = False
        for j in range(N):
            s = Rs[b, j, j]
            for m in range(j):
                s -= L[j, m] * L[j, m]
            if s < tol:
                singular = True
                break
            L[j, j] = math.sqrt(s)
            ld += math.log(s)
            for i in range(j + 1, N):
                s2 = Rs[b, i, j]
                for m in range(j):
                    s2 -= L[i, m] * L[j, m]
                L[i, j] = s2 / L[j, j]
        out[b] = -np.inf if singular else ld
    return out
