"""Time each hot kernel under the numba and numpy backends.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--N 30] [--T 1000]

Both backends are imported directly, so one process times both. The first
numba call (compilation) is excluded. Results also report the largest
absolute difference between the two outputs on identical inputs (PG draws
are random and only compared by mean).
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from dspcorr import sv
from dspcorr.kernels import _numba, _numpy


def _inputs(N: int, T: int, rng: np.random.Generator) -> dict:
    k = 2 * N
    ab = np.zeros((k, 2, T))
    ab[:, 0, :] = rng.uniform(2.0, 4.0, (k, T))
    ab[:, 1, :-1] = rng.uniform(-0.9, 0.9, (k, T - 1))
    z = rng.standard_normal((N, T))
    S = np.corrcoef(rng.standard_normal((200, N)), rowvar=False)
    R = np.stack([S] * T)
    return {
        "banded_precision_sample": (ab, rng.standard_normal((k, T)), rng.standard_normal((k, T))),
        "ffbs_random_walk2": (rng.standard_normal((N, T)), rng.standard_normal(T), np.ones((N, T)),
                              np.full((N, 2, T - 1), 1e-3), np.zeros(2), np.full(2, 10.0),
                              rng.standard_normal((N, T, 2))),
        "mixture_indicators": (rng.standard_normal(k * T), rng.uniform(size=k * T), sv.MIX_LOG_WEIGHTS,
                               sv.MIX_MEANS, sv.MIX_VARS),
        "garch_variance": (rng.standard_normal(T) ** 2, 0.05, 0.08, 0.9, 1.0),
        "dcc_correlation": (np.ascontiguousarray(z.T), 0.03, 0.95, 0.0, S, np.eye(N) * 0.5),
        "corr_logdet": (R, 1e-12),
    }


def _time(fn, args, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--N", type=int, default=30)
    ap.add_argument("--T", type=int, default=1000)
    args = ap.parse_args(argv)
    inputs = _inputs(args.N, args.T, np.random.default_rng(0))
    print(f"{'kernel':<26}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, a in inputs.items():
        fa, fb = getattr(_numba, name), getattr(_numpy, name)
        out_a = fa(*a)  # compile
        out_b = fb(*a)
        diff = float(np.max(np.abs(np.asarray(out_a, float) - np.asarray(out_b, float))))
        ta, tb = _time(fa, a, args.repeat), _time(fb, a, args.repeat)
        print(f"{name:<26}{1e3 * ta:>12.3f}{1e3 * tb:>12.3f}{tb / ta:>10.1f}{diff:>14.2e}")
    c = np.abs(np.random.default_rng(1).standard_normal(2 * args.N * args.T))
    ra, rb = np.random.default_rng(2), np.random.default_rng(2)
    _numba.polya_gamma_1(c[:10], ra)
    ta = _time(lambda: _numba.polya_gamma_1(c, ra), (), args.repeat)
    tb = _time(lambda: _numpy.polya_gamma_1(c, rb), (), args.repeat)
    ma = _numba.polya_gamma_1(c, ra).mean()
    mb = _numpy.polya_gamma_1(c, rb).mean()
    print(f"{'polya_gamma_1':<26}{1e3 * ta:>12.3f}{1e3 * tb:>12.3f}{tb / ta:>10.1f}{abs(ma - mb):>14.2e}"
          "  (|mean diff|)")


if __name__ == "__main__":
    main()
