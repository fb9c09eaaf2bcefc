"""Kernel backend benchmark: jitted path vs pure-numpy fallback.

Usage: python -m cmablab.benchmark [--repeat N] [--m M] [--k K]

Times every hot kernel on representative inputs under the active backend
and under the numpy fallback.  With CMABLAB_NUMBA=0 both columns coincide.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from . import kernels


def _time(fn, args_factory, repeat: int) -> float:
    # args rebuilt per call for the in-place kernels
    args = args_factory()
    fn(*args)  # warm call (compiles on the jitted path)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args_factory())
    return (time.perf_counter() - t0) / repeat


def _cases(m: int, k: int, rng: np.random.Generator):
    counts = rng.integers(0, 50, m).astype(np.int64)
    mu_hat = rng.random(m)
    scores = rng.random(m)
    weights = np.exp(3.0 * rng.random(m))
    p, _, capped = kernels.numpy_impls["exp3m_dist"](weights, k, 0.01)
    arms = np.sort(rng.choice(m, k, replace=False)).astype(np.int64)
    outs = rng.integers(0, 2, k).astype(np.float64)
    L = -rng.random(m) * 1e3
    x0 = k / m
    pp = -0.5 / math.sqrt(x0) - math.log1p(-x0) - 1.0
    lam_lo = -math.sqrt(1e4) * pp - L.max()
    lam_hi = -math.sqrt(1e4) * pp - L.min()
    return {
        "topk_indices": lambda: (scores, k),
        "cmoss_mu_bar": lambda: (counts, mu_hat, 1e-5),
        "cucb_mu_bar": lambda: (counts, mu_hat, 1000.0),
        "mean_update": lambda: (counts.copy(), mu_hat.copy(), arms, outs),
        "exp3m_dist": lambda: (weights, k, 0.01),
        "exp3m_update": lambda: (weights.copy(), capped, arms, outs, p, k, 0.01),
        "depround_core": lambda: (p.copy(), rng.random(m)),
        "capped_simplex_core": lambda: (L, math.sqrt(1e4), 1.0, k, 1e-12,
                                        1e-10, 200, 1e-12, lam_lo, lam_hi),
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=2000)
    parser.add_argument("--m", type=int, default=30)
    parser.add_argument("--k", type=int, default=10)
    args = parser.parse_args(argv)

    kernels.warmup()
    cases = _cases(args.m, args.k, np.random.default_rng(7))
    print(f"backend: {kernels.BACKEND}  (m={args.m}, k={args.k}, "
          f"repeat={args.repeat})")
    print(f"{'kernel':<22}{kernels.BACKEND + ' us':>14}{'numpy us':>12}{'speedup':>10}")
    for name, factory in cases.items():
        active = getattr(kernels, name)
        fallback = kernels.numpy_impls[name]
        t_active = _time(active, factory, args.repeat)
        t_numpy = _time(fallback, factory, args.repeat)
        ratio = t_numpy / t_active if t_active > 0 else float("inf")
        print(f"{name:<22}{t_active * 1e6:>14.2f}{t_numpy * 1e6:>12.2f}"
              f"{ratio:>10.2f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
