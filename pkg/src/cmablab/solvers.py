"""Numerical routines: separable-convex argmin over the capped simplex and
scalar root finding.

The argmin dualizes the sum constraint with a multiplier and runs nested
bisection: an outer bisection on the multiplier and, for each candidate,
per-coordinate bisection on the stationarity condition.  The regularizer is
psi(x) = -sqrt(x) + gamma*(1-x)*ln(1-x), strictly convex on (0, 1) with
psi' -> -inf at 0+ and +inf at 1-, so interior solutions always exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels

_COORD_EPS = 1e-12  # clamp keeping psi' finite; inside the tolerance budget


@dataclass(frozen=True)
class SolverOptions:
    kkt_tolerance: float = 1e-10
    max_bisection_iters: int = 200
    coordinate_tolerance: float = 1e-12

    def __post_init__(self):
        if self.kkt_tolerance <= 0 or self.coordinate_tolerance <= 0:
            raise ValueError("tolerances must be strictly positive")
        if self.max_bisection_iters < 1:
            raise ValueError("max_bisection_iters must be positive")


class SolverError(RuntimeError):
    """Raised on non-convergence; carries the final residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def bisect(f, lo: float, hi: float, tol: float) -> float:
    """Root of a monotone scalar function by bisection.

    Requires a sign change over [lo, hi] (an endpoint within ``tol`` of a
    root also counts).  Stops when |f(x)| <= tol or the interval is
    narrower than ``tol``.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    flo, fhi = f(lo), f(hi)
    if abs(flo) <= tol:
        return lo
    if abs(fhi) <= tol:
        return hi
    if flo * fhi > 0:
        raise ValueError(f"no sign change on [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if abs(fmid) <= tol:
            return mid
        if (fmid < 0) == (flo < 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _psi_prime(x: float, gamma: float) -> float:
    return -0.5 / math.sqrt(x) - gamma * math.log1p(-x) - gamma


def _validate(L: np.ndarray, eta: float, gamma: float, k: int) -> np.ndarray:
    L = np.asarray(L, dtype=np.float64)
    if L.ndim != 1 or L.size < 2:
        raise ValueError("L must be a vector of length >= 2")
    if not np.all(np.isfinite(L)):
        raise ValueError("L must be finite")
    if not 1 <= k < L.size:
        raise ValueError(f"need 1 <= k < m, got k={k}, m={L.size}")
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    return L


def _spec_bracket(L: np.ndarray, inv_eta: float, gamma: float,
                  k: int) -> tuple[float, float]:
    # With lam = -inv_eta*psi'(k/m) - max(L) every coordinate sits at or
    # above k/m (sum >= k); with the min(L) shift, at or below (sum <= k).
    pivot = -inv_eta * _psi_prime(k / L.size, gamma)
    return pivot - float(L.max()), pivot - float(L.min())


def solve_capped_simplex(L, eta: float, gamma: float, k: int,
                         options: SolverOptions | None = None,
                         warm_bracket: tuple[float, float] | None = None):
    """Full solver result: (x, multiplier, residual, outer iterations).

    ``warm_bracket`` seeds the multiplier search (useful when solving a
    slowly drifting sequence of problems); if it misses the root, the
    provably valid default bracket is used.
    """
    L = _validate(L, eta, gamma, k)
    opts = options or SolverOptions()
    inv_eta = 1.0 / eta
    args = (L, inv_eta, gamma, k, _COORD_EPS, opts.kkt_tolerance,
            opts.max_bisection_iters, opts.coordinate_tolerance)

    if warm_bracket is not None:
        blo, bhi = warm_bracket
        if math.isfinite(blo) and math.isfinite(bhi) and blo < bhi:
            x, lam, resid, iters = kernels.capped_simplex_core(*args, blo, bhi)
            if resid <= opts.kkt_tolerance:
                return x, lam, resid, iters

    lam_lo, lam_hi = _spec_bracket(L, inv_eta, gamma, k)
    width = max(lam_hi - lam_lo, 1.0)
    for _ in range(8):  # doubling guard; the initial bracket is already valid
        x, lam, resid, iters = kernels.capped_simplex_core(*args, lam_lo, lam_hi)
        if resid <= opts.kkt_tolerance:
            return x, lam, resid, iters
        lam_lo -= width
        lam_hi += width
        width *= 2.0
    raise SolverError("capped-simplex bisection did not converge", resid)


def capped_simplex_argmin(L, eta: float, gamma: float, k: int,
                          options: SolverOptions | None = None) -> np.ndarray:
    """Minimize <L, x> + (1/eta) * sum_i psi(x_i) over {sum x = k, 0 <= x <= 1}."""
    x, _, _, _ = solve_capped_simplex(L, eta, gamma, k, options)
    return x
