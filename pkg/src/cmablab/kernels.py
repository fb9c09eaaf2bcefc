"""Hot inner-loop kernels, numba-jitted with a pure-numpy fallback.

Backend selection is driven by the ``CMABLAB_NUMBA`` environment variable:

* unset / ``auto``  -- use numba when importable, else fall back to numpy
* ``0`` / ``off``   -- force the pure-numpy path
* ``1`` / ``on``    -- require numba (ImportError if missing)

``BACKEND`` reports the active choice.  ``numpy_impls`` always holds the
fallback implementations so both paths can be compared (see
``cmablab.benchmark`` and the kernel equivalence tests).

All kernels take plain numpy arrays.  Arm indices here are 0-based; the
public API layer converts to the 1-based arm identifiers.
"""

from __future__ import annotations

import math
import os

import numpy as np

_FLAG = os.environ.get("CMABLAB_NUMBA", "auto").strip().lower()

if _FLAG in ("0", "off", "false", "numpy"):
    HAVE_NUMBA = False
elif _FLAG in ("1", "on", "true", "numba"):
    from numba import njit  # noqa: F401  (import error is the intended failure)

    HAVE_NUMBA = True
else:
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# loop sources (compiled with numba when active)
# ---------------------------------------------------------------------------

def _topk_src(scores, k):
    # Top-k by descending score, ties broken by lowest index.  Selection
    # scan keeps the tie-break explicit instead of relying on sort stability.
    m = scores.shape[0]
    taken = np.zeros(m, np.bool_)
    out = np.empty(k, np.int64)
    for j in range(k):
        best = -1
        best_val = -np.inf
        for i in range(m):
            if not taken[i] and scores[i] > best_val:
                best = i
                best_val = scores[i]
        taken[best] = True
        out[j] = best
    return out


def _cmoss_mu_bar_src(counts, mu_hat, delta):
    m = counts.shape[0]
    mu_bar = np.empty(m)
    for i in range(m):
        ti = counts[i]
        if ti == 0:
            mu_bar[i] = 1.0
        else:
            z = 1.0 / (delta * ti)
            if z > 1.0:
                v = mu_hat[i] + math.sqrt(math.log(z) / ti)
            else:
                v = mu_hat[i]
            mu_bar[i] = 1.0 if v > 1.0 else v
    return mu_bar


def _cucb_mu_bar_src(counts, mu_hat, t):
    m = counts.shape[0]
    mu_bar = np.empty(m)
    c = 1.5 * math.log(t)
    for i in range(m):
        ti = counts[i]
        if ti == 0:
            mu_bar[i] = 1.0
        else:
            v = mu_hat[i] + math.sqrt(c / ti)
            mu_bar[i] = 1.0 if v > 1.0 else v
    return mu_bar


def _mean_update_src(counts, mu_hat, arms, outcomes):
    for n in range(arms.shape[0]):
        i = arms[n]
        counts[i] += 1
        mu_hat[i] += (outcomes[n] - mu_hat[i]) / counts[i]


def _exp3m_dist_src(weights, k, gamma):
    # Probabilities, capping threshold alpha (nan when capping is off) and
    # the capped set.  Capped arms get probability exactly 1.
    m = weights.shape[0]
    total = 0.0
    wmax = 0.0
    for i in range(m):
        total += weights[i]
        if weights[i] > wmax:
            wmax = weights[i]
    c = (1.0 / k - gamma / m) / (1.0 - gamma)
    capped = np.zeros(m, np.bool_)
    alpha = np.nan
    wsum = total
    if wmax >= c * total:
        ws = np.sort(weights)[::-1]
        # tail sums accumulated backward (a total-minus-prefix difference
        # cancels catastrophically when the tail is tiny)
        tail = np.empty(m)
        acc = 0.0
        for j in range(m - 1, -1, -1):
            acc += ws[j]
            tail[j] = acc
        # smallest capped prefix whose linear solution is consistent
        found = False
        for n in range(1, m):
            denom = 1.0 - n * c
            if denom <= 0.0:
                break
            a = c * tail[n] / denom
            if ws[n - 1] >= a and a > ws[n]:
                alpha = a
                found = True
                break
        if not found:
            if abs(c * m - 1.0) <= 1e-12:
                # c = 1/m (k = m, or degenerate ties): cap everything
                alpha = ws[m - 1]
            else:
                alpha = wmax
        wsum = 0.0
        for i in range(m):
            if weights[i] >= alpha:
                capped[i] = True
                wsum += alpha
            else:
                wsum += weights[i]
    p = np.empty(m)
    for i in range(m):
        if capped[i]:
            p[i] = 1.0
        else:
            pi = k * ((1.0 - gamma) * weights[i] / wsum + gamma / m)
            if pi > 1.0:
                pi = 1.0
            elif pi < 0.0:
                pi = 0.0
            p[i] = pi
    return p, alpha, capped


def _exp3m_update_src(weights, capped, arms, outcomes, p, k, gamma):
    m = weights.shape[0]
    coef = k * gamma / m
    for n in range(arms.shape[0]):
        i = arms[n]
        if not capped[i]:
            weights[i] *= math.exp(coef * (outcomes[n] / p[i]))
    wmax = 0.0
    for i in range(m):
        if weights[i] > wmax:
            wmax = weights[i]
    if wmax > 1e300:
        # rescale; probabilities depend only on weight ratios
        inv = 1.0 / wmax
        for i in range(m):
            weights[i] *= inv


def _depround_src(p, u):
    # Dependent rounding on p (in place) using the pre-drawn uniforms u
    # (at most len(p) entries are consumed).  Pairs are the two
    # lowest-index fractional coordinates; every iteration makes at least
    # one coordinate exactly integral.  Returns the iteration count.
    m = p.shape[0]
    i = -1
    j = -1
    nxt = 0
    while nxt < m:
        if 0.0 < p[nxt] < 1.0:
            if i < 0:
                i = nxt
            else:
                j = nxt
                nxt += 1
                break
        nxt += 1
    it = 0
    while j >= 0:
        na = 1.0 - p[i]
        nb = 1.0 - p[j]
        alpha = na if na < p[j] else p[j]
        beta = p[i] if p[i] < nb else nb
        if u[it] < beta / (alpha + beta):
            # (p_i + alpha, p_j - alpha)
            if p[j] < na:
                p[i] += p[j]
                p[j] = 0.0
            elif p[j] > na:
                p[j] -= na
                p[i] = 1.0
            else:
                p[i] = 1.0
                p[j] = 0.0
        else:
            # (p_i - beta, p_j + beta)
            if p[i] < nb:
                p[j] += p[i]
                p[i] = 0.0
            elif p[i] > nb:
                p[i] -= nb
                p[j] = 1.0
            else:
                p[i] = 0.0
                p[j] = 1.0
        it += 1
        if not (0.0 < p[i] < 1.0):
            if 0.0 < p[j] < 1.0:
                i = j
            else:
                i = -1
                while nxt < m:
                    if 0.0 < p[nxt] < 1.0:
                        i = nxt
                        nxt += 1
                        break
                    nxt += 1
                if i < 0:
                    j = -1
                    break
        j = -1
        while nxt < m:
            if 0.0 < p[nxt] < 1.0:
                j = nxt
                nxt += 1
                break
            nxt += 1
    if i >= 0:
        # single fractional leftover from accumulated rounding; snap it
        p[i] = 0.0 if p[i] < 0.5 else 1.0
    return it


def _make_depround_batch(core):
    def _depround_batch(p, uniforms):
        # Monte Carlo helper: round `p` once per row of `uniforms`.
        # Returns per-arm selection counts, the worst iteration count and
        # how many rounds returned the wrong subset size.
        m = p.shape[0]
        k = int(round(p.sum()))
        hits = np.zeros(m, np.int64)
        worst_iters = 0
        bad_size = 0
        q = np.empty(m)
        for r in range(uniforms.shape[0]):
            for i in range(m):
                q[i] = p[i]
            it = core(q, uniforms[r])
            if it > worst_iters:
                worst_iters = it
            size = 0
            for i in range(m):
                if q[i] > 0.5:
                    size += 1
                    hits[i] += 1
            if size != k:
                bad_size += 1
        return hits, worst_iters, bad_size
    return _depround_batch


def _capped_simplex_src(L, inv_eta, gamma, k, eps, kkt_tol, max_outer, ctol,
                        lam_lo, lam_hi):
    # Nested bisection for min <L,x> + inv_eta*sum(psi(x_i)) over the capped
    # simplex {sum x = k, 0 <= x <= 1} with psi(x) = -sqrt(x)+gamma(1-x)ln(1-x).
    # Outer bisection on the sum multiplier lambda; per-coordinate bisection
    # on the stationarity condition L_i + inv_eta*psi'(x) + lambda = 0.
    # x_i(lambda) is decreasing, so the solutions at the outer bracket ends
    # bound every inner solve; coordinates are only refined far enough to
    # certify the outer decision (the coordinate brackets give exact bounds
    # on sum x), with a full-tolerance polish at the final multiplier.
    m = L.shape[0]
    ubx = np.full(m, 1.0 - eps)  # componentwise bound: x(lam) <= x(lam_lo)
    lbx = np.full(m, eps)        # and x(lam) >= x(lam_hi)
    lo = np.empty(m)
    hi = np.empty(m)
    lam = 0.5 * (lam_lo + lam_hi)
    resid = np.inf
    iters = 0
    for it in range(max_outer):
        lam = 0.5 * (lam_lo + lam_hi)
        iters = it + 1
        for i in range(m):
            lo[i] = lbx[i]
            hi[i] = ubx[i]
        decided = False
        while not decided:
            # four halvings per unconverged coordinate, then re-check
            shrunk = False
            for i in range(m):
                a = lo[i]
                b = hi[i]
                for _ in range(4):
                    if b - a <= ctol:
                        break
                    shrunk = True
                    mid = 0.5 * (a + b)
                    g = L[i] + inv_eta * (-0.5 / math.sqrt(mid)
                                          - gamma * math.log1p(-mid)
                                          - gamma) + lam
                    if g < 0.0:
                        a = mid
                    else:
                        b = mid
                lo[i] = a
                hi[i] = b
            slo = 0.0
            shi = 0.0
            for i in range(m):
                slo += lo[i]
                shi += hi[i]
            if slo > k:
                # sum(x(lam)) > k for certain: the root lies above lam
                lam_lo = lam
                for i in range(m):
                    ubx[i] = hi[i]
                decided = True
            elif shi < k:
                lam_hi = lam
                for i in range(m):
                    lbx[i] = lo[i]
                decided = True
            elif shi - slo <= kkt_tol or not shrunk:
                # sum bounds straddle k and are tight: converged at this lam;
                # polish every coordinate to the coordinate tolerance, then
                # keep halving until the stationarity value itself is small
                # (near 0 the curvature blows up the g-residual of a fixed
                # x-width)
                for i in range(m):
                    a = lo[i]
                    b = hi[i]
                    while b - a > ctol:
                        mid = 0.5 * (a + b)
                        g = L[i] + inv_eta * (-0.5 / math.sqrt(mid)
                                              - gamma * math.log1p(-mid)
                                              - gamma) + lam
                        if g < 0.0:
                            a = mid
                        else:
                            b = mid
                    while b - a > 1e-17 + 1e-15 * a:
                        mid = 0.5 * (a + b)
                        g = L[i] + inv_eta * (-0.5 / math.sqrt(mid)
                                              - gamma * math.log1p(-mid)
                                              - gamma) + lam
                        if abs(g) <= 1e-7:
                            a = mid
                            b = mid
                        elif g < 0.0:
                            a = mid
                        else:
                            b = mid
                    lo[i] = a
                    hi[i] = b
                x = np.empty(m)
                s = 0.0
                for i in range(m):
                    x[i] = 0.5 * (lo[i] + hi[i])
                    s += x[i]
                return x, lam, abs(s - k), iters
        if lam_hi - lam_lo <= 1e-15 * (1.0 + abs(lam)):
            break  # resolution floor without convergence (bad bracket)
    x = np.empty(m)
    s = 0.0
    for i in range(m):
        x[i] = 0.5 * (lo[i] + hi[i])
        s += x[i]
    return x, lam, abs(s - k), iters


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def _topk_numpy(scores, k):
    return np.argsort(-scores, kind="stable")[:k].astype(np.int64)


def _cmoss_mu_bar_numpy(counts, mu_hat, delta):
    with np.errstate(divide="ignore", invalid="ignore"):
        z = 1.0 / (delta * counts)
        rho = np.sqrt(np.maximum(np.log(z), 0.0) / counts)
    rho[counts == 0] = np.inf
    return np.minimum(mu_hat + rho, 1.0)


def _cucb_mu_bar_numpy(counts, mu_hat, t):
    # 0/0 arises at t=1 for unplayed arms; the radius is patched to inf
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.sqrt(1.5 * math.log(t) / counts)
    rho[counts == 0] = np.inf
    return np.minimum(mu_hat + rho, 1.0)


def _mean_update_numpy(counts, mu_hat, arms, outcomes):
    counts[arms] += 1
    mu_hat[arms] += (outcomes - mu_hat[arms]) / counts[arms]


def _exp3m_dist_numpy(weights, k, gamma):
    m = weights.shape[0]
    total = weights.sum()
    wmax = weights.max()
    c = (1.0 / k - gamma / m) / (1.0 - gamma)
    capped = np.zeros(m, np.bool_)
    alpha = np.nan
    wsum = total
    if wmax >= c * total:
        ws = np.sort(weights)[::-1]
        tail = np.cumsum(ws[::-1])[::-1]  # tail[n] = sum of ws[n:]
        n = np.arange(1, m)
        denom = 1.0 - n * c
        with np.errstate(divide="ignore", invalid="ignore"):
            a = c * tail[1:] / denom
        ok = (denom > 0.0) & (ws[:-1] >= a) & (a > ws[1:])
        hits = np.nonzero(ok)[0]
        if hits.size:
            alpha = a[hits[0]]
        elif abs(c * m - 1.0) <= 1e-12:
            alpha = ws[m - 1]
        else:
            alpha = wmax
        capped = weights >= alpha
        wsum = alpha * capped.sum() + weights[~capped].sum()
    p = k * ((1.0 - gamma) * weights / wsum + gamma / m)
    np.clip(p, 0.0, 1.0, out=p)
    p[capped] = 1.0
    return p, alpha, capped


def _exp3m_update_numpy(weights, capped, arms, outcomes, p, k, gamma):
    live = ~capped[arms]
    sel = arms[live]
    weights[sel] *= np.exp((k * gamma / weights.shape[0])
                           * (outcomes[live] / p[sel]))
    wmax = weights.max()
    if wmax > 1e300:
        weights *= 1.0 / wmax


def _psi_prime_numpy(x, gamma):
    return -0.5 / np.sqrt(x) - gamma * np.log1p(-x) - gamma


def _half_steps_numpy(L, inv_eta, gamma, lam, lo, hi, ctol, steps):
    for _ in range(steps):
        live = hi - lo > ctol
        if not live.any():
            return False
        mid = 0.5 * (lo + hi)
        neg = L + inv_eta * _psi_prime_numpy(mid, gamma) + lam < 0.0
        adv = live & neg
        ret = live & ~neg
        lo[adv] = mid[adv]
        hi[ret] = mid[ret]
    return True


def _capped_simplex_numpy(L, inv_eta, gamma, k, eps, kkt_tol, max_outer, ctol,
                          lam_lo, lam_hi):
    # same scheme as the jitted source, vectorized across coordinates
    m = L.shape[0]
    ubx = np.full(m, 1.0 - eps)
    lbx = np.full(m, eps)
    lo = np.empty(m)
    hi = np.empty(m)
    lam = 0.5 * (lam_lo + lam_hi)
    iters = 0
    for it in range(max_outer):
        lam = 0.5 * (lam_lo + lam_hi)
        iters = it + 1
        lo[:] = lbx
        hi[:] = ubx
        while True:
            shrunk = _half_steps_numpy(L, inv_eta, gamma, lam, lo, hi, ctol, 4)
            slo = lo.sum()
            shi = hi.sum()
            if slo > k:
                lam_lo = lam
                ubx[:] = hi
                break
            if shi < k:
                lam_hi = lam
                lbx[:] = lo
                break
            if shi - slo <= kkt_tol or not shrunk:
                while _half_steps_numpy(L, inv_eta, gamma, lam, lo, hi, ctol, 8):
                    pass
                while True:  # stationarity polish, as in the jitted source
                    live = (hi - lo) > (1e-17 + 1e-15 * lo)
                    if not live.any():
                        break
                    mid = 0.5 * (lo + hi)
                    g = L + inv_eta * _psi_prime_numpy(mid, gamma) + lam
                    hit = live & (np.abs(g) <= 1e-7)
                    adv = live & ~hit & (g < 0.0)
                    ret = live & ~hit & (g >= 0.0)
                    lo[hit] = mid[hit]
                    hi[hit] = mid[hit]
                    lo[adv] = mid[adv]
                    hi[ret] = mid[ret]
                x = 0.5 * (lo + hi)
                return x, lam, abs(x.sum() - k), iters
        if lam_hi - lam_lo <= 1e-15 * (1.0 + abs(lam)):
            break
    x = 0.5 * (lo + hi)
    return x, lam, abs(x.sum() - k), iters


numpy_impls = {
    "topk_indices": _topk_numpy,
    "cmoss_mu_bar": _cmoss_mu_bar_numpy,
    "cucb_mu_bar": _cucb_mu_bar_numpy,
    "mean_update": _mean_update_numpy,
    "exp3m_dist": _exp3m_dist_numpy,
    "exp3m_update": _exp3m_update_numpy,
    "depround_core": _depround_src,  # inherently sequential; same loop
    "depround_batch": _make_depround_batch(_depround_src),
    "capped_simplex_core": _capped_simplex_numpy,
}

if HAVE_NUMBA:
    topk_indices = njit(cache=True)(_topk_src)
    cmoss_mu_bar = njit(cache=True)(_cmoss_mu_bar_src)
    cucb_mu_bar = njit(cache=True)(_cucb_mu_bar_src)
    mean_update = njit(cache=True)(_mean_update_src)
    exp3m_dist = njit(cache=True)(_exp3m_dist_src)
    exp3m_update = njit(cache=True)(_exp3m_update_src)
    depround_core = njit(cache=True)(_depround_src)
    depround_batch = njit(cache=True)(_make_depround_batch(depround_core))
    capped_simplex_core = njit(cache=True)(_capped_simplex_src)
else:
    topk_indices = _topk_numpy
    cmoss_mu_bar = _cmoss_mu_bar_numpy
    cucb_mu_bar = _cucb_mu_bar_numpy
    mean_update = _mean_update_numpy
    exp3m_dist = _exp3m_dist_numpy
    exp3m_update = _exp3m_update_numpy
    depround_core = _depround_src
    depround_batch = numpy_impls["depround_batch"]
    capped_simplex_core = _capped_simplex_numpy

_WARM = False


def warmup():
    """Compile every jitted kernel once (no-op on the numpy backend)."""
    global _WARM
    if _WARM:
        return
    counts = np.array([0, 2, 5], np.int64)
    mu_hat = np.array([1.0, 0.5, 0.25])
    topk_indices(mu_hat, 2)
    cmoss_mu_bar(counts, mu_hat, 1e-5)
    cucb_mu_bar(counts, mu_hat, 3.0)
    mean_update(counts.copy(), mu_hat.copy(),
                np.array([1], np.int64), np.array([1.0]))
    w = np.array([10.0, 1.0, 1.0, 1.0])
    p, alpha, capped = exp3m_dist(w, 2, 0.01)
    exp3m_update(w, capped, np.array([0, 1], np.int64),
                 np.array([1.0, 0.0]), p, 2, 0.01)
    depround_core(np.array([0.5, 0.75, 0.75]), np.full(3, 0.3))
    depround_batch(np.array([0.5, 0.75, 0.75]), np.full((2, 3), 0.3))
    capped_simplex_core(np.zeros(3), 1.0, 1.0, 1, 1e-12, 1e-10, 200, 1e-12,
                        -10.0, 10.0)
    _WARM = True
