"""The four learning policies over a shared select/update interface.

Two optimistic index policies share a mean tracker and differ only in the
confidence radius (horizon-free vs log-t).  The adversarial pair consists
of an exponential-weights policy with weight capping plus dependent
rounding, and a follow-the-regularized-leader policy solving a separable
convex program each round.

Module-level functions are the documented operations on explicit state;
the policy classes below wrap them for the experiment runner.  Array
arguments are indexed by arm position (position i holds arm i+1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels, solvers
from .core import Action, Feedback


# ---------------------------------------------------------------------------
# policy state
# ---------------------------------------------------------------------------

@dataclass
class MeanTrackerState:
    """Per-arm observation counts and empirical means (initialized to 1)."""

    counts: np.ndarray
    empirical_means: np.ndarray

    @classmethod
    def fresh(cls, m: int) -> "MeanTrackerState":
        return cls(np.zeros(m, dtype=np.int64), np.ones(m, dtype=np.float64))

    @property
    def m(self) -> int:
        return self.counts.shape[0]


@dataclass
class Exp3mState:
    """Positive exponential weights plus the mixing coefficient."""

    weights: np.ndarray
    gamma: float

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")

    @classmethod
    def fresh(cls, m: int, gamma: float) -> "Exp3mState":
        return cls(np.ones(m, dtype=np.float64), gamma)

    @property
    def m(self) -> int:
        return self.weights.shape[0]


@dataclass
class HybridState:
    """Cumulative loss estimates, regularizer parameter and round index."""

    cumulative_loss: np.ndarray
    gamma: float
    round: int = 1

    @classmethod
    def fresh(cls, m: int, gamma: float) -> "HybridState":
        return cls(np.zeros(m, dtype=np.float64), gamma)

    @property
    def m(self) -> int:
        return self.cumulative_loss.shape[0]


# ---------------------------------------------------------------------------
# optimistic index policies
# ---------------------------------------------------------------------------

def lnplus(x: float) -> float:
    """ln(max(1, x)); requires x > 0."""
    if x <= 0:
        raise ValueError(f"lnplus requires x > 0, got {x}")
    return math.log(x) if x > 1.0 else 0.0


def moss_radius(t_i: int, delta: float) -> float:
    """Horizon-free confidence radius sqrt(lnplus(1/(delta*T_i))/T_i).

    Infinite for unplayed arms.
    """
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if t_i < 0:
        raise ValueError(f"count must be nonnegative, got {t_i}")
    if t_i == 0:
        return math.inf
    return math.sqrt(lnplus(1.0 / (delta * t_i)) / t_i)


def cucb_radius(t_i: int, t: float) -> float:
    """log-t confidence radius sqrt(3*ln(t)/(2*T_i)); infinite for unplayed arms."""
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t}")
    if t_i < 0:
        raise ValueError(f"count must be nonnegative, got {t_i}")
    if t_i == 0:
        return math.inf
    return math.sqrt(1.5 * math.log(t) / t_i)


def ucb_select(state: MeanTrackerState, radius_rule, k: int) -> Action:
    """Top-k arms by min(empirical mean + radius, 1), ties to the lowest index.

    ``radius_rule`` maps an observation count to a radius.  The top-k
    oracle is exact for every supported feedback mode because each reward
    form is monotone in the optimistic means.
    """
    rho = np.array([radius_rule(int(c)) for c in state.counts])
    mu_bar = np.minimum(state.empirical_means + rho, 1.0)
    return Action.from_indices(kernels.topk_indices(mu_bar, k))


def mean_update(state: MeanTrackerState, feedback: Feedback) -> MeanTrackerState:
    """Incremental-mean update for the observed arms (count first, then mean)."""
    kernels.mean_update(state.counts, state.empirical_means,
                        feedback.indices, feedback.outcomes)
    return state


# ---------------------------------------------------------------------------
# exponential weights with capping
# ---------------------------------------------------------------------------

def exp3m_alpha(weights: np.ndarray, k: int, gamma: float) -> float:
    """Capping threshold: the unique alpha with
    alpha / (sum_{w_i >= alpha} alpha + sum_{w_i < alpha} w_i) = (1/k - gamma/m)/(1 - gamma).

    Solved by scanning capped prefixes of the descending weights; requires
    the capping precondition max(w) >= rhs * sum(w).
    """
    weights = np.asarray(weights, dtype=np.float64)
    m = weights.size
    c = (1.0 / k - gamma / m) / (1.0 - gamma)
    if weights.max() < c * weights.sum():
        raise ValueError("capping threshold condition not met; skip capping")
    _, alpha, _ = kernels.exp3m_dist(weights, k, gamma)
    return float(alpha)


def exp3m_probabilities(state: Exp3mState, k: int):
    """Per-arm play probabilities, threshold alpha (nan without capping)
    and the capped-set mask.  Probabilities sum to k; capped arms get 1."""
    p, alpha, capped = kernels.exp3m_dist(state.weights, k, state.gamma)
    return p, float(alpha), capped


def exp3m_round(state: Exp3mState, k: int, rng: np.random.Generator):
    """One selection round: returns (action, probabilities, capped mask)."""
    p, _, capped = exp3m_probabilities(state, k)
    return depround(p, rng), p, capped


def exp3m_update(state: Exp3mState, action: Action, p: np.ndarray,
                 capped: np.ndarray, rewards: np.ndarray) -> Exp3mState:
    """Multiplicative update w_i *= exp(k*gamma*(x_i/p_i)/m) for played,
    uncapped arms; capped arms keep their weights."""
    k = int(round(float(np.sum(p))))  # probabilities always sum to k
    kernels.exp3m_update(state.weights, capped, action.indices,
                         np.asarray(rewards, dtype=np.float64), p, k,
                         state.gamma)
    return state


def depround(p: np.ndarray, rng: np.random.Generator) -> Action:
    """Round a fractional vector with integer sum k to a size-k subset whose
    inclusion marginals equal p exactly.

    Repeatedly moves mass between the two lowest-index fractional
    coordinates; every iteration makes at least one coordinate integral,
    so the loop runs at most m times.
    """
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("every entry must lie in [0, 1]")
    total = p.sum()
    k = int(round(total))
    if abs(total - k) > 1e-9 or k < 1:
        raise ValueError(f"entries must sum to a positive integer, got {total}")
    q = p.copy()
    kernels.depround_core(q, rng.random(p.size))
    idx0 = np.nonzero(q > 0.5)[0]
    if idx0.size != k:
        raise RuntimeError(f"rounding produced {idx0.size} arms, expected {k}")
    return Action.from_indices(idx0)


# ---------------------------------------------------------------------------
# follow the regularized leader
# ---------------------------------------------------------------------------

def hybrid_gamma(m: int, k: int) -> float:
    """Regularizer parameter: 1 when k <= m/2, else min(1, 1/sqrt(log2(m/(m-k))))."""
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= k < m, got k={k}, m={m}")
    if 2 * k <= m:
        return 1.0
    return min(1.0, 1.0 / math.sqrt(math.log2(m / (m - k))))


def hybrid_round(state: HybridState, k: int, m: int, rng: np.random.Generator,
                 options: solvers.SolverOptions | None = None):
    """One selection round: the regularized leader x_t over the capped
    simplex with learning rate 1/sqrt(t), then a size-k action sampled by
    dependent rounding (whose marginals are exactly x_t)."""
    if state.m != m:
        raise ValueError(f"state has {state.m} arms, expected {m}")
    eta = 1.0 / math.sqrt(state.round)
    x = solvers.capped_simplex_argmin(state.cumulative_loss, eta, state.gamma,
                                      k, options)
    return depround(x, rng), x


def hybrid_estimator(feedback: Feedback, action: Action, x: np.ndarray) -> np.ndarray:
    """Importance-weighted loss estimate: rewards X map to losses o = -X,
    estimate (o_i+1)/x_i - 1 for played arms and -1 elsewhere."""
    idx0 = action.indices
    if np.any(x[idx0] <= 0.0):
        raise RuntimeError("fractional point must be positive on played arms")
    ell = np.full(x.shape[0], -1.0)
    obs = np.zeros(x.shape[0])
    obs[feedback.indices] = feedback.outcomes
    ell[idx0] = (1.0 - obs[idx0]) / x[idx0] - 1.0
    return ell


# ---------------------------------------------------------------------------
# runner-facing policy objects (0-based index arrays in, same out)
# ---------------------------------------------------------------------------

class CmossPolicy:
    """Optimistic top-k with the horizon-free radius."""

    name = "cmoss"

    def __init__(self, m: int, k: int, delta: float):
        if not 0 < delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        self.k = k
        self.delta = delta
        self.state = MeanTrackerState.fresh(m)

    def select(self, t: int) -> np.ndarray:
        mu_bar = kernels.cmoss_mu_bar(self.state.counts,
                                      self.state.empirical_means, self.delta)
        return kernels.topk_indices(mu_bar, self.k)

    def update(self, arms0: np.ndarray, outcomes: np.ndarray) -> None:
        kernels.mean_update(self.state.counts, self.state.empirical_means,
                            arms0, outcomes)


class CucbPolicy:
    """Optimistic top-k with the log-t radius."""

    name = "cucb"

    def __init__(self, m: int, k: int):
        self.k = k
        self.state = MeanTrackerState.fresh(m)

    def select(self, t: int) -> np.ndarray:
        mu_bar = kernels.cucb_mu_bar(self.state.counts,
                                     self.state.empirical_means, float(t))
        return kernels.topk_indices(mu_bar, self.k)

    def update(self, arms0: np.ndarray, outcomes: np.ndarray) -> None:
        kernels.mean_update(self.state.counts, self.state.empirical_means,
                            arms0, outcomes)


class Exp3mPolicy:
    """Exponential weights with capping and dependent rounding."""

    name = "exp3m"

    def __init__(self, m: int, k: int, gamma: float, rng: np.random.Generator):
        self.m = m
        self.k = k
        self.rng = rng
        self.state = Exp3mState.fresh(m, gamma)
        self._p: np.ndarray | None = None
        self._capped: np.ndarray | None = None

    def select(self, t: int) -> np.ndarray:
        p, _, capped = kernels.exp3m_dist(self.state.weights, self.k,
                                          self.state.gamma)
        self._p = p
        self._capped = capped
        q = p.copy()
        kernels.depround_core(q, self.rng.random(self.m))
        return np.nonzero(q > 0.5)[0]

    def update(self, arms0: np.ndarray, outcomes: np.ndarray) -> None:
        kernels.exp3m_update(self.state.weights, self._capped, arms0,
                             outcomes, self._p, self.k, self.state.gamma)


class HybridPolicy:
    """Follow the regularized leader with per-round dependent rounding."""

    name = "hybrid"

    def __init__(self, m: int, k: int, rng: np.random.Generator,
                 options: solvers.SolverOptions | None = None):
        self.m = m
        self.k = k
        self.rng = rng
        self.state = HybridState.fresh(m, hybrid_gamma(m, k))
        self.options = options or solvers.SolverOptions()
        self._x: np.ndarray | None = None
        self._lam: float | None = None
        self._bracket: tuple[float, float] | None = None

    def select(self, t: int) -> np.ndarray:
        eta = 1.0 / math.sqrt(t)
        x, lam, _, _ = solvers.solve_capped_simplex(
            self.state.cumulative_loss, eta, self.state.gamma, self.k,
            self.options, warm_bracket=self._bracket)
        self._x = x
        self._lam = lam
        q = x.copy()
        kernels.depround_core(q, self.rng.random(self.m))
        return np.nonzero(q > 0.5)[0]

    def update(self, arms0: np.ndarray, outcomes: np.ndarray) -> None:
        x = self._x
        ell = np.full(self.m, -1.0)
        ell[arms0] = (1.0 - outcomes) / x[arms0] - 1.0
        L = self.state.cumulative_loss
        L += ell
        t = self.state.round
        self.state.round = t + 1
        # next round's multiplier bracket: raising any loss can only lower
        # the multiplier (and vice versa), plus slack for the 1/sqrt(t) drift
        lam = self._lam
        pad = 0.01 + 0.6 * float(np.abs(L + lam).max()) / t
        self._bracket = (lam - max(float(ell.max()), 0.0) - pad,
                         lam + 1.0 + pad)


ALGORITHMS = ("cmoss", "cucb", "exp3m", "hybrid")


def make_policy(algorithm: str, m: int, k: int, *, delta: float = 1e-5,
                gamma: float = 0.01, rng: np.random.Generator | None = None):
    """Instantiate a fresh policy by name."""
    if algorithm == "cmoss":
        return CmossPolicy(m, k, delta)
    if algorithm == "cucb":
        return CucbPolicy(m, k)
    if algorithm == "exp3m":
        return Exp3mPolicy(m, k, gamma, rng or np.random.default_rng())
    if algorithm == "hybrid":
        return HybridPolicy(m, k, rng or np.random.default_rng())
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")
