"""Instance construction: synthetic means, affinity-score ingestion with
rescaling, and experiment configuration parsing.

Config files are plain text, one ``key = value`` per line, ``#`` comments.
Keys match the CLI flags: algorithm, m, k, horizon, delta, gamma, feedback,
order, means, seed, runs, out.  The ``means`` value is either
``uniform(lo,hi)`` or ``affinity(users_path,items_path,low|high)``.
Feature files are UTF-8 text with one whitespace-separated vector per row.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import EXAMINATION_ORDERS, FEEDBACK_MODES

ALGORITHMS = ("cmoss", "cucb", "exp3m", "hybrid")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


# ---------------------------------------------------------------------------
# mean sources
# ---------------------------------------------------------------------------

def gen_synthetic_means(m: int, lo: float, hi: float, seed) -> np.ndarray:
    """m independent uniform draws on (lo, hi), reproducible from the seed."""
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"need 0 <= lo < hi <= 1, got ({lo}, {hi})")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return lo + (hi - lo) * rng.random(m)


def load_feature_file(path) -> np.ndarray:
    """One vector per line, whitespace-separated decimal reals."""
    vectors = np.loadtxt(path, dtype=np.float64, ndmin=2)
    if vectors.size == 0:
        raise ValueError(f"no feature vectors in {path}")
    return vectors


def affinity_scores(user_vectors: np.ndarray, item_vectors: np.ndarray) -> np.ndarray:
    """Dot-product affinity matrix of unit-normalized feature vectors.

    Non-unit rows are normalized with a warning rather than rejected.
    """
    users = np.atleast_2d(np.asarray(user_vectors, dtype=np.float64))
    items = np.atleast_2d(np.asarray(item_vectors, dtype=np.float64))
    if users.shape[1] != items.shape[1]:
        raise ValueError(
            f"feature dimensions differ: users {users.shape[1]}, items {items.shape[1]}")
    unorm = np.linalg.norm(users, axis=1)
    inorm = np.linalg.norm(items, axis=1)
    if np.any(unorm == 0.0) or np.any(inorm == 0.0):
        raise ValueError("zero feature vectors cannot be normalized")
    if not (np.allclose(unorm, 1.0, atol=1e-6) and np.allclose(inorm, 1.0, atol=1e-6)):
        warnings.warn("feature vectors are not unit-norm; normalizing",
                      stacklevel=2)
        users = users / unorm[:, None]
        items = items / inorm[:, None]
    return users @ items.T


def rescale_scores(scores: np.ndarray, regime: str) -> np.ndarray:
    """Min-max rescale raw scores into [0, 0.1] (low) or [0.5, 0.6] (high)."""
    if regime not in ("low", "high"):
        raise ValueError(f"regime must be 'low' or 'high', got {regime!r}")
    scores = np.asarray(scores, dtype=np.float64)
    smin, smax = scores.min(), scores.max()
    if smax <= smin:
        raise ValueError("all scores are equal; min-max rescaling is degenerate")
    unit = (scores - smin) / (smax - smin)
    return 0.1 * unit if regime == "low" else 0.5 + 0.1 * unit


def sample_arms(scores: np.ndarray, m: int, seed) -> np.ndarray:
    """m values sampled without replacement, reproducible from the seed."""
    pool = np.asarray(scores, dtype=np.float64).ravel()
    if pool.size < m:
        raise ValueError(f"need at least {m} scores, got {pool.size}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return pool[rng.choice(pool.size, size=m, replace=False)]


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeanSource:
    """Either uniform(lo, hi) or an affinity-file pipeline."""

    kind: str  # "uniform" | "affinity"
    lo: float = 0.0
    hi: float = 0.1
    users_path: str = ""
    items_path: str = ""
    regime: str = "low"

    def spec(self) -> str:
        if self.kind == "uniform":
            return f"uniform({self.lo:g},{self.hi:g})"
        return f"affinity({self.users_path},{self.items_path},{self.regime})"


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str = "cmoss"
    m: int = 30
    k: int = 10
    horizon: int = 100000
    delta: float = 1e-5
    gamma_exp3m: float = 0.01
    feedback_mode: str = "semi_bandit"
    examination_order: str = "descending"
    mean_source: MeanSource = field(default_factory=lambda: MeanSource("uniform"))
    base_seed: int = 2025
    runs: int = 10
    output_path: str = "results/experiment"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.m < 1:
            raise ConfigError(f"m must be positive, got {self.m}")
        if self.k < 1 or self.k > self.m:
            raise ConfigError(f"k must satisfy 1 <= k <= m, got k={self.k}, m={self.m}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if self.algorithm == "cmoss" and not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.algorithm == "exp3m" and not 0 < self.gamma_exp3m <= 1:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma_exp3m}")
        if self.feedback_mode not in FEEDBACK_MODES:
            raise ConfigError(f"feedback must be one of {FEEDBACK_MODES}, got {self.feedback_mode!r}")
        if self.examination_order not in EXAMINATION_ORDERS:
            raise ConfigError(f"order must be one of {EXAMINATION_ORDERS}, got {self.examination_order!r}")
        if self.feedback_mode != "semi_bandit" and self.algorithm in ("exp3m", "hybrid"):
            raise ConfigError(
                f"{self.algorithm} supports semi_bandit feedback only; "
                f"cascading feedback needs cmoss or cucb")
        if self.algorithm == "hybrid" and self.k >= self.m:
            raise ConfigError(f"hybrid needs k < m, got k={self.k}, m={self.m}")


_KEYS = ("algorithm", "m", "k", "horizon", "delta", "gamma", "feedback",
         "order", "means", "seed", "runs", "out")


def _parse_mean_source(value: str) -> MeanSource:
    value = value.strip()
    if value.startswith("uniform(") and value.endswith(")"):
        parts = value[len("uniform("):-1].split(",")
        if len(parts) != 2:
            raise ConfigError(f"means: expected uniform(lo,hi), got {value!r}")
        try:
            lo, hi = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ConfigError(f"means: bad uniform bounds in {value!r}") from exc
        if not 0.0 <= lo < hi <= 1.0:
            raise ConfigError(f"means: need 0 <= lo < hi <= 1, got {value!r}")
        return MeanSource("uniform", lo=lo, hi=hi)
    if value.startswith("affinity(") and value.endswith(")"):
        parts = [s.strip() for s in value[len("affinity("):-1].split(",")]
        if len(parts) != 3 or parts[2] not in ("low", "high"):
            raise ConfigError(
                f"means: expected affinity(users_path,items_path,low|high), got {value!r}")
        return MeanSource("affinity", users_path=parts[0], items_path=parts[1],
                          regime=parts[2])
    raise ConfigError(f"means: unrecognized source {value!r}")


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Parse key-value config text; keyword overrides win on conflict."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate config key {key!r}")
        values[key] = value
    values.update({k: v for k, v in overrides.items() if v is not None})

    kwargs: dict = {}

    def take(key, conv, target):
        if key in values:
            raw = values[key]
            try:
                kwargs[target] = conv(raw) if isinstance(raw, str) else raw
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key}: cannot parse {raw!r}") from exc

    take("algorithm", str, "algorithm")
    take("m", int, "m")
    take("k", int, "k")
    take("horizon", int, "horizon")
    take("delta", float, "delta")
    take("gamma", float, "gamma_exp3m")
    take("feedback", str, "feedback_mode")
    take("order", str, "examination_order")
    take("seed", int, "base_seed")
    take("runs", int, "runs")
    take("out", str, "output_path")
    if "means" in values:
        raw = values["means"]
        kwargs["mean_source"] = _parse_mean_source(raw) if isinstance(raw, str) else raw
    return ExperimentConfig(**kwargs)


def load_config(path, **overrides) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), **overrides)


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical config text; parse_config(serialize_config(c)) == c."""
    lines = [
        f"algorithm = {config.algorithm}",
        f"m = {config.m}",
        f"k = {config.k}",
        f"horizon = {config.horizon}",
        f"delta = {config.delta!r}",
        f"gamma = {config.gamma_exp3m!r}",
        f"feedback = {config.feedback_mode}",
        f"order = {config.examination_order}",
        f"means = {config.mean_source.spec()}",
        f"seed = {config.base_seed}",
        f"runs = {config.runs}",
        f"out = {config.output_path}",
    ]
    return "\n".join(lines) + "\n"


def build_means(config: ExperimentConfig, rng) -> np.ndarray:
    """Materialize the config's mean vector using the given stream."""
    src = config.mean_source
    if src.kind == "uniform":
        return gen_synthetic_means(config.m, src.lo, src.hi, rng)
    users = load_feature_file(src.users_path)
    items = load_feature_file(src.items_path)
    scores = rescale_scores(affinity_scores(users, items), src.regime)
    return sample_arms(scores, config.m, rng)
