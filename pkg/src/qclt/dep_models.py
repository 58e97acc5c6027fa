"""Locally dependent sequence generators with exact dependency-graph metadata.

Three model kinds are supported:

* ``iid``        X_t = mu + zeta_t
* ``ma_q``       X_t = mu + zeta_t + sum_{i=1..q} c_i zeta_{t-i}
* ``window_fn``  X_t = mu + sum_{j=0..m} zeta_{t-j}  (unnormalized moving sum)

Random streams come from a Philox counter-based generator.  The key for
replication ``r`` under master seed ``s`` is ``mix64(s ^ mix64(r + GOLDEN))``
where ``mix64`` is the SplitMix64 finalizer, so a replication's draws depend
only on ``(s, r)`` and never on how replications are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dist_core import MarginalSpec, marginal_from_tag
from .errors import DomainError

MODEL_KINDS = ("iid", "ma_q", "window_fn")

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finalizer: a bijective avalanche mix on 64-bit integers."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """64-bit stream key for replication ``index`` under ``master``."""
    return mix64((master & _MASK64) ^ mix64((index + _GOLDEN) & _MASK64))


def stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "iid"
    innovation: str = "standard-normal"
    innovation_params: tuple[float, ...] = ()
    mu: float = 0.0
    coefficients: tuple[float, ...] = ()
    width: int = 0
    n: int = 1000

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise DomainError(f"unknown model kind {self.kind!r}")
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        object.__setattr__(self, "innovation_params", tuple(float(p) for p in self.innovation_params))
        if self.width < 0:
            raise DomainError("window width must be >= 0")
        if self.n < 3:
            raise DomainError("sample length n must be >= 3")

    @property
    def q(self) -> int:
        """Dependence range: X_i and X_j are independent once |i - j| > q."""
        if self.kind == "ma_q":
            return len(self.coefficients)
        if self.kind == "window_fn":
            return self.width
        return 0


@dataclass(frozen=True)
class DependencyMeta:
    D1: int
    D2: int
    D3: int

    def __post_init__(self):
        if self.D1 < 1 or self.D2 < 2 or self.D3 < 3:
            raise DomainError(f"invalid dependency parameters {self}")


@dataclass(frozen=True)
class DependencyModel:
    config: ModelConfig
    marginal: MarginalSpec
    meta: DependencyMeta
    innovation: MarginalSpec = field(repr=False)

    @property
    def q(self) -> int:
        return self.config.q

    @property
    def filter(self) -> np.ndarray:
        """Weights (w_0, ..., w_q) with X_t = mu + sum_j w_j zeta_{t-j}."""
        cfg = self.config
        if cfg.kind == "ma_q":
            return np.array((1.0,) + cfg.coefficients)
        if cfg.kind == "window_fn":
            return np.ones(cfg.width + 1)
        return np.ones(1)

    @property
    def is_gaussian(self) -> bool:
        return self.innovation.family in ("standard-normal", "normal")

    def lag_correlations(self) -> np.ndarray:
        """Correlations rho_h of (X_t, X_{t+h}) for h = 0..q; Gaussian models only."""
        if not self.is_gaussian:
            raise DomainError("lag correlations are defined here only for Gaussian innovations")
        w = self.filter
        total = float(w @ w)
        return np.array([float(w[: len(w) - h] @ w[h:]) / total for h in range(len(w))])


def _dependency_meta(q: int) -> DependencyMeta:
    # Interval neighbourhoods: N_i = [i-q, i+q], N_ij, N_ijk their worst-case unions.
    if q == 0:
        return DependencyMeta(1, 2, 3)
    return DependencyMeta(2 * q + 1, 3 * q + 1, 4 * q + 1)


def build_model(config: ModelConfig, levels=(0.5,)) -> DependencyModel:
    """Assemble a model with its exact marginal law and dependency parameters."""
    innovation = marginal_from_tag(config.innovation, config.innovation_params, levels)
    if config.kind == "iid":
        marginal = innovation.shifted(config.mu)
    else:
        w = (np.array((1.0,) + config.coefficients) if config.kind == "ma_q"
             else np.ones(config.width + 1))
        fam = innovation.family
        if fam in ("standard-normal", "normal"):
            mean, var = (0.0, 1.0) if fam == "standard-normal" else innovation.params
            marginal = MarginalSpec(
                "normal", (mean * w.sum(), var * float(w @ w)), levels, loc=config.mu)
        elif fam == "cauchy":
            loc, scale = innovation.params
            marginal = MarginalSpec(
                "cauchy", (loc * w.sum(), scale * float(np.abs(w).sum())), levels, loc=config.mu)
        else:
            raise DomainError(
                f"{config.kind} with {fam} innovations has no closed-form marginal")
    return DependencyModel(config, marginal, _dependency_meta(config.q), innovation)


def generate(model: DependencyModel, n: int, seed: int) -> np.ndarray:
    """Draw X_1..X_n; a pure function of (model, n, seed)."""
    if n < 3:
        raise DomainError("n must be >= 3")
    rng = stream(seed)
    q = model.q
    zeta = model.innovation.sample(rng, n + q)
    if q == 0:
        return model.config.mu + zeta
    # X_t = mu + sum_j w_j zeta_{t-j}; 'valid' convolution keeps exactly n outputs.
    return model.config.mu + np.convolve(zeta, model.filter, mode="valid")


def theta(model: DependencyModel, grid) -> np.ndarray:
    """Densities at the grid anchors (identical marginals, so the average is F'(m_k))."""
    vals = np.array([model.marginal.pdf(m) for m in grid.anchors], dtype=float)
    if np.any(vals <= np.finfo(float).eps):
        raise DomainError(f"density vanishes at a quantile anchor: {vals}")
    return vals


def model_grid(model: DependencyModel, levels):
    """Quantile grid anchored at the model marginal's true quantiles."""
    from .quantile_core import QuantileGrid

    marginal = model.marginal.with_levels(levels)
    anchors = marginal.anchors
    dens = tuple(float(marginal.pdf(m)) for m in anchors)
    if min(dens) <= np.finfo(float).eps:
        raise DomainError(f"density vanishes at a quantile anchor: {dens}")
    return QuantileGrid(tuple(levels), anchors, dens)


def lag_independence_range(model: DependencyModel) -> int:
    """Smallest lag at which coordinates are independent."""
    return model.q + 1


def empirical_marginal_ks(model: DependencyModel, n: int, seed: int) -> float:
    """KS distance between one generated path and the claimed marginal."""
    x = np.sort(generate(model, n, seed))
    F = np.asarray(model.marginal.cdf(x))
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


__all__ = [
    "MODEL_KINDS", "ModelConfig", "DependencyMeta", "DependencyModel", "build_model",
    "generate", "theta", "model_grid", "derive_seed", "mix64", "stream",
    "lag_independence_range", "empirical_marginal_ks",
]
