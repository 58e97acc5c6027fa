"""Sample quantiles, empirical CDF distances and rectangle probabilities.

The sample quantile at level alpha is the supremum of the points x at which
at most floor(n * alpha) observations lie at or below x, which is the
(floor(n * alpha) + 1)-th order statistic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class QuantileGrid:
    levels: tuple[float, ...]
    anchors: tuple[float, ...]
    theta: tuple[float, ...]

    def __post_init__(self):
        levels = tuple(float(a) for a in self.levels)
        anchors = tuple(float(m) for m in self.anchors)
        theta = tuple(float(t) for t in self.theta)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "theta", theta)
        if not levels or not len(levels) == len(anchors) == len(theta):
            raise DomainError("grid needs matching, non-empty levels, anchors and densities")
        if any(not 0.0 < a < 1.0 for a in levels):
            raise DomainError(f"levels must lie in (0, 1): {levels}")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise DomainError(f"levels must be strictly increasing: {levels}")
        if any(b <= a for a, b in zip(anchors, anchors[1:])):
            raise DomainError(f"anchors must be strictly increasing: {anchors}")
        if any(t <= 0.0 for t in theta):
            raise DomainError(f"densities at the anchors must be positive: {theta}")

    @property
    def ell(self) -> int:
        return len(self.levels)

    @property
    def Theta(self) -> np.ndarray:
        return np.diag(self.theta)


@dataclass
class SimResult:
    """Monte Carlo output for one sample size."""

    n: int
    reps: int
    seed: int
    stats: np.ndarray = field(repr=False)
    ks: float
    rect_table: list[tuple[tuple[float, ...], float]] | None = None

    def __post_init__(self):
        if self.reps < 1:
            raise DomainError("SimResult needs at least one replication")
        if not 0.0 <= self.ks <= 1.0:
            raise DomainError(f"KS value out of range: {self.ks}")


def order_index(n: int, alpha: float) -> int:
    """0-based index of the order statistic returned by :func:`sample_quantile`.

    ``floor(n * alpha)`` is taken on the decimal value of alpha so that e.g.
    ``alpha=0.29, n=100`` gives 29 rather than the 28 a binary product would.
    """
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    k = math.floor(Fraction(repr(float(alpha))) * n)
    assert k + 1 <= n
    return k


def sample_quantile(sample: Sequence[float], alpha: float) -> float:
    x = np.asarray(sample, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise DomainError("sample must be a non-empty 1-d sequence")
    k = order_index(x.size, alpha)
    return float(np.partition(x, k)[k])


def joint_quantiles(sample: Sequence[float], grid: QuantileGrid | Sequence[float]) -> np.ndarray:
    """Sample quantiles at every level of ``grid`` (a grid or a plain list of levels)."""
    levels = grid.levels if isinstance(grid, QuantileGrid) else tuple(grid)
    x = np.asarray(sample, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise DomainError("sample must be a non-empty 1-d sequence")
    ks = [order_index(x.size, a) for a in levels]
    part = np.partition(x, ks)
    return part[ks]


def batch_quantiles(samples: np.ndarray, levels: Sequence[float]) -> np.ndarray:
    """Row-wise sample quantiles of an (R, n) array; returns shape (R, len(levels))."""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[1]
    ks = [order_index(n, a) for a in levels]
    part = np.partition(samples, ks, axis=1)
    return part[:, ks]


def ks_statistic(values: Sequence[float], reference_cdf: Callable) -> float:
    """Exact sup-distance between the empirical CDF of ``values`` and ``reference_cdf``."""
    v = np.sort(np.asarray(values, dtype=float))
    R = v.size
    if R < 1:
        raise DomainError("ks_statistic needs at least one value")
    try:
        F = np.asarray(reference_cdf(v), dtype=float)
        if F.shape != v.shape:
            raise TypeError
    except (TypeError, ValueError):
        F = np.array([reference_cdf(float(t)) for t in v])
    i = np.arange(1, R + 1)
    d_plus = np.max(i / R - F)
    d_minus = np.max(F - (i - 1) / R)
    return float(min(1.0, max(0.0, d_plus, d_minus)))


def empirical_rect_prob(vectors, x: Sequence[float]) -> float:
    """Fraction of rows v of ``vectors`` with v_k <= x_k for every k."""
    arr = np.asarray(vectors, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    x = np.asarray(x, dtype=float).ravel()
    if arr.shape[0] < 1:
        raise DomainError("need at least one vector")
    if arr.shape[1] != x.size:
        raise DomainError(f"dimension mismatch: vectors have {arr.shape[1]} coordinates, x has {x.size}")
    return float(np.mean(np.all(arr <= x, axis=1)))


def empirical_rect_probs(vectors, points) -> np.ndarray:
    """:func:`empirical_rect_prob` at each of ``points``."""
    return np.array([empirical_rect_prob(vectors, p) for p in points])
