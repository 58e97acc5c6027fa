"""Indicator covariance engine and unit-constant evaluations of the bounds.

The covariance of interest is that of n^{-1/2} sum_i Y_i, where
Y_i = (1{X_i <= a_k} - F(a_k))_k and a_k = m_k + x_k / (theta_k sqrt(n)).
The bound evaluators drop the unspecified absolute constants (they are all
set to 1), so only the shape of each bound is meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .dep_models import DependencyModel, derive_seed, generate
from .dist_core import binorm_cdf, std_normal_cdf
from .errors import DomainError
from .gauss_metrics import CovMatrix, as_cov, tv_mvn_bound_pair
from .quantile_core import QuantileGrid
from .replicate import run_replications


def thresholds(grid: QuantileGrid, x: Sequence[float] | float, n: int) -> np.ndarray:
    """a_k = m_k + x_k / (theta_k sqrt(n))."""
    xv = np.broadcast_to(np.asarray(x, dtype=float), (grid.ell,))
    return np.asarray(grid.anchors) + xv / (np.asarray(grid.theta) * math.sqrt(n))


def sigma_exact(model: DependencyModel, grid: QuantileGrid, x, n: int) -> CovMatrix:
    """Exact indicator covariance for i.i.d. models (any marginal) and Gaussian MA models."""
    a = thresholds(grid, x, n)
    F = np.asarray(model.marginal.cdf(a), dtype=float)
    ell = grid.ell
    if model.q == 0:
        lo = np.minimum.outer(a, a)
        return CovMatrix(np.asarray(model.marginal.cdf(lo)) - np.outer(F, F))
    if not model.is_gaussian:
        raise DomainError("exact covariance needs a Gaussian model; use sigma_empirical")
    mean, var = model.marginal.params
    z = (a - model.marginal.loc - mean) / math.sqrt(var)
    Phi = np.array([std_normal_cdf(v) for v in z])
    rho = model.lag_correlations()
    out = np.minimum.outer(Phi, Phi) - np.outer(Phi, Phi)
    for h in range(1, model.q + 1):
        if h >= n:
            break
        weight = 2.0 * (n - h) / n
        for s in range(ell):
            for t in range(s, ell):
                c = binorm_cdf(z[s], z[t], rho[h]) - Phi[s] * Phi[t]
                out[s, t] += weight * c
                if t != s:
                    out[t, s] += weight * c
    return CovMatrix(out)


sigma_exact_gaussian = sigma_exact


def _indicator_kernel(lo: int, hi: int, seed: int, model: DependencyModel,
                      a: np.ndarray, F: np.ndarray, n: int) -> np.ndarray:
    rows = np.empty((hi - lo, a.size))
    root_n = math.sqrt(n)
    for j, r in enumerate(range(lo, hi)):
        xs = generate(model, n, derive_seed(seed, r))
        counts = np.array([np.count_nonzero(xs <= ak) for ak in a])
        rows[j] = (counts - n * F) / root_n
    return rows


class EmpiricalSigma(NamedTuple):
    cov: CovMatrix
    stderr: np.ndarray
    reps: int


def indicator_sums(model: DependencyModel, grid: QuantileGrid, x, n: int, reps: int,
                   seed: int, workers: int = 1) -> np.ndarray:
    """Per-replication vectors n^{-1/2} sum_i Y_i, shape (reps, ell)."""
    a = thresholds(grid, x, n)
    F = np.asarray(model.marginal.cdf(a), dtype=float).reshape(-1)
    return run_replications(_indicator_kernel, reps, seed, (model, a, F, n), workers=workers)


def sigma_empirical(model: DependencyModel, grid: QuantileGrid, x, n: int, reps: int,
                    seed: int, workers: int = 1) -> EmpiricalSigma:
    """Monte Carlo estimate of the indicator covariance with entrywise standard errors.

    The indicators are centred at their exact means, so S^T S / R is unbiased.
    """
    if reps < 1000:
        raise DomainError("sigma_empirical needs at least 1000 replications")
    S = indicator_sums(model, grid, x, n, reps, seed, workers)
    prods = S[:, :, None] * S[:, None, :]
    est = prods.mean(axis=0)
    se = prods.std(axis=0, ddof=1) / math.sqrt(reps)
    return EmpiricalSigma(CovMatrix(est), se, reps)


def sigma_for(model: DependencyModel, grid: QuantileGrid, x, n: int, *, reps: int = 20_000,
              seed: int = 0, workers: int = 1) -> CovMatrix:
    """Exact covariance where available, otherwise the Monte Carlo estimate."""
    if model.q == 0 or model.is_gaussian:
        return sigma_exact(model, grid, x, n)
    return sigma_empirical(model, grid, x, n, reps, seed, workers).cov


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------


def gsgap_value(A: float, ell: int, theta_min: float, inv_op: float, D1: int,
                x_inf: float, n: int) -> float:
    """3 A ell / theta_min * ||Sigma_0^{-1}||_op * D1 ||x||_inf / sqrt(n)."""
    return 3.0 * A * ell / theta_min * inv_op * D1 * x_inf / math.sqrt(n)


def gsgap_bound(model: DependencyModel, grid: QuantileGrid, x, n: int,
                sigma0: CovMatrix | None = None) -> float:
    """Bound on d_TV(N(0, Sigma_x), N(0, Sigma_0))."""
    sigma0 = sigma0 if sigma0 is not None else sigma_for(model, grid, 0.0, n)
    sigma0 = as_cov(sigma0)
    inv_op = sigma0.inv_op_norm()
    x_inf = float(np.max(np.abs(np.broadcast_to(np.asarray(x, dtype=float), (grid.ell,)))))
    A = model.marginal.with_levels(grid.levels).A
    return gsgap_value(A, grid.ell, min(grid.theta), inv_op, model.meta.D1, x_inf, n)


def sigma_gap_tv(model: DependencyModel, grid: QuantileGrid, x, n: int) -> float:
    """Eigenvalue TV bound between N(0, Sigma_x) and N(0, Sigma_0), whitened by Sigma_0."""
    s0 = sigma_for(model, grid, 0.0, n)
    sx = sigma_for(model, grid, x, n)
    return tv_mvn_bound_pair(s0, sx).bound


@dataclass
class BoundReport:
    term1: float
    term2: float
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.term1 < 0.0 or self.term2 < 0.0:
            raise DomainError("bound terms must be non-negative")

    @property
    def total(self) -> float:
        return self.term1 + self.term2


def univ_bound_value(A: float, theta: float, sigma: float, D1: int, D2: int, D3: int,
                     n: int) -> BoundReport:
    if not (theta > 0.0 and sigma > 0.0):
        raise DomainError("theta and sigma must be positive")
    rate = math.log(n) / math.sqrt(n)
    t1 = A / theta ** 2 * max(1.0, D1 / sigma ** 2) * rate
    t2 = D1 * (D2 + D3) / (sigma * math.sqrt(n))
    return BoundReport(t1, t2, dict(n=n, D1=D1, D2=D2, D3=D3, theta=theta, sigma=sigma, A=A, ell=1))


def univ_bound_rhs(model: DependencyModel, n: int, sigma: float | None = None,
                   **sigma_kw) -> BoundReport:
    """Unit-constant right-hand side of the median Berry-Esseen bound."""
    marginal = model.marginal.with_levels((0.5,))
    grid = QuantileGrid((0.5,), marginal.anchors, (float(marginal.pdf(marginal.anchors[0])),))
    if sigma is None:
        sigma = math.sqrt(float(sigma_for(model, grid, 0.0, n, **sigma_kw).data[0, 0]))
    m = model.meta
    return univ_bound_value(marginal.A, grid.theta[0], sigma, m.D1, m.D2, m.D3, n)


def multi_bound_value(A: float, theta_min: float, cov: CovMatrix, D1: int, D2: int, D3: int,
                      n: int) -> BoundReport:
    cov = as_cov(cov)
    inv_op = cov.inv_op_norm()
    # ||Sigma^{-1}||_op^{1/2} and ||Sigma^{-1/2}||_op coincide for SPD Sigma
    half = float(np.linalg.norm(cov.power(-0.5), 2))
    if not math.isclose(half, math.sqrt(inv_op), rel_tol=1e-9):
        raise DomainError("operator norms of Sigma^{-1/2} and Sigma^{-1} disagree")
    ell = cov.dim
    sig_max2 = float(np.max(cov.diag))
    rate = math.log(n) / math.sqrt(n)
    t1 = A / theta_min ** 2 * ell * inv_op * max(D1, sig_max2) * rate
    t2 = ell ** 0.25 / math.sqrt(n) * math.sqrt(inv_op) * D1 * (D2 + D3 / ell)
    return BoundReport(t1, t2, dict(n=n, D1=D1, D2=D2, D3=D3, theta_min=theta_min, A=A, ell=ell,
                                    inv_op=inv_op, sigma_max2=sig_max2))


def multi_bound_rhs(model: DependencyModel, grid: QuantileGrid, n: int,
                    sigma: CovMatrix | None = None, **sigma_kw) -> BoundReport:
    """Unit-constant right-hand side of the joint-quantile Berry-Esseen bound."""
    cov = sigma if sigma is not None else sigma_for(model, grid, 0.0, n, **sigma_kw)
    A = model.marginal.with_levels(grid.levels).A
    m = model.meta
    return multi_bound_value(A, min(grid.theta), cov, m.D1, m.D2, m.D3, n)


def ma_rate(q: int, n: int) -> float:
    """(q^2 + q log n) / sqrt(n), the MA(q) specialisation of the median bound."""
    return (q * q + q * math.log(n)) / math.sqrt(n)


def hoeffding_bound(D1: int, ranges, t: float, n: int) -> float:
    """exp(-2 n t^2 / (D1 sum_i (b_i - a_i)^2)) for P(sum X_i >= t sqrt(n)), capped at 1."""
    r = np.asarray(ranges, dtype=float).ravel()
    if r.size == 1:
        r = np.full(n, r[0])
    if r.size != n:
        raise DomainError(f"expected {n} ranges, got {r.size}")
    if np.any(r <= 0.0):
        raise DomainError("ranges must be positive")
    if not t > 0.0:
        raise DomainError("t must be positive")
    return min(1.0, math.exp(-2.0 * n * t * t / (D1 * float(np.sum(r * r)))))
