"""End-to-end experiments: Monte Carlo checks of the median and joint-quantile
normal approximations, the exact i.i.d. median oracle, and rate fitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import NamedTuple, Sequence

import numpy as np

from .dep_models import DependencyModel, ModelConfig, build_model, derive_seed, generate, model_grid
from .dist_core import MarginalSpec, reg_inc_beta, std_normal_cdf
from .errors import DomainError
from .gauss_metrics import mvn_rect_probs
from .quantile_core import SimResult, batch_quantiles, empirical_rect_prob, ks_statistic
from .replicate import run_replications
from .sigma_bounds import sigma_for

# sup_x x^2 phi(x) / 4, attained at x = sqrt(2)
LIMIT_SCALE = 1.0 / (2.0 * math.e * math.sqrt(2.0 * math.pi))

# offset keeping the Gaussian reference draws disjoint from replication streams
_GAUSS_STREAM = 1 << 62


@dataclass
class ExperimentPlan:
    model: ModelConfig
    levels: tuple[float, ...] = (0.5,)
    n_list: tuple[int, ...] = (1001,)
    reps: int = 10_000
    seed: int = 0
    xgrid: tuple[float, ...] = (-1.0, 0.0, 1.0)
    precision: float = 1e-3

    def __post_init__(self):
        self.levels = tuple(float(a) for a in self.levels)
        self.n_list = tuple(int(n) for n in self.n_list)
        if not self.n_list or any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise DomainError(f"n-list must be non-empty and strictly increasing: {self.n_list}")
        if self.reps < 1:
            raise DomainError("reps must be positive")


def _quantile_kernel(lo: int, hi: int, seed: int, model: DependencyModel, n: int,
                     levels: tuple[float, ...]) -> np.ndarray:
    block = np.empty((hi - lo, n))
    for j, r in enumerate(range(lo, hi)):
        block[j] = generate(model, n, derive_seed(seed, r))
    return batch_quantiles(block, levels)


def simulate_quantiles(model: DependencyModel, levels: Sequence[float], n: int, reps: int,
                       seed: int, workers: int = 1) -> np.ndarray:
    """Raw sample quantiles, shape (reps, len(levels)); replication r uses derive_seed(seed, r)."""
    return run_replications(_quantile_kernel, reps, seed, (model, n, tuple(levels)),
                            workers=workers, chunk=max(1, min(2048, 2_000_000 // n)))


# ---------------------------------------------------------------------------
# Median experiment
# ---------------------------------------------------------------------------


@dataclass
class MedianRun:
    result: SimResult
    sigma: float
    theta: float
    anchor: float


def run_median_experiment(plan: ExperimentPlan, workers: int = 1) -> list[MedianRun]:
    """KS distance between theta sqrt(n) (M_n - m) / sigma and N(0, 1) for each n."""
    if plan.levels != (0.5,):
        raise DomainError("the median experiment needs the single level 0.5")
    if plan.reps < 1000:
        raise DomainError("KS runs need at least 1000 replications")
    model = build_model(plan.model, plan.levels)
    grid = model_grid(model, plan.levels)
    theta = grid.theta[0]
    anchor = grid.anchors[0]
    runs = []
    for n in plan.n_list:
        sigma = math.sqrt(float(sigma_for(model, grid, 0.0, n, seed=plan.seed,
                                          workers=workers).data[0, 0]))
        med = simulate_quantiles(model, plan.levels, n, plan.reps, plan.seed,
                                 workers)[:, 0]
        stats = theta * math.sqrt(n) * (med - anchor) / sigma
        ks = ks_statistic(stats, std_normal_cdf)
        runs.append(MedianRun(SimResult(n, plan.reps, plan.seed, stats, ks), sigma, theta, anchor))
    return runs


# ---------------------------------------------------------------------------
# Joint-quantile experiment
# ---------------------------------------------------------------------------


class JointRow(NamedTuple):
    x: tuple[float, ...]
    emp: float
    gauss: float
    gap: float
    gauss_se: float


@dataclass
class JointRun:
    n: int
    reps: int
    seed: int
    rows: list[JointRow] = field(repr=False)

    @property
    def max_gap(self) -> float:
        return max(r.gap for r in self.rows)

    @property
    def argmax(self) -> JointRow:
        return max(self.rows, key=lambda r: r.gap)


def joint_points(xgrid: Sequence[float], ell: int) -> list[tuple[float, ...]]:
    return [tuple(p) for p in product(xgrid, repeat=ell)]


def run_joint_experiment(plan: ExperimentPlan, workers: int = 1) -> list[JointRun]:
    """Rectangle probabilities of sqrt(n) Theta (Q_n - mu) against N(0, Sigma_0)."""
    if len(plan.levels) < 2:
        raise DomainError("the joint experiment needs at least two levels")
    model = build_model(plan.model, plan.levels)
    grid = model_grid(model, plan.levels)
    points = joint_points(plan.xgrid, grid.ell)
    mu = np.asarray(grid.anchors)
    th = np.asarray(grid.theta)
    runs = []
    for n in plan.n_list:
        sigma0 = sigma_for(model, grid, 0.0, n, seed=plan.seed, workers=workers)
        gauss = mvn_rect_probs(sigma0, points, precision=plan.precision,
                               seed=derive_seed(plan.seed, _GAUSS_STREAM))
        q = simulate_quantiles(model, plan.levels, n, plan.reps, plan.seed, workers)
        z = math.sqrt(n) * th * (q - mu)
        rows = []
        for p, g in zip(points, gauss):
            emp = empirical_rect_prob(z, p)
            rows.append(JointRow(p, emp, g.prob, abs(emp - g.prob), g.stderr))
        runs.append(JointRun(n, plan.reps, plan.seed, rows))
    return runs


# ---------------------------------------------------------------------------
# Exact i.i.d. oracle
# ---------------------------------------------------------------------------


def iid_median_cdf_exact(marginal: MarginalSpec, n: int, t: float) -> float:
    """P(M_n <= t) for n = 2m + 1 i.i.d. draws: I_{F(t)}(m + 1, m + 1)."""
    if n < 1 or n % 2 == 0:
        raise DomainError(f"the exact median law needs odd n, got {n}")
    m = (n - 1) // 2
    return reg_inc_beta(float(marginal.cdf(t)), m + 1, m + 1)


def _median_scaling(marginal: MarginalSpec) -> tuple[float, float]:
    med = marginal.median
    theta = float(marginal.pdf(med))
    if not theta > 0.0:
        raise DomainError("density at the median must be positive")
    return med, theta


def exact_median_ks(marginal: MarginalSpec, n: int, sigma: float = 0.5,
                    span: float = 6.0, points: int = 512, tol: float = 1e-4) -> float:
    """sup_x |P(theta sqrt(n) (M_n - m) / sigma <= x) - Phi(x)| for i.i.d. samples.

    Starts from a uniform grid on [-span, span] and refines every local maximum
    by golden-section search until the running supremum moves by less than
    ``tol / sqrt(n)``.
    """
    med, theta = _median_scaling(marginal)
    scale = sigma / (theta * math.sqrt(n))

    def gap(x: float) -> float:
        return abs(iid_median_cdf_exact(marginal, n, med + scale * x) - std_normal_cdf(x))

    xs = np.linspace(-span, span, points)
    vals = np.array([gap(x) for x in xs])
    best = float(vals.max())
    peaks = [i for i in range(1, points - 1) if vals[i] >= vals[i - 1] and vals[i] >= vals[i + 1]]
    peaks.sort(key=lambda i: -vals[i])
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    stop = tol / math.sqrt(n)
    for i in peaks[:4]:
        lo, hi = xs[i - 1], xs[i + 1]
        c = hi - invphi * (hi - lo)
        d = lo + invphi * (hi - lo)
        fc, fd = gap(c), gap(d)
        prev = best
        while hi - lo > 1e-9:
            if fc > fd:
                hi, d, fd = d, c, fc
                c = hi - invphi * (hi - lo)
                fc = gap(c)
            else:
                lo, c, fc = c, d, fd
                d = lo + invphi * (hi - lo)
                fd = gap(d)
            cur = max(prev, fc, fd)
            if cur - prev < stop * 1e-3 and hi - lo < 1e-6:
                break
            prev = cur
        best = max(best, fc, fd)
    return best


def scaled_ks_exact(marginal: MarginalSpec, n: int) -> float:
    """sqrt(n) times the exact KS distance of the standardized i.i.d. median (sigma = 1/2)."""
    return math.sqrt(n) * exact_median_ks(marginal, n)


def limit_constant(marginal: MarginalSpec) -> float:
    """Limit of sqrt(n) times the exact median KS distance for i.i.d. samples.

    The leading correction to Phi is |F''| / (4 F'^2) * x^2 phi(x), so the
    constant is |F''(m)| / F'(m)^2 * sup_x x^2 phi(x) / 4
    = |F''(m)| / F'(m)^2 / (2 e sqrt(2 pi)).
    """
    med, theta = _median_scaling(marginal)
    return abs(float(marginal.pdf_deriv(med))) / theta ** 2 * LIMIT_SCALE


# ---------------------------------------------------------------------------
# Rate fitting
# ---------------------------------------------------------------------------


class RateFit(NamedTuple):
    slope: float
    intercept: float
    max_residual: float


def fit_rate(points: Sequence[tuple[float, float]]) -> RateFit:
    """Least-squares line through (log n, log ks)."""
    pts = [(float(n), float(k)) for n, k in points]
    if len(pts) < 3:
        raise DomainError("rate fitting needs at least three points")
    if any(k <= 0.0 or n <= 0.0 for n, k in pts):
        raise DomainError("rate fitting needs positive n and ks values")
    ln_n = np.log([p[0] for p in pts])
    ln_k = np.log([p[1] for p in pts])
    design = np.column_stack([ln_n, np.ones_like(ln_n)])
    (slope, intercept), *_ = np.linalg.lstsq(design, ln_k, rcond=None)
    resid = ln_k - (slope * ln_n + intercept)
    return RateFit(float(slope), float(intercept), float(np.max(np.abs(resid))))
