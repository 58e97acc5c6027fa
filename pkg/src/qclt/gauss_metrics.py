"""Distances and bounds between centred Gaussian laws, plus the small dense
linear algebra they need (ell <= 8, so a cyclic Jacobi eigensolver is enough).
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np

from .dist_core import binorm_cdf, std_normal_cdf
from .errors import DomainError

PSD_TOL = 1e-10
INV_TOL = 1e-10
MAX_RECT_DIM = 8


def jacobi_eigen(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in descending order and the matching orthonormal
    eigenvectors as columns.
    """
    a = np.array(matrix.data if isinstance(matrix, CovMatrix) else matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    if not np.array_equal(a, a.T):
        raise DomainError("jacobi_eigen requires an exactly symmetric matrix")
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    upper = np.triu_indices(n, 1)
    for _ in range(100):
        off = float(np.linalg.norm(a[upper]))
        if off <= 1e-17 * scale or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-150 * abs(diff):
                    t = apq / diff  # theta too large to square
                else:
                    theta = diff / (2.0 * apq)
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    lam = np.diag(a).copy()
    order = np.argsort(-lam, kind="stable")
    return lam[order], v[:, order]


class CovMatrix:
    """A symmetric matrix used as a covariance, with cached eigen-decomposition."""

    def __init__(self, data, *, sym_tol: float = 1e-12):
        arr = np.array(data, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DomainError(f"covariance must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("covariance entries must be finite")
        gap = float(np.max(np.abs(arr - arr.T))) if arr.size else 0.0
        if gap > sym_tol * max(1.0, float(np.max(np.abs(arr)))):
            raise DomainError(f"matrix is not symmetric (max asymmetry {gap:.3g})")
        self.data = 0.5 * (arr + arr.T)
        self._eig: tuple[np.ndarray, np.ndarray] | None = None

    def __repr__(self) -> str:
        return f"CovMatrix({self.data.tolist()!r})"

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def eigen(self) -> tuple[np.ndarray, np.ndarray]:
        if self._eig is None:
            self._eig = jacobi_eigen(self.data)
        return self._eig

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigen[0]

    @property
    def is_psd(self) -> bool:
        tr = max(float(np.trace(self.data)), 1.0)
        return bool(self.eigenvalues[-1] >= -PSD_TOL * tr)

    @property
    def is_invertible(self) -> bool:
        return bool(self.is_psd and self.eigenvalues[-1] >= INV_TOL)

    def require_psd(self) -> None:
        if not self.is_psd:
            raise DomainError(f"matrix is not PSD (min eigenvalue {self.eigenvalues[-1]:.3g})")

    def require_invertible(self) -> None:
        self.require_psd()
        if not self.is_invertible:
            raise DomainError(f"matrix is singular (min eigenvalue {self.eigenvalues[-1]:.3g})")

    def power(self, p: float) -> np.ndarray:
        """Symmetric matrix power through the eigen-decomposition."""
        lam, vec = self.eigen
        if p < 0:
            self.require_invertible()
        lam = np.clip(lam, 0.0, None)
        return (vec * lam ** p) @ vec.T

    def sqrt(self) -> np.ndarray:
        self.require_psd()
        return self.power(0.5)

    def op_norm(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    def inv_op_norm(self) -> float:
        """Operator norm of the inverse, i.e. one over the smallest eigenvalue."""
        self.require_invertible()
        return 1.0 / float(self.eigenvalues[-1])

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.data))

    @property
    def diag(self) -> np.ndarray:
        return np.diag(self.data).copy()


def as_cov(matrix) -> CovMatrix:
    return matrix if isinstance(matrix, CovMatrix) else CovMatrix(matrix)


# ---------------------------------------------------------------------------
# Univariate total variation
# ---------------------------------------------------------------------------


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not rho >= 1.0:
        raise DomainError(f"rho must be >= 1 (normalize by the smaller scale), got {rho!r}")
    return rho


def tv_normal_exact(rho: float) -> float:
    """Exact TV distance between N(0, rho^2) and N(0, 1) for rho >= 1.

    The densities cross at +-x*, x* = sqrt(2 log(rho) / (1 - rho^-2)), so the
    distance is 2 (Phi(x*) - Phi(x*/rho)).
    """
    rho = _check_rho(rho)
    if rho == 1.0:
        return 0.0
    log_rho = math.log(rho)
    x_star = math.sqrt(2.0 * log_rho / -math.expm1(-2.0 * log_rho))
    # Phi(b) - Phi(a) = Phi(-a) - Phi(-b); the upper-tail form keeps precision for large x*.
    return 2.0 * (std_normal_cdf(-x_star / rho) - std_normal_cdf(-x_star))


class TVNormalBounds(NamedTuple):
    tight: float
    simple: float


def tv_normal_bounds(rho: float) -> TVNormalBounds:
    rho = _check_rho(rho)
    simple = math.sqrt(2.0 / (math.pi * math.e)) * (rho - 1.0)
    if rho == 1.0:
        return TVNormalBounds(0.0, 0.0)
    u = math.log(rho) / (rho * rho - 1.0)
    tight = 2.0 / math.sqrt(math.pi) * (rho - 1.0) * math.sqrt(u) * math.exp(-u)
    return TVNormalBounds(tight, simple)


# ---------------------------------------------------------------------------
# Multivariate comparisons against the identity
# ---------------------------------------------------------------------------


def hellinger_affinity(cov) -> float:
    """Squared Hellinger affinity (int sqrt(f g))^2 between N(0, I) and N(0, cov).

    Equals prod_i 2 sqrt(lam_i) / (1 + lam_i) over the eigenvalues of ``cov``.
    """
    cov = as_cov(cov)
    cov.require_invertible()
    lam = cov.eigenvalues
    return float(np.prod(2.0 * np.sqrt(lam) / (1.0 + lam)))


def hellinger_tv_bound(cov) -> float:
    """sqrt(1 - (int sqrt(f g))^2), an upper bound on the TV distance to N(0, I)."""
    return math.sqrt(max(0.0, 1.0 - hellinger_affinity(cov)))


class TVBound(NamedTuple):
    bound: float       # sqrt(sum (sqrt(lam) - 1)^2 / (lam + 1))
    frobenius: float   # ||cov - I||_F


def tv_mvn_bound(cov) -> TVBound:
    """Eigenvalue bound on d_TV(N(0, I), N(0, cov)) and its Frobenius relaxation."""
    cov = as_cov(cov)
    cov.require_invertible()
    lam = cov.eigenvalues
    inner = float(np.sum((np.sqrt(lam) - 1.0) ** 2 / (lam + 1.0)))
    frob = float(np.linalg.norm(cov.data - np.eye(cov.dim)))
    return TVBound(math.sqrt(inner), frob)


def whiten(reference, other) -> CovMatrix:
    """reference^{-1/2} other reference^{-1/2} (symmetric square root)."""
    reference = as_cov(reference)
    root_inv = reference.power(-0.5)
    out = root_inv @ np.asarray(other.data if isinstance(other, CovMatrix) else other) @ root_inv
    return CovMatrix(0.5 * (out + out.T), sym_tol=1e-8)


def tv_mvn_bound_pair(cov_ref, cov) -> TVBound:
    """Eigenvalue bound on d_TV(N(0, cov_ref), N(0, cov)) after whitening by ``cov_ref``."""
    return tv_mvn_bound(whiten(cov_ref, cov))


class WhitenedNorm(NamedTuple):
    value: float   # ||S1^{-1/2} S2 S1^{-1/2}||_F
    bound: float   # ||S1^{-1}||_op ||S2||_F, rounded outward


def whitened_frobenius(cov1, mat2) -> WhitenedNorm:
    """Whitened Frobenius norm together with its operator-norm upper bound.

    The two sides are equal whenever S2 lives on the bottom eigenvector of S1
    (always, in dimension one), yet they are evaluated along different
    floating-point paths.  The bound is therefore inflated by a few units in
    the last place per dimension, which keeps ``value <= bound`` true for the
    computed numbers and not only for the exact ones.
    """
    cov1 = as_cov(cov1)
    lam, vec = cov1.eigen
    if lam[-1] <= 0.0 or not cov1.is_invertible:
        raise DomainError("whitening matrix must be symmetric positive definite")
    m2 = np.asarray(mat2, dtype=float)
    root_inv = (vec * lam ** -0.5) @ vec.T
    value = float(np.linalg.norm(root_inv @ m2 @ root_inv))
    bound = float(np.linalg.norm(m2)) / float(lam[-1])
    margin = 4.0 * (cov1.dim + 1) * np.finfo(float).eps
    return WhitenedNorm(value, bound * (1.0 + margin))


# ---------------------------------------------------------------------------
# Gaussian rectangle (orthant) probabilities
# ---------------------------------------------------------------------------


class RectProb(NamedTuple):
    prob: float
    stderr: float


def _reduce(cov: CovMatrix, x: np.ndarray):
    """Drop coordinates that cannot bind; returns (sub-covariance, sub-x) or a final value."""
    if np.any(x == -np.inf):
        return 0.0
    diag = cov.diag
    keep = []
    for k in range(cov.dim):
        if x[k] == np.inf:
            continue
        if diag[k] <= 0.0:  # degenerate coordinate sits at 0
            if x[k] < 0.0:
                return 0.0
            continue
        keep.append(k)
    if not keep:
        return 1.0
    idx = np.array(keep)
    return cov.data[np.ix_(idx, idx)], x[idx]


def _rect_exact(sub: np.ndarray, x: np.ndarray) -> float | None:
    if x.size == 1:
        return std_normal_cdf(x[0] / math.sqrt(sub[0, 0]))
    if x.size == 2:
        s1, s2 = math.sqrt(sub[0, 0]), math.sqrt(sub[1, 1])
        r = min(1.0, max(-1.0, sub[0, 1] / (s1 * s2)))
        return binorm_cdf(x[0] / s1, x[1] / s2, r)
    return None


def mvn_rect_probs(cov, points: Sequence[Sequence[float]], precision: float = 1e-3,
                   seed: int = 0, batch: int = 1 << 16,
                   max_samples: int = 1 << 26) -> list[RectProb]:
    """P(cov^{1/2} Z <= x) at every point; points with ell >= 3 share one Monte Carlo sample.

    The Monte Carlo branch keeps drawing batches until every estimate has a
    binomial standard error at most ``precision``.
    """
    from .dep_models import stream

    cov = as_cov(cov)
    cov.require_psd()
    if cov.dim > MAX_RECT_DIM:
        raise DomainError(f"rectangle probabilities supported up to dimension {MAX_RECT_DIM}")
    pts = [np.asarray(p, dtype=float).ravel() for p in points]
    for p in pts:
        if p.size != cov.dim:
            raise DomainError(f"point has {p.size} coordinates, covariance has {cov.dim}")

    out: list[RectProb | None] = [None] * len(pts)
    mc_jobs = []
    for i, p in enumerate(pts):
        red = _reduce(cov, p)
        if isinstance(red, float):
            out[i] = RectProb(red, 0.0)
            continue
        exact = _rect_exact(*red)
        if exact is not None:
            out[i] = RectProb(exact, 0.0)
        else:
            mc_jobs.append(i)

    if mc_jobs:
        root = cov.sqrt()
        rng = stream(seed)
        xs = np.stack([pts[i] for i in mc_jobs])
        counts = np.zeros(len(mc_jobs), dtype=np.int64)
        total = 0
        while True:
            z = rng.standard_normal((batch, cov.dim)) @ root.T
            for j, x in enumerate(xs):
                counts[j] += int(np.count_nonzero(np.all(z <= x, axis=1)))
            total += batch
            p_hat = counts / total
            se = np.sqrt(p_hat * (1.0 - p_hat) / total)
            if np.all(se <= precision) or total >= max_samples:
                break
        for j, i in enumerate(mc_jobs):
            out[i] = RectProb(float(p_hat[j]), float(se[j]))
    return out  # type: ignore[return-value]


def mvn_rect_prob(cov, x: Sequence[float], precision: float = 1e-3, seed: int = 0) -> RectProb:
    """P(cov^{1/2} Z <= x): exact for ell <= 2, Monte Carlo with a standard error otherwise."""
    return mvn_rect_probs(cov, [x], precision=precision, seed=seed)[0]
