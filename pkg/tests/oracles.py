"""Independent reference computations (scipy / mpmath), used only by the tests."""

from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy import integrate, optimize, stats


def mp_betainc(x: float, a: float, b: float, dps: int = 60) -> float:
    """Regularized incomplete beta by a high-precision Lentz continued fraction."""
    with mpmath.workdps(dps):
        x, a, b = mpmath.mpf(x), mpmath.mpf(a), mpmath.mpf(b)
        if x == 0:
            return 0.0
        if x == 1:
            return 1.0
        flip = x > (a + 1) / (a + b + 2)
        if flip:
            x, a, b = 1 - x, b, a
        log_front = (a * mpmath.log(x) + b * mpmath.log1p(-x)
                     - (mpmath.loggamma(a) + mpmath.loggamma(b) - mpmath.loggamma(a + b)))
        tiny = mpmath.mpf(10) ** (-dps * 2)
        c, d = mpmath.mpf(1), 1 - (a + b) * x / (a + 1)
        d = 1 / (d if abs(d) > tiny else tiny)
        h = d
        eps = mpmath.mpf(10) ** (-dps + 5)
        for m in range(1, 10**6):
            num = m * (b - m) * x / ((a - 1 + 2 * m) * (a + 2 * m))
            d = 1 / (1 + num * d)
            c = 1 + num / c
            h *= d * c
            num = -(a + m) * (a + b + m) * x / ((a + 2 * m) * (a + 1 + 2 * m))
            d = 1 / (1 + num * d)
            c = 1 + num / c
            step = d * c
            h *= step
            if abs(step - 1) < eps:
                break
        v = mpmath.exp(log_front) * h / a
        return float(1 - v) if flip else float(v)


def normal_cdf(x: float) -> float:
    with mpmath.workdps(40):
        return float(mpmath.ncdf(x))


def binorm_quad(h: float, k: float, r: float) -> float:
    """P(Z1 <= h, Z2 <= k) by one-dimensional integration over the first coordinate."""
    s = math.sqrt(1.0 - r * r)
    f = lambda z: stats.norm.pdf(z) * stats.norm.cdf((k - r * z) / s)
    val, _ = integrate.quad(f, -np.inf, h, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def tv_scale_quad(rho: float) -> float:
    """TV between N(0,1) and N(0,rho^2) by direct quadrature of |f - g| / 2."""
    f = lambda x: abs(stats.norm.pdf(x, scale=rho) - stats.norm.pdf(x))
    xs = math.sqrt(2.0 * math.log(rho) / (1.0 - rho ** -2))
    parts = [integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
             for lo, hi in ((0.0, xs), (xs, np.inf))]
    return sum(parts)


def affinity_quad_2d(cov: np.ndarray) -> float:
    """(int sqrt(f g))^2 for f = N(0, I2), g = N(0, cov) by 2-D quadrature."""
    inv = np.linalg.inv(cov)
    det = np.linalg.det(cov)

    def integrand(y, x):
        v = np.array([x, y])
        q = 0.25 * (v @ v) + 0.25 * (v @ inv @ v)
        return math.exp(-q) / (2.0 * math.pi * det ** 0.25)

    lim = 12.0 * math.sqrt(max(1.0, float(np.max(np.linalg.eigvalsh(cov)))))
    val, _ = integrate.dblquad(integrand, -lim, lim, -lim, lim, epsabs=1e-12, epsrel=1e-11)
    return val * val


def sup_x2_phi() -> float:
    res = optimize.minimize_scalar(lambda x: -x * x * stats.norm.pdf(x), bounds=(0.1, 5.0),
                                   method="bounded", options={"xatol": 1e-12})
    return -res.fun


def ma1_orthant_sigma2(c: float, n: int) -> float:
    """Indicator variance at the median for Gaussian MA(1): 1/4 + 2 (n-1)/n (P(orthant) - 1/4)."""
    r = c / (1.0 + c * c)
    orthant = 0.25 + math.asin(r) / (2.0 * math.pi)
    return 0.25 + 2.0 * (n - 1) / n * (orthant - 0.25)


def exact_median_ks_scipy(dist, n: int, grid: np.ndarray) -> float:
    """sup over ``grid`` of |P(theta sqrt(n) (M - m) / (1/2) <= x) - Phi(x)| via scipy's beta law."""
    m = (n - 1) // 2
    med = dist.median()
    theta = dist.pdf(med)
    t = med + 0.5 * grid / (theta * math.sqrt(n))
    G = stats.beta.cdf(dist.cdf(t), m + 1, m + 1)
    return float(np.max(np.abs(G - stats.norm.cdf(grid))))


def beta_condition(x: float, a: float, b: float, dps: int = 40) -> float:
    """Relative condition number |x d/dx log I_x(a, b)| of the incomplete beta in x."""
    with mpmath.workdps(dps):
        X, A, B = mpmath.mpf(x), mpmath.mpf(a), mpmath.mpf(b)
        log_pdf = ((A - 1) * mpmath.log(X) + (B - 1) * mpmath.log1p(-X)
                   - (mpmath.loggamma(A) + mpmath.loggamma(B) - mpmath.loggamma(A + B)))
        ref = mpmath.mpf(mp_betainc(x, a, b, dps=dps + 20))
        if ref == 0:
            return math.inf
        return float(X * mpmath.exp(log_pdf) / ref)
