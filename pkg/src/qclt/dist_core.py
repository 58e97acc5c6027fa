"""Scalar special functions and the marginal laws used throughout the package.

Everything here is pure and evaluated in double precision.  The normal CDF
is built on :func:`math.erfc`; the inverse normal CDF, the regularized
incomplete beta function and the bivariate normal CDF are implemented
directly so that the exact oracles do not lean on a third-party library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import DomainError

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)
INV_SQRT2PI = 1.0 / SQRT2PI

# ---------------------------------------------------------------------------
# Standard normal
# ---------------------------------------------------------------------------

_erfc_vec = np.vectorize(math.erfc, otypes=[float])


def std_normal_cdf(x):
    """Standard normal CDF.  Accepts a float or an array (evaluated elementwise)."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / SQRT2)
    return 0.5 * _erfc_vec(-np.asarray(x, dtype=float) / SQRT2)


def std_normal_pdf(x):
    if np.ndim(x) == 0:
        x = float(x)
        return INV_SQRT2PI * math.exp(-0.5 * x * x)
    x = np.asarray(x, dtype=float)
    return INV_SQRT2PI * np.exp(-0.5 * x * x)


# Wichura (1988), algorithm AS 241, PPND16.
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _poly(coeffs, r):
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * r + c
    return acc


def std_normal_inv_cdf(p: float) -> float:
    """Inverse of :func:`std_normal_cdf` on the open unit interval.

    AS 241 followed by one Halley step against ``math.erfc``.
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"std_normal_inv_cdf requires p in (0, 1), got {p!r}")
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        z = q * _poly(_A, r) / _poly(_B, r)
    else:
        r = math.sqrt(-math.log(min(p, 1.0 - p)))
        if r <= 5.0:
            r -= 1.6
            z = _poly(_C, r) / _poly(_D, r)
        else:
            r -= 5.0
            z = _poly(_E, r) / _poly(_F, r)
        if q < 0.0:
            z = -z
    # Halley refinement; the residual is taken on the smaller tail to keep precision.
    if p < 0.5:
        err = std_normal_cdf(z) - p
    else:
        err = (0.5 - std_normal_cdf(-z)) - (p - 0.5)
    dens = std_normal_pdf(z)
    if dens > 0.0:
        u = err / dens
        z -= u / (1.0 + 0.5 * z * u)
    return z


# ---------------------------------------------------------------------------
# Regularized incomplete beta
# ---------------------------------------------------------------------------

_STIRLING_MIN = 15.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _stirling_tail(a: float) -> float:
    """log Gamma(a) minus its Stirling leading part, for a >= 15."""
    inv = 1.0 / a
    inv2 = inv * inv
    return inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))


_SPLITTER = 134217729.0  # 2**27 + 1


def _two_product(a: float, b: float) -> tuple[float, float]:
    """Dekker's error-free product: a*b == hi + lo exactly."""
    hi = a * b
    t = _SPLITTER * a
    a_hi = t - (t - a)
    a_lo = a - a_hi
    t = _SPLITTER * b
    b_hi = t - (t - b)
    b_lo = b - b_hi
    lo = ((a_hi * b_hi - hi) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return hi, lo


def _log_beta_kernel(x: float, a: float, b: float) -> float:
    """log( x^a (1-x)^b / B(a, b) ), arranged to avoid cancellation for large a, b."""
    y = 1.0 - x
    big_a = a >= _STIRLING_MIN
    big_b = b >= _STIRLING_MIN
    if big_a and big_b:
        s = a + b
        # a*log(x*s/a) + b*log(y*s/b), with the deviations formed without rounding loss.
        # dev = b*x - a*(1-x) = s*x - a, formed (nearly) exactly
        y_lo = (1.0 - y) - x
        p_hi, p_lo = _two_product(b, x)
        q_hi, q_lo = _two_product(a, y)
        dev = (p_hi - q_hi) + (p_lo - q_lo - a * y_lo)
        ra, rb = dev / a, -dev / b
        t = a * (math.log1p(ra) if ra > -0.5 else math.log(x) + math.log(s / a))
        t += b * (math.log1p(rb) if rb > -0.5 else math.log(y) + math.log(s / b))
        return (t + 0.5 * math.log(a * b / s) - _HALF_LOG_2PI
                - _stirling_tail(a) - _stirling_tail(b) + _stirling_tail(s))
    if big_b or big_a:
        lx, ly = math.log(x), math.log1p(-x)
        if big_a:  # mirror so that b is the large parameter
            a, b, lx, ly = b, a, ly, lx
        s = a + b
        return (a * (lx + math.log(s)) - a + b * ly + (b - 0.5) * math.log1p(a / b)
                - math.lgamma(a) + _stirling_tail(s) - _stirling_tail(b))
    return (a * math.log(x) + b * math.log1p(-x)
            - math.lgamma(a) - math.lgamma(b) + math.lgamma(a + b))


def _beta_cf(x: float, a: float, b: float) -> float:
    """Continued fraction for I_x(a, b) (modified Lentz)."""
    tiny = 1e-300
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    max_iter = 10_000 + int(20 * math.sqrt(max(a, b)))
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b})")


def _beta_series(x: float, a: float, b: float) -> float | None:
    """I_x(a, b) from the positive-term series sum_n (a+b)_n / (a+1)_n x^n.

    Used when b is much larger than a, where the continued fraction loses
    roughly ``b * eps`` of relative accuracy.  Returns None when the terms
    overflow, which only happens far outside the region the series is meant for.
    """
    lam = b * x
    total = 1.0
    term = 1.0
    n = 0
    while True:
        term *= (a + b + n) / (a + 1.0 + n) * x
        total += term
        n += 1
        if n > 100_000 or not math.isfinite(total):
            return None
        if n > lam and term < 1e-17 * total:
            break
    return math.exp(_log_beta_kernel(x, a, b)) * total / a


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    x = float(x)
    a = float(a)
    b = float(b)
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"reg_inc_beta requires a, b > 0, got a={a!r}, b={b!r}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"reg_inc_beta requires x in [0, 1], got {x!r}")
    if x == 0.0 or x == 1.0:
        return x
    big, small = max(a, b), min(a, b)
    if big >= 1000.0 and big >= 10.0 * small:
        # orient so that the large parameter is second
        xs, sa, sb, flip = (x, a, b, False) if b >= a else (1.0 - x, b, a, True)
        lam = sb * xs
        if lam - sa <= 40.0 * math.sqrt(lam) + 50.0:
            v = _beta_series(xs, sa, sb)
            if v is not None:
                if not flip:
                    return v
                if v <= 0.5 or (sa <= 100.0 and v <= 0.999):
                    return 1.0 - v
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(_log_beta_kernel(x, a, b)) * _beta_cf(x, a, b) / a
    y = 1.0 - x
    return 1.0 - math.exp(_log_beta_kernel(y, b, a)) * _beta_cf(y, b, a) / b


# ---------------------------------------------------------------------------
# Bivariate normal
# ---------------------------------------------------------------------------

_GL = {n: np.polynomial.legendre.leggauss(n) for n in (6, 12, 20)}


def _bvn_upper(h: float, k: float, r: float) -> float:
    """P(X > h, Y > k) for a standard bivariate normal with correlation r.

    Drezner & Wesolowsky (1990) as refined by Genz (2004).
    """
    if abs(r) < 0.3:
        nodes, weights = _GL[6]
    elif abs(r) < 0.75:
        nodes, weights = _GL[12]
    else:
        nodes, weights = _GL[20]
    hk = h * k
    if abs(r) < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = math.asin(r)
        total = 0.0
        for x, w in zip(nodes, weights):
            sn = math.sin(0.5 * asr * (x + 1.0))
            total += w * math.exp((sn * hk - hs) / (1.0 - sn * sn))
        return total * asr / (4.0 * math.pi) + std_normal_cdf(-h) * std_normal_cdf(-k)

    if r < 0.0:
        k = -k
        hk = -hk
    bvn = 0.0
    if abs(r) < 1.0:
        as_ = (1.0 - r) * (1.0 + r)
        a = math.sqrt(as_)
        bs = (h - k) ** 2
        c = (4.0 - hk) / 8.0
        d = (12.0 - hk) / 16.0
        bvn = a * math.exp(-0.5 * (bs / as_ + hk)) * (
            1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0)
        if hk > -160.0:
            b = math.sqrt(bs)
            bvn -= (math.exp(-0.5 * hk) * SQRT2PI * std_normal_cdf(-b / a) * b
                    * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0))
        a *= 0.5
        for x, w in zip(nodes, weights):
            xs = (a * (x + 1.0)) ** 2
            rs = math.sqrt(1.0 - xs)
            expo = -0.5 * (bs / xs + hk)
            if expo > -100.0:
                bvn += a * w * math.exp(expo) * (
                    math.exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs
                    - (1.0 + c * xs * (1.0 + d * xs)))
        bvn = -bvn / (2.0 * math.pi)
    if r > 0.0:
        return bvn + std_normal_cdf(-max(h, k))
    bvn = -bvn
    if k > h:
        bvn += std_normal_cdf(k) - std_normal_cdf(h)
    return bvn


def binorm_cdf(h: float, k: float, r: float) -> float:
    """P(Z1 <= h, Z2 <= k) for a standard bivariate normal with correlation r."""
    h = float(h)
    k = float(k)
    r = float(r)
    if not -1.0 <= r <= 1.0:
        raise DomainError(f"correlation must lie in [-1, 1], got {r!r}")
    if h == -math.inf or k == -math.inf:
        return 0.0
    if h == math.inf:
        return std_normal_cdf(k)
    if k == math.inf:
        return std_normal_cdf(h)
    if r == 1.0:
        return std_normal_cdf(min(h, k))
    if r == -1.0:
        return max(0.0, std_normal_cdf(h) - std_normal_cdf(-k))
    if r == 0.0:
        return std_normal_cdf(h) * std_normal_cdf(k)
    p = _bvn_upper(-h, -k, r)
    return min(1.0, max(0.0, p))


# ---------------------------------------------------------------------------
# Marginal laws
# ---------------------------------------------------------------------------

FAMILIES = ("standard-normal", "normal", "uniform", "shifted-exponential", "beta21", "cauchy")

_DEFAULT_PARAMS = {
    "standard-normal": (),
    "normal": (0.0, 1.0),               # mean, variance
    "uniform": (0.0, 1.0),              # a, b
    "shifted-exponential": (1.0, 0.5),  # rate, level c with F(0) = c
    "beta21": (),
    "cauchy": (0.0, 1.0),               # location, scale
}

# max_z |z| phi(z) = phi(1);  max_z |d/dz (1 / (pi (1 + z^2)))| at z = 1/sqrt(3)
_PHI1 = INV_SQRT2PI * math.exp(-0.5)
_CAUCHY_SLOPE = 9.0 / (8.0 * math.sqrt(3.0) * math.pi)


def _levels_tuple(levels) -> tuple[float, ...]:
    levels = tuple(float(a) for a in levels)
    if not levels:
        raise DomainError("at least one quantile level is required")
    for a in levels:
        if not 0.0 < a < 1.0:
            raise DomainError(f"quantile levels must lie in (0, 1), got {a!r}")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise DomainError(f"quantile levels must be strictly increasing, got {levels}")
    return levels


@dataclass(frozen=True)
class MarginalSpec:
    """A one-dimensional continuous law with its quantile anchors and smoothness budget.

    ``params`` depend on ``family`` (see ``_DEFAULT_PARAMS``); ``loc`` shifts the whole
    law.  ``anchors`` are the exact quantiles at ``levels``; ``A`` bounds both the density
    and its derivative on ``[m_k - eps, m_k + eps]`` for every anchor ``m_k``.
    """

    family: str
    params: tuple[float, ...] = ()
    levels: tuple[float, ...] = (0.5,)
    loc: float = 0.0
    anchors: tuple[float, ...] = field(init=False, repr=False)
    A: float = field(init=False, repr=False)
    eps: float = field(init=False, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown marginal family {self.family!r}")
        params = tuple(float(p) for p in self.params) or _DEFAULT_PARAMS[self.family]
        if len(params) != len(_DEFAULT_PARAMS[self.family]):
            raise DomainError(
                f"{self.family} takes {len(_DEFAULT_PARAMS[self.family])} parameters, got {params}")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "levels", _levels_tuple(self.levels))
        self._validate_params()
        anchors = tuple(self.ppf(a) for a in self.levels)
        object.__setattr__(self, "anchors", anchors)
        A, eps = self._smoothness()
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "eps", eps)

    def _validate_params(self):
        p = self.params
        bad = (
            (self.family == "normal" and p[1] <= 0.0)
            or (self.family == "uniform" and p[1] <= p[0])
            or (self.family == "shifted-exponential" and (p[0] <= 0.0 or not 0.0 < p[1] < 1.0))
            or (self.family == "cauchy" and p[1] <= 0.0)
        )
        if bad:
            raise DomainError(f"invalid parameters {p} for family {self.family}")

    # -- derived constants -------------------------------------------------

    @property
    def _scale(self) -> float:
        if self.family == "normal":
            return math.sqrt(self.params[1])
        if self.family == "cauchy":
            return self.params[1]
        return 1.0

    @property
    def _shift(self) -> float:
        """Lower end of the support for the exponential family."""
        rate, c = self.params
        return self.loc + math.log1p(-c) / rate

    def _smoothness(self) -> tuple[float, float]:
        fam = self.family
        if fam in ("standard-normal", "normal"):
            s = self._scale
            return max(INV_SQRT2PI / s, _PHI1 / (s * s)), 0.5 * s
        if fam == "cauchy":
            g = self._scale
            return max(1.0 / (math.pi * g), _CAUCHY_SLOPE / (g * g)), g
        if fam == "uniform":
            a, b = self.params
            lo, hi = a + self.loc, b + self.loc
            eps = 0.5 * min(min(m - lo, hi - m) for m in self.anchors)
            return 1.0 / (b - a), eps
        if fam == "beta21":
            eps = 0.5 * min(min(m - self.loc, 1.0 + self.loc - m) for m in self.anchors)
            return 2.0, eps
        rate, _ = self.params
        eps = min(0.5 / rate, 0.5 * (self.anchors[0] - self._shift))
        peak = rate * (1.0 - self.levels[0]) * math.exp(rate * eps)
        return max(1.0, rate) * peak, eps

    # -- evaluation --------------------------------------------------------

    def cdf(self, x):
        z = np.asarray(x, dtype=float) - self.loc
        fam = self.family
        if fam == "standard-normal":
            out = std_normal_cdf(z)
        elif fam == "normal":
            out = std_normal_cdf((z - self.params[0]) / self._scale)
        elif fam == "cauchy":
            out = 0.5 + np.arctan((z - self.params[0]) / self._scale) / math.pi
        elif fam == "uniform":
            a, b = self.params
            out = np.clip((z - a) / (b - a), 0.0, 1.0)
        elif fam == "beta21":
            out = np.clip(z, 0.0, 1.0) ** 2
        else:
            rate = self.params[0]
            out = -np.expm1(-rate * np.maximum(z + self.loc - self._shift, 0.0))
        return float(out) if np.ndim(out) == 0 else out

    def pdf(self, x):
        z = np.asarray(x, dtype=float) - self.loc
        fam = self.family
        if fam == "standard-normal":
            out = std_normal_pdf(z)
        elif fam == "normal":
            s = self._scale
            out = std_normal_pdf((z - self.params[0]) / s) / s
        elif fam == "cauchy":
            g = self._scale
            u = (z - self.params[0]) / g
            out = 1.0 / (math.pi * g * (1.0 + u * u))
        elif fam == "uniform":
            a, b = self.params
            out = np.where((z >= a) & (z <= b), 1.0 / (b - a), 0.0)
        elif fam == "beta21":
            out = np.where((z >= 0.0) & (z <= 1.0), 2.0 * z, 0.0)
        else:
            rate = self.params[0]
            u = z + self.loc - self._shift
            out = np.where(u >= 0.0, rate * np.exp(-rate * np.maximum(u, 0.0)), 0.0)
        return float(out) if np.ndim(out) == 0 else out

    def pdf_deriv(self, x):
        """Derivative of the density (the second derivative of the CDF)."""
        z = np.asarray(x, dtype=float) - self.loc
        fam = self.family
        if fam in ("standard-normal", "normal"):
            mean = self.params[0] if fam == "normal" else 0.0
            s = self._scale
            u = (z - mean) / s
            out = -u * std_normal_pdf(u) / (s * s)
        elif fam == "cauchy":
            g = self._scale
            u = (z - self.params[0]) / g
            out = -2.0 * u / (math.pi * g * g * (1.0 + u * u) ** 2)
        elif fam == "uniform":
            out = np.zeros_like(z)
        elif fam == "beta21":
            out = np.where((z >= 0.0) & (z <= 1.0), 2.0, 0.0)
        else:
            rate = self.params[0]
            out = -rate * np.asarray(self.pdf(x))
        return float(out) if np.ndim(out) == 0 else out

    def ppf(self, p: float) -> float:
        """Quantile function at a level in (0, 1)."""
        p = float(p)
        if not 0.0 < p < 1.0:
            raise DomainError(f"quantile level must lie in (0, 1), got {p!r}")
        fam = self.family
        if fam == "standard-normal":
            z = std_normal_inv_cdf(p)
        elif fam == "normal":
            z = self.params[0] + self._scale * std_normal_inv_cdf(p)
        elif fam == "cauchy":
            z = self.params[0] + self._scale * math.tan(math.pi * (p - 0.5))
        elif fam == "uniform":
            a, b = self.params
            z = a + (b - a) * p
        elif fam == "beta21":
            z = math.sqrt(p)
        else:
            return self._shift - math.log1p(-p) / self.params[0]
        return self.loc + z

    @property
    def median(self) -> float:
        return self.ppf(0.5)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        fam = self.family
        if fam == "standard-normal":
            out = rng.standard_normal(size)
        elif fam == "normal":
            out = self.params[0] + self._scale * rng.standard_normal(size)
        elif fam == "cauchy":
            out = self.params[0] + self._scale * rng.standard_cauchy(size)
        elif fam == "uniform":
            a, b = self.params
            out = a + (b - a) * rng.random(size)
        elif fam == "beta21":
            out = np.sqrt(rng.random(size))
        else:
            return self._shift + rng.standard_exponential(size) / self.params[0]
        return self.loc + out

    def with_levels(self, levels) -> MarginalSpec:
        return replace(self, levels=tuple(levels))

    def shifted(self, mu: float) -> MarginalSpec:
        return replace(self, loc=self.loc + float(mu))


def normal_marginal(mean: float = 0.0, variance: float = 1.0, levels=(0.5,)) -> MarginalSpec:
    return MarginalSpec("normal", (mean, variance), levels)


def marginal_from_tag(tag: str, params=(), levels=(0.5,)) -> MarginalSpec:
    """Build a marginal from a family tag such as ``"cauchy"`` plus optional parameters."""
    return MarginalSpec(tag, tuple(params), tuple(levels))


CdfLike = Callable[[float], float]
