import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import ma1_orthant_sigma2
from qclt.dep_models import ModelConfig, build_model, model_grid
from qclt.dist_core import std_normal_pdf
from qclt.errors import DomainError
from qclt.gauss_metrics import CovMatrix
from qclt.sigma_bounds import (BoundReport, gsgap_bound, gsgap_value, hoeffding_bound,
                               indicator_sums, ma_rate, multi_bound_rhs, multi_bound_value,
                               sigma_empirical, sigma_exact, sigma_for, sigma_gap_tv, thresholds,
                               univ_bound_rhs, univ_bound_value)

IID = build_model(ModelConfig())
MA1 = build_model(ModelConfig(kind="ma_q", coefficients=(0.6,)))
UNIF = build_model(ModelConfig(innovation="uniform"), (0.25, 0.5, 0.75))
QUARTILES = (0.25, 0.5, 0.75)


def iid_formula(levels):
    a = np.asarray(levels)
    return np.minimum.outer(a, a) - np.outer(a, a)


# -- exact covariance ---------------------------------------------------------


def test_thresholds_scale_by_theta():
    g = model_grid(MA1, (0.5,))
    a = thresholds(g, 2.0, 400)
    assert a[0] == pytest.approx(2.0 / (g.theta[0] * 20.0))


def test_iid_median_variance_is_quarter():
    g = model_grid(IID, (0.5,))
    assert sigma_exact(IID, g, 0.0, 1000).data[0, 0] == 0.25


@pytest.mark.parametrize("innovation", ["standard-normal", "uniform", "shifted-exponential",
                                        "beta21", "cauchy"])
def test_iid_covariance_formula(innovation):
    model = build_model(ModelConfig(innovation=innovation), QUARTILES)
    g = model_grid(model, QUARTILES)
    assert np.allclose(sigma_exact(model, g, 0.0, 500).data, iid_formula(QUARTILES), atol=1e-14)


def test_ma1_variance_matches_orthant_formula():
    g = model_grid(MA1, (0.5,))
    for n in (3, 10, 1000, 10_000, 10**7):
        assert sigma_exact(MA1, g, 0.0, n).data[0, 0] == pytest.approx(
            ma1_orthant_sigma2(0.6, n), abs=1e-13)
    assert abs(sigma_exact(MA1, g, 0.0, 10_000).data[0, 0] - 0.39551) <= 1e-4


def test_exact_rejects_non_gaussian_dependence():
    m = build_model(ModelConfig(kind="ma_q", coefficients=(0.5,), innovation="cauchy"))
    with pytest.raises(DomainError):
        sigma_exact(m, model_grid(m, (0.5,)), 0.0, 100)


@given(st.lists(st.floats(-0.9, 0.9), min_size=1, max_size=4),
       st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.integers(3, 10**6))
def test_exact_covariance_is_symmetric_psd(coeffs, x, n):
    model = build_model(ModelConfig(kind="ma_q", coefficients=tuple(coeffs)), QUARTILES)
    cov = sigma_exact(model, model_grid(model, QUARTILES), x, n)
    assert np.array_equal(cov.data, cov.data.T)
    assert cov.is_psd


GAUSSIAN_MATRIX = [
    (IID, (0.5,), 0.0),
    (MA1, (0.5,), 0.0),
    (MA1, QUARTILES, (0.7, -1.2, 2.0)),
    (build_model(ModelConfig(kind="ma_q", coefficients=(0.5, -0.3), mu=1.0)), (0.2, 0.6), 1.5),
    (build_model(ModelConfig(kind="window_fn", width=3)), QUARTILES, 0.0),
]


@pytest.mark.parametrize("model,levels,x", GAUSSIAN_MATRIX)
def test_empirical_agrees_with_exact(model, levels, x):
    g = model_grid(model, levels)
    n, reps = 300, 4000
    exact = sigma_exact(model, g, x, n).data
    emp = sigma_empirical(model, g, x, n, reps, seed=77)
    assert emp.reps == reps
    assert np.all(np.abs(emp.cov.data - exact) <= 4 * emp.stderr)


def test_empirical_iid_median_quarter():
    g = model_grid(IID, (0.5,))
    est = sigma_empirical(IID, g, 0.0, 101, 100_000, seed=5)
    assert abs(est.cov.data[0, 0] - 0.25) <= 0.005


def test_empirical_is_deterministic_and_needs_reps():
    g = model_grid(MA1, (0.5,))
    a = sigma_empirical(MA1, g, 0.0, 50, 1000, seed=3)
    b = sigma_empirical(MA1, g, 0.0, 50, 1000, seed=3)
    assert np.array_equal(a.cov.data, b.cov.data) and np.array_equal(a.stderr, b.stderr)
    with pytest.raises(DomainError):
        sigma_empirical(MA1, g, 0.0, 50, 999, seed=3)


def test_sigma_for_falls_back_to_monte_carlo():
    m = build_model(ModelConfig(kind="ma_q", coefficients=(0.5,), innovation="cauchy"))
    g = model_grid(m, (0.5,))
    cov = sigma_for(m, g, 0.0, 200, reps=2000, seed=1)
    ref = sigma_empirical(m, g, 0.0, 200, 2000, seed=1).cov
    assert np.array_equal(cov.data, ref.data)
    # positive lag-one coupling pushes the variance above the i.i.d. value
    assert cov.data[0, 0] > 0.25


# -- gsgap --------------------------------------------------------------------


def test_gsgap_examples():
    g = model_grid(MA1, (0.5,))
    assert gsgap_bound(MA1, g, 0.0, 10_000) == 0.0
    assert gsgap_value(0.4, 1, 0.4, 4.0, 1, 1.0, 10_000) == pytest.approx(0.12, abs=1e-15)


@pytest.mark.parametrize("levels", [(0.5,), QUARTILES, (0.1, 0.9)])
@pytest.mark.parametrize("n", [10_000, 100_000, 10**6])
def test_gsgap_dominates_tv_gap(levels, n):
    g = model_grid(MA1, levels)
    rng = np.random.default_rng(n + len(levels))
    for _ in range(10):
        x = rng.uniform(-2, 2, len(levels))
        assert sigma_gap_tv(MA1, g, x, n) <= gsgap_bound(MA1, g, x, n)


# -- univariate and multivariate bounds ----------------------------------------


def test_univ_bound_example():
    r = univ_bound_rhs(IID, 10_000)
    phi0 = std_normal_pdf(0.0)
    assert r.term1 == pytest.approx(phi0 / phi0 ** 2 * 4 * math.log(1e4) / 100, rel=1e-12)
    assert abs(r.term1 - 0.9234) <= 1e-4
    assert r.term2 == pytest.approx(0.1, rel=1e-12)
    assert r.total == r.term1 + r.term2
    assert r.inputs["D1"] == 1 and r.inputs["sigma"] == 0.5


def test_univ_bound_decay():
    for n in (100, 10**4, 10**6):
        a, b = univ_bound_rhs(IID, n), univ_bound_rhs(IID, 4 * n)
        assert b.term1 / a.term1 == pytest.approx(math.log(4 * n) / math.log(n) / 2, rel=1e-12)
        assert b.term1 < a.term1


def test_univ_bound_rejects_nonpositive():
    with pytest.raises(DomainError):
        univ_bound_value(1.0, 0.0, 0.5, 1, 2, 3, 100)
    with pytest.raises(DomainError):
        BoundReport(-1.0, 0.0)


@pytest.mark.parametrize("q", [1, 2, 5, 10, 20])
def test_ma_scaling_shape(q):
    model = build_model(ModelConfig(kind="ma_q", coefficients=(0.5,) * q))
    ratios = [univ_bound_rhs(model, n).total / ma_rate(q, n) for n in (10**3, 10**5, 10**8)]
    assert all(1.0 <= r <= 50.0 for r in ratios)
    assert ma_rate(q, 10**4) == pytest.approx((q * q + q * math.log(1e4)) / 100)


def test_multi_bound_uniform_quartiles():
    g = model_grid(UNIF, QUARTILES)
    cov = sigma_exact(UNIF, g, 0.0, 10_000)
    assert np.allclose(cov.data, iid_formula(QUARTILES), atol=1e-15)
    assert cov.inv_op_norm() == pytest.approx(4 * (2 + math.sqrt(2)), rel=1e-12)
    r = multi_bound_rhs(UNIF, g, 10_000)
    assert r.inputs["inv_op"] == pytest.approx(13.657, abs=1e-3)
    assert r.inputs["sigma_max2"] == 0.25
    assert 0.0 < r.term1 < math.inf and 0.0 < r.term2 < math.inf


def test_multi_reduces_to_univariate():
    for model in (IID, MA1):
        g = model_grid(model, (0.5,))
        for n in (100, 10**4, 10**6):
            u = univ_bound_rhs(model, n)
            m = multi_bound_rhs(model, g, n)
            assert m.term1 == pytest.approx(u.term1, rel=1e-12)
            assert m.term2 == pytest.approx(u.term2, rel=1e-12)


def test_multi_bound_rejects_singular():
    with pytest.raises(DomainError):
        multi_bound_value(1.0, 1.0, CovMatrix([[1.0, 1.0], [1.0, 1.0]]), 1, 2, 3, 100)


@pytest.mark.parametrize("model,levels", [(IID, (0.5,)), (MA1, (0.5,)), (UNIF, QUARTILES),
                                          (MA1, QUARTILES)])
def test_bound_totals_strictly_decrease(model, levels):
    g = model_grid(model, levels)
    ns = [10**3, 10**4, 10**5, 10**6]
    reports = [multi_bound_rhs(model, g, n) for n in ns]
    for a, b in zip(reports, reports[1:]):
        assert b.total < a.total
        assert b.term1 <= a.term1 and b.term2 <= a.term2


@given(st.integers(3, 10**7))
def test_rate_nonincreasing_for_n_at_least_8(n):
    # log n / sqrt n peaks at e^2, so decay holds from n = 8 on
    if n >= 8:
        assert univ_bound_value(1, 1, 0.5, 1, 2, 3, n + 1).term1 <= \
            univ_bound_value(1, 1, 0.5, 1, 2, 3, n).term1


# -- Hoeffding ----------------------------------------------------------------


def test_hoeffding_examples():
    assert hoeffding_bound(1, [1.0], 1.0, 50) == pytest.approx(math.exp(-2.0), abs=1e-15)
    assert abs(hoeffding_bound(1, [1.0], 1.0, 7) - 0.13534) <= 1e-5
    assert abs(hoeffding_bound(3, [1.0], 1.0, 1000) - 0.51342) <= 1e-5
    assert hoeffding_bound(3, [1.0], 1e-12, 1000) == pytest.approx(1.0)
    assert hoeffding_bound(1, [0.1] * 4, 5.0, 4) < 1e-100
    assert hoeffding_bound(1, [1.0], 1e-300, 5) == 1.0


def test_hoeffding_validation():
    with pytest.raises(DomainError):
        hoeffding_bound(1, [1.0, 0.0], 1.0, 2)
    with pytest.raises(DomainError):
        hoeffding_bound(1, [1.0], 0.0, 2)
    with pytest.raises(DomainError):
        hoeffding_bound(1, [1.0, 1.0, 1.0], 1.0, 2)


def test_hoeffding_holds_empirically_small():
    g = model_grid(MA1, (0.5,))
    n, reps = 400, 20_000
    sums = indicator_sums(MA1, g, 0.0, n, reps, seed=8)[:, 0]
    for t in (0.5, 1.0, 1.5):
        freq = float(np.mean(sums >= t))
        bound = hoeffding_bound(MA1.meta.D1, [1.0], t, n)
        assert freq <= bound + 3 * math.sqrt(bound * (1 - bound) / reps)
