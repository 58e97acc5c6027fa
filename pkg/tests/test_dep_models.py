import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from qclt.dep_models import (DependencyMeta, ModelConfig, build_model, derive_seed,
                             empirical_marginal_ks, generate, lag_independence_range, mix64,
                             model_grid, stream, theta)
from qclt.errors import DomainError
from qclt.quantile_core import QuantileGrid


def ma(c, innovation="standard-normal", **kw):
    return build_model(ModelConfig(kind="ma_q", coefficients=tuple(c), innovation=innovation, **kw))


def test_meta_from_first_principles():
    assert tuple(build_model(ModelConfig()).meta.__dict__.values()) == (1, 2, 3)
    assert (ma([0.6]).meta.D1, ma([0.6]).meta.D2, ma([0.6]).meta.D3) == (3, 4, 5)
    m = build_model(ModelConfig(kind="window_fn", width=4))
    assert (m.meta.D1, m.meta.D2, m.meta.D3) == (9, 13, 17)


@given(st.integers(0, 50))
def test_interval_meta_bounds(q):
    m = ma([0.1] * q) if q else build_model(ModelConfig())
    D = m.meta
    assert D.D1 >= 1 and D.D2 >= 2 and D.D3 >= 3
    assert D.D2 <= 2 * D.D1 and D.D3 <= 3 * D.D1


def test_meta_validation():
    with pytest.raises(DomainError):
        DependencyMeta(0, 2, 3)
    with pytest.raises(DomainError):
        ModelConfig(kind="arma")
    with pytest.raises(DomainError):
        ModelConfig(n=2)
    with pytest.raises(DomainError):
        ModelConfig(kind="window_fn", width=-1)


def test_marginals():
    m = ma([0.6], mu=2.0)
    assert m.marginal.family == "normal"
    assert m.marginal.params == (0.0, pytest.approx(1.36))
    assert m.marginal.median == pytest.approx(2.0)
    c = ma([0.5], innovation="cauchy", mu=-1.0)
    assert c.marginal.family == "cauchy"
    assert c.marginal.params == (0.0, pytest.approx(1.5))
    assert c.marginal.median == pytest.approx(-1.0)
    w = build_model(ModelConfig(kind="window_fn", width=3))
    assert w.marginal.params == (0.0, pytest.approx(4.0))
    with pytest.raises(DomainError):
        ma([0.5], innovation="uniform")


def test_cauchy_ma_marginal_by_simulation():
    m = ma([0.5], innovation="cauchy")
    assert empirical_marginal_ks(m, 1_000_000, seed=3) <= 0.005


@pytest.mark.parametrize("cfg", [
    ModelConfig(),
    ModelConfig(innovation="uniform", mu=0.3),
    ModelConfig(innovation="shifted-exponential"),
    ModelConfig(innovation="beta21"),
    ModelConfig(innovation="cauchy", innovation_params=(1.0, 2.0)),
    ModelConfig(kind="ma_q", coefficients=(0.6,)),
    ModelConfig(kind="ma_q", coefficients=(0.5, -0.3, 0.2)),
    ModelConfig(kind="ma_q", coefficients=(0.5,), innovation="cauchy"),
    ModelConfig(kind="window_fn", width=3),
])
def test_generated_marginal_matches(cfg):
    model = build_model(cfg)
    assert empirical_marginal_ks(model, 1_000_000, seed=11) <= 0.005


def test_generate_deterministic_and_seed_sensitive():
    m = ma([0.6])
    a = generate(m, 500, 123)
    assert np.array_equal(a, generate(m, 500, 123))
    assert not np.array_equal(a, generate(m, 500, 124))
    with pytest.raises(DomainError):
        generate(m, 2, 0)


def test_ma0_is_iid_shifted():
    m0 = build_model(ModelConfig(kind="ma_q", coefficients=(), mu=1.5))
    iid = build_model(ModelConfig(mu=1.5))
    assert np.array_equal(generate(m0, 100, 9), generate(iid, 100, 9))
    assert np.array_equal(generate(iid, 100, 9), 1.5 + stream(9).standard_normal(100))


def test_ma1_lag_correlation():
    x = generate(ma([0.6]), 1_000_000, seed=5)
    r = np.corrcoef(x[:-1], x[1:])[0, 1]
    assert abs(r - 0.6 / 1.36) <= 0.01
    assert ma([0.6]).lag_correlations()[1] == pytest.approx(0.6 / 1.36)


@pytest.mark.parametrize("coeffs", [(0.6,), (0.5, 0.4), (0.9, -0.5, 0.3)])
def test_independence_beyond_range(coeffs):
    model = ma(coeffs)
    N = 400_000
    x = generate(model, N + 10, seed=21)
    ind = (x <= 0.0).astype(float)
    lag = lag_independence_range(model)
    assert lag == len(coeffs) + 1
    for h in range(lag, lag + 3):
        r = np.corrcoef(ind[:-h][:N - h], ind[h:][:N - h])[0, 1]
        assert abs(r) <= 3.0 / math.sqrt(N)
    # and the dependence inside the range is visible
    r1 = np.corrcoef(ind[:-1], ind[1:])[0, 1]
    assert abs(r1) > 10.0 / math.sqrt(N)


def test_theta_values():
    iid = build_model(ModelConfig())
    g = model_grid(iid, (0.5,))
    assert theta(iid, g)[0] == pytest.approx(stats.norm.pdf(0.0), rel=1e-14)
    m = ma([0.6])
    g = model_grid(m, (0.5,))
    assert theta(m, g)[0] == pytest.approx(1.0 / math.sqrt(2 * math.pi * 1.36), rel=1e-14)
    u = build_model(ModelConfig(innovation="uniform", innovation_params=(-0.5, 0.5)),
                    (0.1, 0.5, 0.9))
    gu = model_grid(u, (0.1, 0.5, 0.9))
    assert np.allclose(theta(u, gu), 1.0)


def test_theta_rejects_vanishing_density():
    u = build_model(ModelConfig(innovation="uniform"))
    with pytest.raises(DomainError):
        theta(u, QuantileGrid((0.5,), (5.0,), (1.0,)))


def test_seed_mixing():
    assert mix64(0) == 0
    assert len({derive_seed(7, r) for r in range(10_000)}) == 10_000
    assert derive_seed(7, 3) != derive_seed(8, 3)
    assert derive_seed(7, 3) == derive_seed(7, 3)
    for v in (derive_seed(2**64 - 1, 2**40), derive_seed(0, 0)):
        assert 0 <= v < 2**64
