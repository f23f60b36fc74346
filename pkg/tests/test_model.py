import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from gfr_bayes import model
from gfr_bayes.errors import ConfigError, DomainError
from gfr_bayes.model import ModelConfig, ParamPair
from gfr_bayes.oracle import QuadratureSpec, integrate_1d, integrate_2d

from conftest import SIM_CFG


def test_config_validation():
    with pytest.raises(ConfigError):
        ModelConfig(theta=0.0, lambda1=1, lambda2=1)
    with pytest.raises(ConfigError):
        ModelConfig(theta=1.0, lambda1=-1, lambda2=1)
    with pytest.raises(ConfigError):
        ModelConfig(theta=1.0, lambda1=1, lambda2=1, rho=1.5)
    with pytest.raises(ConfigError):
        ModelConfig(theta=math.inf, lambda1=1, lambda2=1)
    assert SIM_CFG.replace(rho=-1.0).rho == -1.0


def test_param_pair_validation():
    ParamPair(0.0, 1.0)
    ParamPair(1.0, 0.0)
    with pytest.raises(ConfigError):
        ParamPair(0.0, 0.0)
    with pytest.raises(ConfigError):
        ParamPair(-0.1, 1.0)


def test_hazard_examples():
    # Rayleigh-type special case and pure exponential
    assert model.hazard(ParamPair(0.0, 1.0), 2.0, 3.0) == 3.0
    assert model.hazard(ParamPair(0.5, 0.0), 3.0, 7.0) == 0.5
    assert model.hazard(ParamPair(1.0, 2.0), 2.0, 0.0) == 1.0
    np.testing.assert_allclose(model.hazard(ParamPair(1.0, 1.0), 3.0, [0.0, 1.0, 2.0]), [1.0, 2.0, 5.0])


def test_hazard_at_zero_for_decreasing_rate():
    with pytest.raises(DomainError):
        model.hazard(ParamPair(1.0, 1.0), 0.5, 0.0)
    with pytest.raises(DomainError):
        model.hazard(ParamPair(1.0, 1.0), 2.0, -1.0)


def test_survival_is_one_at_origin_and_matches_exponential():
    p = ParamPair(0.7, 0.0)
    assert model.survival(p, 2.5, 0.0) == 1.0
    np.testing.assert_allclose(model.survival(p, 2.5, 2.0), math.exp(-1.4), rtol=1e-15)


@pytest.mark.parametrize("a,b,theta", [(0.5, 1.5, 1.7), (1.0, 0.0, 1.0), (0.0, 2.0, 2.0), (0.2, 0.4, 0.6)])
def test_lifetime_pdf_integrates_to_one(a, b, theta):
    p = ParamPair(a, b)
    value, _ = integrate_1d(lambda t: model.lifetime_pdf(p, theta, t), QuadratureSpec(1e-11))
    assert abs(value - 1) < 1e-8


def test_lifetime_pdf_is_hazard_times_survival():
    p = ParamPair(0.3, 0.8)
    t = np.linspace(0.1, 4, 9)
    np.testing.assert_allclose(model.lifetime_pdf(p, 1.7, t),
                               model.hazard(p, 1.7, t) * model.survival(p, 1.7, t), rtol=1e-15)


def test_prior_independent_case_is_product_of_exponentials():
    cfg = ModelConfig(1.0, 0.5, 2.0, 0.0)
    a, b = 1.3, 0.4
    expected = 0.5 * math.exp(-0.5 * a) * 2.0 * math.exp(-2.0 * b)
    assert model.prior_density(cfg, ParamPair(a, b)) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("rho", [-1.0, -0.3, 0.0, 0.5, 1.0])
def test_prior_normalizes_and_has_exponential_marginals(rho):
    cfg = ModelConfig(1.5, 0.1, 0.2, rho)
    total, _ = integrate_2d(lambda a, b: model.prior_density(cfg, a=a, b=b), QuadratureSpec(1e-10),
                            scales=(10.0, 5.0))
    assert abs(total - 1) < 1e-8
    # FGM marginal of a is Exponential(lambda1) whatever rho is
    a0 = 3.0
    marg, _ = integrate.quad(lambda b: model.prior_density(cfg, a=a0, b=b), 0, np.inf, epsrel=1e-12)
    assert marg == pytest.approx(0.1 * math.exp(-0.1 * a0), rel=1e-9)


def test_prior_nonnegative_at_extreme_dependence():
    a, b = np.meshgrid(np.linspace(0, 50, 60), np.linspace(0, 50, 60))
    for rho in (-1.0, 1.0):
        assert np.all(np.asarray(model.prior_density(SIM_CFG.replace(rho=rho), a=a, b=b)) >= 0)


def test_marginal_pdf_known_value():
    # value checked against 2-D quadrature of lifetime_pdf * prior (see validation checks)
    cfg = ModelConfig(2.0, 1.0, 1.0, 0.5)
    assert model.marginal_lifetime_pdf(cfg, 1.0) == pytest.approx(0.37666666666666665, rel=1e-14)


@pytest.mark.parametrize("t", [0.05, 0.7, 3.0, 25.0])
def test_marginal_pdf_matches_2d_quadrature(t):
    value, _ = integrate_2d(
        lambda a, b: model.lifetime_pdf(ParamPair(a, b), SIM_CFG.theta, t) * model.prior_density(SIM_CFG, a=a, b=b)
        if a + b > 0 else 0.0,
        QuadratureSpec(1e-10), scales=(10.0, 5.0),
    )
    assert model.marginal_lifetime_pdf(SIM_CFG, t) == pytest.approx(value, rel=1e-8)


def test_marginal_pdf_two_forms_agree():
    t = np.geomspace(1e-3, 1e3, 200)
    for cfg in (SIM_CFG, ModelConfig(0.6, 2.0, 0.3, -0.9), ModelConfig(4.0, 0.05, 1.7, 1.0)):
        np.testing.assert_allclose(model.marginal_lifetime_pdf(cfg, t),
                                   model.marginal_lifetime_pdf_from_integrals(cfg, t), rtol=1e-11)


def test_marginal_pdf_independent_prior_is_first_integral():
    cfg = SIM_CFG.replace(rho=0.0)
    t = np.geomspace(1e-2, 1e2, 50)
    i1 = model.marginal_integrals(cfg, t)[0]
    np.testing.assert_allclose(model.marginal_lifetime_pdf(cfg, t), cfg.lambda1 * cfg.lambda2 * i1, rtol=1e-12)


def test_marginal_pdf_normalizes_and_mean():
    f = lambda t: model.marginal_lifetime_pdf(SIM_CFG, t)
    total, _ = integrate_1d(f, QuadratureSpec(1e-11, 500, scale=0.1))
    mean, _ = integrate_1d(lambda t: t * f(t), QuadratureSpec(1e-11, 500, scale=0.1))
    assert abs(total - 1) < 1e-8
    assert mean == pytest.approx(0.19450551595901788, rel=1e-8)


def test_log_marginal_is_log_of_density():
    assert model.log_marginal_lifetime_pdf(SIM_CFG, 1.0) == pytest.approx(math.log(model.marginal_lifetime_pdf(SIM_CFG, 1.0)))


def test_plugin_functions():
    assert model.plugin_reliability(0.5, 0.0, 2.0, 2.0) == pytest.approx(math.exp(-1.0))
    assert model.plugin_hazard(1.0, 2.0, 2.0, 3.0) == 7.0
    with pytest.raises(DomainError):
        model.plugin_reliability(-1.0, 0.0, 2.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(
    theta=st.floats(0.3, 5.0), l1=st.floats(0.05, 3.0), l2=st.floats(0.05, 3.0), rho=st.floats(-1.0, 1.0),
    t=st.floats(1e-4, 1e3),
)
def test_marginal_pdf_positive_and_forms_agree(theta, l1, l2, rho, t):
    cfg = ModelConfig(theta, l1, l2, rho)
    v = model.marginal_lifetime_pdf(cfg, t)
    assert v > 0
    assert v == pytest.approx(model.marginal_lifetime_pdf_from_integrals(cfg, t), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0.0, 5.0), b=st.floats(0.01, 5.0), theta=st.floats(0.2, 5.0),
       t1=st.floats(0.01, 10.0), t2=st.floats(0.01, 10.0))
def test_survival_decreasing(a, b, theta, t1, t2):
    p = ParamPair(a, b)
    lo, hi = sorted((t1, t2))
    assert model.survival(p, theta, lo) >= model.survival(p, theta, hi)
