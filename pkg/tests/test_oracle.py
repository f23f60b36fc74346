import math

import numpy as np
import pytest

from gfr_bayes import model, oracle
from gfr_bayes.errors import ConfigError, TooLarge
from gfr_bayes.model import ParamPair
from gfr_bayes.oracle import QuadratureSpec, esp_bruteforce, integrate_1d, integrate_2d, quadrature_cdf
from gfr_bayes.sample import elementary_symmetric
from gfr_bayes.validation import random_context, run_checks

from conftest import SIM_CFG


def test_exponential_integrates_to_one():
    value, err = integrate_1d(lambda t: math.exp(-t))
    assert abs(value - 1) < 1e-10
    assert err < 1e-8


@pytest.mark.parametrize("a,b,theta", [(1.0, 0.0, 1.0), (0.0, 1.0, 2.0), (0.0, 3.0, 3.5)])
def test_special_cases_integrate_to_one(a, b, theta):
    # exponential, Rayleigh and Weibull members of the hazard family
    value, _ = integrate_1d(lambda t: model.lifetime_pdf(ParamPair(a, b), theta, t), QuadratureSpec(1e-11))
    assert abs(value - 1) < 1e-9


def test_cutoff_strategy_agrees_with_transform():
    p = ParamPair(0.5, 1.5)
    f = lambda t: model.lifetime_pdf(p, 1.7, t)
    T = 40.0
    spec = QuadratureSpec(1e-11, tail_cutoff_strategy="cutoff", cutoff=T,
                          tail_bound=lambda T: math.exp(-p.a * T))  # survival <= e^{-aT}
    v_cut, err_cut = integrate_1d(f, spec)
    v_tr, _ = integrate_1d(f, QuadratureSpec(1e-11))
    assert v_cut == pytest.approx(v_tr, abs=err_cut + 1e-10)
    assert "cutoff" in spec.describe()


def test_spec_validation():
    with pytest.raises(ConfigError):
        QuadratureSpec(relative_tolerance=0)
    with pytest.raises(ConfigError):
        QuadratureSpec(tail_cutoff_strategy="cutoff")


def test_integrate_2d_gamma_product():
    # int int a e^{-2a} b^2 e^{-b} = (1/4)(2)
    value, _ = integrate_2d(lambda a, b: a * math.exp(-2 * a) * b * b * math.exp(-b), QuadratureSpec(1e-11))
    assert value == pytest.approx(0.5, rel=1e-9)


def test_esp_bruteforce_limits():
    assert esp_bruteforce([]) == [1.0]
    with pytest.raises(TooLarge):
        esp_bruteforce([1.0] * 21)


def test_esp_cross_check_length_ten(rng):
    v = rng.uniform(0, 2, size=10)
    np.testing.assert_allclose(np.ldexp(*elementary_symmetric(v)), esp_bruteforce(v), rtol=1e-12)


def test_posterior_moment_weight_one_is_one(rng):
    ctx = random_context(rng, r_max=6)
    value, err = oracle.posterior_moment(ctx, "1")
    assert value == pytest.approx(1.0, abs=1e-9)


def test_posterior_moment_bad_weight(tiny_ctx):
    with pytest.raises(ValueError):
        oracle.posterior_moment(tiny_ctx, "a^2")
    with pytest.raises(ValueError):
        oracle.posterior_moment(tiny_ctx, "exp_a")


def test_reciprocal_b_diverges(tiny_ctx):
    with pytest.raises(oracle.DivergenceDetected):
        oracle.posterior_moment(tiny_ctx, "1/b")


def test_quadrature_cdf_exponential():
    grid = np.geomspace(1e-4, 20, 200)
    cdf = quadrature_cdf(lambda t: 2 * math.exp(-2 * t), grid)
    x = np.array([1e-5, 0.01, 0.3, 1.0, 5.0, 30.0])
    np.testing.assert_allclose(cdf(x), 1 - np.exp(-2 * x), rtol=1e-6, atol=1e-9)
    assert cdf.total_mass == pytest.approx(1.0, rel=1e-10)


def test_quadrature_cdf_of_marginal_density():
    grid = np.geomspace(1e-5, 1e3, 400)
    cdf = quadrature_cdf(lambda t: model.marginal_lifetime_pdf(SIM_CFG, t), grid)
    assert cdf.total_mass == pytest.approx(1.0, abs=1e-6)
    vals = cdf(np.geomspace(1e-6, 1e4, 50))
    assert np.all(np.diff(vals) >= 0)
    assert 0 <= vals[0] and vals[-1] <= 1 + 1e-12


def test_validation_suite_passes():
    results = run_checks(quick=True)
    assert len(results) == 5
    for name, ok, detail in results:
        assert ok, f"{name}: {detail}"
