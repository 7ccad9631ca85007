"""Tests for service-time distribution models."""

from __future__ import annotations

import math

import numpy as np
import pytest
from busyvar.dist import (
    Deterministic,
    Erlang,
    Exponential,
    Gamma,
    HyperExponential,
    Lomax,
    TriState,
    Uniform,
    Weibull,
    integrated_tail,
    moments,
    partial_integrated_tail,
    quantile,
    reliability_tags,
    sample,
    survival,
    with_mean,
)
from busyvar.errors import InfiniteMomentError, InvalidArgumentError
from busyvar.numerics import integrate_semi_infinite
from pydantic import ValidationError
from scipy import special

TIMES = np.array([0.0, 0.05, 0.3, 1.0, 1.7, 2.5, 6.0])

ALL_FAMILIES = {
    "deterministic": Deterministic(mean=1.0),
    "exponential": Exponential(mean=1.0),
    "erlang": Erlang(k=3, mean=1.0),
    "gamma": Gamma(shape=0.5, mean=1.0),
    "hyperexponential": HyperExponential(p=(0.5, 0.5), means=(0.5, 1.5)),
    "uniform": Uniform(low=0.2, high=1.8),
    "weibull": Weibull(shape=1.5, scale=1.0),
    "lomax": Lomax(shape=6.0, scale=5.0),
}


def _gamma_tail(shape: float, theta: float, t: np.ndarray) -> np.ndarray:
    x = t / theta
    return shape * theta * special.gammaincc(shape + 1.0, x) - t * special.gammaincc(shape, x)


def test_moments_closed_forms(exp1, det1, erlang2, uniform02, h2):
    """Test raw moments and squared CVs of the finite families."""
    m = moments(exp1)
    assert (m.alpha, m.mu2, m.mu3, m.gamma_s2) == (1.0, 2.0, 6.0, 1.0)
    assert moments(det1).gamma_s2 == 0.0
    assert moments(erlang2).mu2 == pytest.approx(1.5)
    assert moments(erlang2).gamma_s2 == pytest.approx(0.5)
    assert moments(uniform02).gamma_s2 == pytest.approx(1.0 / 3.0)

    mix = moments(h2)
    assert mix.alpha == pytest.approx(1.0)
    assert mix.mu2 == pytest.approx(2.5)
    assert mix.mu3 == pytest.approx(10.5)
    assert mix.gamma_s2 == pytest.approx(1.5)


def test_lomax_moment_thresholds(lomax_heavy):
    """Test infinite moments are flagged by shape."""
    heavy = moments(lomax_heavy)
    assert heavy.alpha == pytest.approx(2.0)
    assert math.isinf(heavy.mu2) and math.isinf(heavy.mu3)
    assert not heavy.finite_variance

    moderate = moments(Lomax(shape=2.5, scale=1.5))
    assert math.isfinite(moderate.mu2)
    assert math.isinf(moderate.mu3)

    light = moments(Lomax(shape=4.0, scale=3.0))
    assert light.alpha == pytest.approx(1.0)
    assert light.mu2 == pytest.approx(3.0)
    assert light.mu3 == pytest.approx(27.0)
    assert light.gamma_s2 == pytest.approx(2.0)

    assert math.isinf(moments(Lomax(shape=0.8, scale=1.0)).alpha)


def test_survival_values(exp1, uniform02, det1):
    """Test survival functions at a few points."""
    assert survival(exp1, 1.0) == pytest.approx(math.exp(-1.0))
    assert survival(uniform02, 0.5) == pytest.approx(0.75)
    assert survival(det1, 0.999) == 1.0
    assert survival(det1, 1.0) == 0.0
    assert survival(exp1, math.inf) == 0.0


def test_negative_time_rejected(exp1):
    """Test negative and NaN times raise."""
    with pytest.raises(InvalidArgumentError, match=">= 0"):
        survival(exp1, -0.1)
    with pytest.raises(InvalidArgumentError):
        integrated_tail(exp1, [0.0, math.nan])


def test_integrated_tail_anchor_and_monotone(unit_mean_models):
    """Test h(0) equals the mean and h never increases."""
    for name, model in unit_mean_models.items():
        values = np.asarray(integrated_tail(model, TIMES))
        assert values[0] == pytest.approx(1.0, rel=1e-12), name
        assert np.all(np.diff(values) <= 1e-15), name
        assert integrated_tail(model, math.inf) == 0.0


def test_partial_and_integrated_tail_sum_to_mean(unit_mean_models):
    """Test the two tail integrals partition the mean."""
    for name, model in unit_mean_models.items():
        total = np.asarray(partial_integrated_tail(model, TIMES)) + np.asarray(
            integrated_tail(model, TIMES)
        )
        np.testing.assert_allclose(total, 1.0, rtol=1e-12, err_msg=name)


def test_integrated_tail_closed_forms(exp1, det1, uniform02):
    """Test closed-form tails at known points."""
    assert integrated_tail(exp1, 2.0) == pytest.approx(math.exp(-2.0))
    assert integrated_tail(det1, 0.4) == pytest.approx(0.6)
    assert partial_integrated_tail(det1, 0.4) == pytest.approx(0.4)
    assert partial_integrated_tail(det1, 0.0) == 0.0
    assert integrated_tail(uniform02, 1.0) == pytest.approx(0.25)
    assert partial_integrated_tail(exp1, math.inf) == pytest.approx(1.0)


def test_erlang_tail_matches_gamma_formula(erlang2):
    """Test the Poisson-sum Erlang tail against incomplete gamma functions."""
    np.testing.assert_allclose(
        integrated_tail(erlang2, TIMES), _gamma_tail(2.0, 0.5, TIMES), rtol=1e-12, atol=1e-15
    )


def test_quadrature_tail_for_non_integer_gamma():
    """Test the quadrature fallback on a gamma shape without closed form."""
    model = Gamma(shape=0.5, mean=1.0)
    np.testing.assert_allclose(
        integrated_tail(model, TIMES), _gamma_tail(0.5, 2.0, TIMES), rtol=0.0, atol=1e-10
    )


def test_quadrature_tail_for_weibull():
    """Test the quadrature fallback on a Rayleigh-shaped Weibull."""
    model = Weibull(shape=2.0, scale=1.0)
    expected = 0.5 * math.sqrt(math.pi) * special.erfc(TIMES)
    assert model.alpha == pytest.approx(0.5 * math.sqrt(math.pi))
    np.testing.assert_allclose(integrated_tail(model, TIMES), expected, rtol=0.0, atol=1e-10)


def test_lomax_tail_with_infinite_variance(lomax_heavy):
    """Test the integrated tail stays finite when only the mean is."""
    assert integrated_tail(lomax_heavy, 0.0) == pytest.approx(2.0)
    assert integrated_tail(lomax_heavy, 3.0) == pytest.approx(2.0 * 4.0**-0.5)


def test_infinite_mean_rejects_tail():
    """Test tail integrals need a finite mean."""
    model = Lomax(shape=0.8, scale=1.0)
    with pytest.raises(InfiniteMomentError, match="mean"):
        integrated_tail(model, 1.0)
    with pytest.raises(InfiniteMomentError):
        with_mean(model, 1.0)


def test_quantile_inverse_cdf(exp1, h2, uniform02):
    """Test quantiles invert the distribution function."""
    assert quantile(exp1, 0.5) == pytest.approx(math.log(2.0))
    assert quantile(uniform02, 0.25) == pytest.approx(0.5)
    u = np.array([0.0, 0.1, 0.5, 0.9, 0.999])
    np.testing.assert_allclose(survival(h2, quantile(h2, u)), 1.0 - u, atol=1e-12)
    with pytest.raises(InvalidArgumentError, match="probabilities"):
        quantile(exp1, 1.0)


def test_sample_is_inverse_cdf_of_generator_uniforms(h2, exp1):
    """Test every draw is the quantile of exactly one generator uniform."""
    for model in (h2, exp1, Gamma(shape=0.5, mean=1.0), Lomax(shape=4.0, scale=3.0)):
        drawn = sample(model, np.random.default_rng(3), 64)
        expected = quantile(model, np.random.default_rng(3).random(64))
        np.testing.assert_array_equal(drawn, expected)
    assert sample(h2, np.random.default_rng(5)) == quantile(h2, np.random.default_rng(5).random())


def test_hyperexponential_quantile_is_monotone(h2):
    """Test the mixture sampler is increasing in its uniform and inverts the CDF."""
    u = np.array([0.1, 0.3, 0.6, 0.9])
    x = np.asarray(quantile(h2, u))
    assert np.all(np.diff(x) > 0.0)
    np.testing.assert_allclose(survival(h2, x), 1.0 - u, rtol=1e-12)
    assert x[-1] == pytest.approx(2.4689, abs=1e-4)

    grid = np.sort(np.random.default_rng(8).random(2_000))
    assert np.all(np.diff(np.asarray(h2.from_uniform(grid))) >= 0.0)


def test_hyperexponential_draw_independent_of_batch(h2):
    """Test a draw does not depend on the other uniforms solved alongside it."""
    u = np.random.default_rng(21).random(50)
    together = np.asarray(quantile(h2, u))
    alone = np.array([quantile(h2, value) for value in u])
    np.testing.assert_allclose(together, alone, rtol=1e-13, atol=0.0)
    assert quantile(h2, 0.0) == 0.0


def test_deterministic_sample(det1):
    """Test the point mass always draws its value."""
    assert sample(det1, np.random.default_rng(0)) == 1.0
    assert np.all(sample(det1, np.random.default_rng(1), 10) == 1.0)


@pytest.mark.parametrize("name", sorted(ALL_FAMILIES))
def test_integrated_tail_matches_survival_quadrature(name):
    """Test h(t) against direct quadrature of the survival function beyond t."""
    model = ALL_FAMILIES[name]
    for t in (0.0, 0.3, 1.0, 2.5):
        kinks = [b - t for b in model.breakpoints if b > t]
        direct = integrate_semi_infinite(
            lambda x, start=t: np.asarray(model.survival(start + x)),
            abs_tol=1e-13,
            rel_tol=1e-11,
            scale=model.alpha,
            breakpoints=kinks,
        )
        assert integrated_tail(model, t) == pytest.approx(direct.value, rel=1e-9, abs=1e-12), t


@pytest.mark.parametrize("name", sorted(ALL_FAMILIES))
def test_sample_moments_match_closed_forms(name):
    """Test the first two sample moments of a million draws within four standard errors."""
    model = ALL_FAMILIES[name]
    m = moments(model)
    n = 1_000_000
    draws = np.asarray(sample(model, np.random.default_rng(2024), n))
    squares = draws * draws
    for observed, exact, spread in (
        (draws.mean(), m.alpha, draws.std(ddof=1)),
        (squares.mean(), m.mu2, squares.std(ddof=1)),
    ):
        assert abs(observed - exact) <= 4.0 * spread / math.sqrt(n) + 1e-12, (name, exact)


def test_with_mean_preserves_shape(h2, uniform02, erlang2):
    """Test rescaling keeps the squared CV."""
    weibull, lomax = Weibull(shape=0.7, scale=1.0), Lomax(shape=4.0, scale=3.0)
    for model in (h2, uniform02, erlang2, weibull, lomax):
        scaled = with_mean(model, 2.5)
        assert scaled.alpha == pytest.approx(2.5)
        assert moments(scaled).gamma_s2 == pytest.approx(moments(model).gamma_s2)
        assert type(scaled) is type(model)


def test_reliability_tags(exp1, det1, h2, uniform02):
    """Test analytically known class memberships."""
    exp_tags = reliability_tags(exp1)
    assert {exp_tags.is_nbue, exp_tags.is_nwue, exp_tags.is_dfr, exp_tags.is_imrl} == {
        TriState.YES
    }
    assert reliability_tags(det1).is_nbue is TriState.YES
    assert reliability_tags(det1).is_nwue is TriState.NO
    assert reliability_tags(uniform02).is_nbue is TriState.YES
    assert reliability_tags(h2).is_dfr is TriState.YES
    assert reliability_tags(h2).is_nbue is TriState.NO
    assert reliability_tags(Gamma(shape=0.5, mean=1.0)).is_imrl is TriState.YES
    assert reliability_tags(Weibull(shape=3.0, scale=1.0)).is_nbue is TriState.YES


def test_model_validation():
    """Test invalid parameters are rejected at construction."""
    with pytest.raises(ValidationError):
        Exponential(mean=-1.0)
    with pytest.raises(ValidationError):
        Exponential(mean=math.inf)
    with pytest.raises(ValidationError, match="sum to 1"):
        HyperExponential(p=(0.5, 0.6), means=(1.0, 2.0))
    with pytest.raises(ValidationError, match="same length"):
        HyperExponential(p=(1.0,), means=(1.0, 2.0))
    with pytest.raises(ValidationError, match="high must exceed low"):
        Uniform(low=2.0, high=1.0)
    with pytest.raises(ValidationError):
        Deterministic(mean=0.0)


def test_models_are_immutable(exp1):
    """Test models cannot be mutated after construction."""
    with pytest.raises(ValidationError):
        exp1.mean = 2.0
