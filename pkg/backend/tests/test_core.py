"""Tests for the busy-period mean and variance routes."""

from __future__ import annotations

import math

import numpy as np
import pytest
from busyvar.bounds import general_bounds
from busyvar.core import (
    QueueInput,
    VarianceMethod,
    b_coefficient,
    map_power,
    md_core,
    mean_busy_period,
    traffic_intensity,
    variance_integral,
    variance_md_exact,
    variance_mm_exact,
    variance_series,
)
from busyvar.dist import Deterministic, Exponential, Gamma, HyperExponential, Lomax
from busyvar.errors import InfiniteMomentError, InvalidArgumentError, RangeOverflowError

MM_VARIANCE_RHO_1 = 4.2123665
MM_VARIANCE_RHO_HALF = 0.5191815
MD_VARIANCE_RHO_1 = 0.9524924
MD_VARIANCE_RHO_HALF = 0.0695606
H2_VARIANCE = 5.8228118
ERLANG2_VARIANCE = 2.5437176

RHO_GRID = (0.25, 0.5, 1.0, 2.0, 5.0)


def test_traffic_intensity(exp1, h2):
    """Test rho derives from lambda and the mean."""
    assert traffic_intensity(QueueInput(1.0, exp1)) == 1.0
    assert traffic_intensity(QueueInput(2.0, Deterministic(mean=0.5))) == 1.0
    assert traffic_intensity(QueueInput(1.0, h2)) == pytest.approx(1.0)


def test_queue_input_validation(lomax_heavy):
    """Test arrival rates and means are validated on construction."""
    with pytest.raises(InvalidArgumentError, match="lambda"):
        QueueInput(0.0, Exponential(mean=1.0))
    with pytest.raises(InvalidArgumentError, match="lambda"):
        QueueInput(math.nan, Exponential(mean=1.0))
    with pytest.raises(InfiniteMomentError, match="mean"):
        QueueInput(1.0, Lomax(shape=1.0, scale=1.0))
    assert QueueInput(1.0, lomax_heavy).rho == pytest.approx(2.0)


def test_mean_busy_period():
    """Test the closed-form mean."""
    assert mean_busy_period(QueueInput(1.0, Exponential(mean=1.0))) == pytest.approx(math.e - 1)
    assert mean_busy_period(QueueInput(1.0, Exponential(mean=0.5))) == pytest.approx(0.6487213)
    light = mean_busy_period(QueueInput(0.001, Exponential(mean=1.0)))
    assert light == pytest.approx(1.0005002, rel=1e-7)


def test_mean_busy_period_overflow_guard(exp1):
    """Test loads past the guard fail fast."""
    with pytest.raises(RangeOverflowError, match="overflow guard"):
        mean_busy_period(QueueInput(400.0, exp1))


def test_mm_exact_values():
    """Test the exponential-service closed form."""
    assert variance_mm_exact(1.0, 1.0).value == pytest.approx(MM_VARIANCE_RHO_1, rel=1e-7)
    assert variance_mm_exact(1.0, 0.5).value == pytest.approx(MM_VARIANCE_RHO_HALF, rel=1e-6)
    assert variance_mm_exact(0.01, 0.01).value == pytest.approx(1.015103, rel=1e-5)
    assert variance_mm_exact(1.0, 0.0).value == 0.0
    assert variance_mm_exact(1.0, 1.0).method is VarianceMethod.MM_EXACT


def test_mm_exact_increasing_in_load():
    """Test the exponential-service variance grows with rho."""
    values = [variance_mm_exact(1.0, rho).value for rho in np.linspace(0.1, 20.0, 60)]
    assert np.all(np.diff(values) > 0.0)


def test_md_exact_values():
    """Test the constant-service closed form."""
    assert variance_md_exact(1.0, 1.0).value == pytest.approx(MD_VARIANCE_RHO_1, rel=1e-7)
    assert variance_md_exact(1.0, 0.5).value == pytest.approx(MD_VARIANCE_RHO_HALF, rel=1e-6)
    assert variance_md_exact(1.0, 1e-6).value == pytest.approx(0.0, abs=1e-15)


def test_md_core_small_rho_has_no_cancellation():
    """Test the series branch keeps relative accuracy near zero load."""
    rho = 1e-4
    assert md_core(rho) == pytest.approx(rho**3 / 3.0, rel=1e-3)
    assert md_core(0.999) == pytest.approx(
        math.expm1(2 * 0.999) - 2 * 0.999 * math.exp(0.999), rel=1e-13
    )


def test_variance_integral_oracles(exp1, det1, h2, erlang2):
    """Test quadrature against closed forms and reference values."""
    assert variance_integral(QueueInput(1.0, exp1)).value == pytest.approx(
        MM_VARIANCE_RHO_1, rel=1e-7
    )
    det = variance_integral(QueueInput(1.0, det1))
    assert det.value == pytest.approx(MD_VARIANCE_RHO_1, rel=1e-7)
    assert det.method is VarianceMethod.INTEGRAL
    assert variance_integral(QueueInput(1.0, h2)).value == pytest.approx(H2_VARIANCE, rel=1e-7)
    assert variance_integral(QueueInput(1.0, erlang2)).value == pytest.approx(
        ERLANG2_VARIANCE, rel=1e-7
    )


def test_variance_integral_infinite_second_moment(lomax_heavy):
    """Test an infinite second moment yields an infinite variance."""
    result = variance_integral(QueueInput(1.0, lomax_heavy))
    assert result.is_infinite
    assert variance_series(QueueInput(1.0, lomax_heavy)).is_infinite


@pytest.mark.parametrize("rho", RHO_GRID)
def test_exponential_and_deterministic_coherence(rho):
    """Test quadrature reproduces both closed forms."""
    exp_q = QueueInput(1.0, Exponential(mean=rho))
    det_q = QueueInput(1.0, Deterministic(mean=rho))
    assert variance_integral(exp_q).value == pytest.approx(
        variance_mm_exact(1.0, rho).value, rel=1e-8
    )
    assert variance_integral(det_q).value == pytest.approx(
        variance_md_exact(1.0, rho).value, rel=1e-8
    )


@pytest.mark.parametrize("rho", RHO_GRID)
def test_series_agrees_with_integral(rho, unit_mean_models):
    """Test the two independent routes agree for every finite family."""
    for name, model in unit_mean_models.items():
        q = QueueInput(rho, model)
        integral = variance_integral(q).value
        series = variance_series(q)
        assert series.value == pytest.approx(integral, rel=1e-6), name
        assert series.diagnostics["corrected"] is True


def test_series_with_polynomial_tail():
    """Test the series route on a Lomax service with finite variance."""
    q = QueueInput(1.0, Lomax(shape=4.0, scale=3.0))
    assert variance_series(q).value == pytest.approx(variance_integral(q).value, rel=1e-6)


def test_series_bracketed_for_erlang(erlang2):
    """Test the Erlang variance sits inside the general bracket."""
    value = variance_series(QueueInput(1.0, erlang2)).value
    assert 2.3116 <= value <= 2.9049


def test_uncorrected_series_reproduces_published_column():
    """Test the series without the CV factor and its failure as a bound."""
    q = QueueInput(1.0, Exponential(mean=0.5))
    uncorrected = variance_series(q, corrected=False)
    assert uncorrected.value == pytest.approx(0.50046, abs=2e-5)
    assert uncorrected.value < variance_mm_exact(1.0, 0.5).value
    assert uncorrected.diagnostics["corrected"] is False


def test_uncorrected_series_exact_for_constant_service(det1):
    """Test the CV factor is irrelevant at zero service variance."""
    q = QueueInput(1.0, det1)
    exact = variance_md_exact(1.0, 1.0).value
    assert variance_series(q, corrected=False).value == pytest.approx(exact, rel=1e-9)


def test_b_coefficient_closed_forms(exp1, det1):
    """Test the exponential and constant-service coefficients."""
    assert b_coefficient(exp1, 2) == pytest.approx(4.0 / 3.0)
    assert b_coefficient(det1, 5) == 2.0
    with pytest.raises(InvalidArgumentError, match="n must be >= 0"):
        b_coefficient(exp1, -1)


def test_b_zero_is_two(unit_mean_models):
    """Test b_0 = 2 for every family with finite variance."""
    for name, model in {**unit_mean_models, "gamma": Gamma(shape=2.5, mean=1.0)}.items():
        assert b_coefficient(model, 0) == pytest.approx(2.0, rel=1e-8), name


def test_b_coefficient_bracket(unit_mean_models):
    """Test 2 / (1 + gamma_s2) <= b_n <= 2 for n up to 20."""
    for name, model in unit_mean_models.items():
        floor = 2.0 / (1.0 + model.moments().gamma_s2)
        for n in range(21):
            b = b_coefficient(model, n)
            assert floor - 1e-9 <= b <= 2.0 + 1e-9, (name, n)


def test_b_coefficient_requires_finite_variance(lomax_heavy):
    """Test b_n needs a finite second moment."""
    with pytest.raises(InfiniteMomentError, match="second moment"):
        b_coefficient(lomax_heavy, 1)


def test_hyperexponential_with_distinct_rates_is_sandwiched():
    """Test a three-branch mixture inside the general bracket."""
    model = HyperExponential(p=(0.2, 0.3, 0.5), means=(0.1, 1.0, 2.0))
    q = QueueInput(0.7, model)
    report = general_bounds(0.7, q.rho, model.moments().gamma_s2)
    value = variance_integral(q).value
    assert report.lower * (1 - 1e-8) <= value <= report.upper * (1 + 1e-8)


def test_map_power_follows_tail(exp1, lomax_heavy):
    """Test the half-line map stretches only for polynomial tails."""
    assert map_power(exp1) == 1.0
    assert map_power(Lomax(shape=4.0, scale=3.0)) == 1.0
    assert map_power(lomax_heavy) == 8.0
    assert map_power(Lomax(shape=2.5, scale=1.0)) == pytest.approx(4.0)
    assert map_power(Lomax(shape=2.5, scale=1.0), multiplicity=3) == 1.0


def test_variance_results_are_pure(h2):
    """Test repeated calls are bit-identical."""
    q = QueueInput(1.3, h2)
    assert variance_integral(q) == variance_integral(q)
    assert variance_series(q).value == variance_series(q).value
