import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffcal.errors import (DegenerateWindowError, FitConvergenceError, FitError,
                            NoExtremaError)
from diffcal.signals import (SteadyStateCriterion, detect_fluctuations,
                             detect_steady_state, detrend, first_order_response,
                             fit_trend, fluctuation_growth, lead_lag,
                             rolling_slope)

# 600 * ln(0.05 * 60 / (1e-5 * 600)), the analytic slope-threshold crossing
STEADY_ORACLE = 600.0 * math.log(0.05 * 60 / (1e-5 * 600))
# (P / 2 pi) * arctan(2 pi tau / P) for P = 24 h, tau = 2 h
LAG_ORACLE = 86400 / (2 * math.pi) * math.atan(2 * math.pi * 7200 / 86400)


def _bump(t, centre, duration, amplitude):
    sigma = duration / 5.0
    return amplitude * np.exp(-0.5 * ((t - centre) / sigma) ** 2)


# --- trends --------------------------------------------------------------------

def test_linear_exact():
    t = np.arange(0.0, 3600.0)
    m = fit_trend(t, 2 + 0.001 * t, "linear")
    assert m.params == pytest.approx([2.0, 0.001], abs=1e-10)
    assert m.rms_residual < 1e-10


def test_exp_approach_exact():
    t = np.arange(0.0, 5400.0)
    m = fit_trend(t, 24 - 2 * np.exp(-t / 600), "exp_approach")
    assert m.converged
    assert m.params == pytest.approx([24.0, -2.0, 600.0], rel=1e-6)


def test_exp_approach_offset_time_axis():
    t = np.arange(7200.0, 12600.0)
    y = 24 - 2 * np.exp(-(t - 7200) / 600)
    m = fit_trend(t, y, "exp_approach")
    assert np.max(np.abs(m(t) - y)) < 1e-8
    assert m.params[2] == pytest.approx(600.0, rel=1e-6)


def test_exp_approach_non_convergence_reports_model():
    t = np.arange(0.0, 3600.0)
    y = 24 - 2 * np.exp(-t / 600)
    with pytest.raises(FitConvergenceError) as info:
        fit_trend(t, y, "exp_approach", max_iter=2)
    assert info.value.model is not None
    assert info.value.model.kind == "exp_approach"


def test_constant_polynomial():
    t = np.arange(0.0, 1000.0)
    m = fit_trend(t, np.full_like(t, 21.5), "polynomial", 3)
    assert m.params[0] == pytest.approx(21.5, abs=1e-12)
    assert np.all(np.abs(m.params[1:]) < 1e-12)
    assert m.rms_residual < 1e-12


def test_polynomial_recovers_cubic():
    t = np.linspace(0.0, 10.0, 500)
    coef = [1.0, -0.5, 0.25, 0.01]
    y = np.polynomial.polynomial.polyval(t, coef)
    m = fit_trend(t, y, "poly", 3)
    assert m.params == pytest.approx(coef, abs=1e-9)


@pytest.mark.parametrize("kind, degree", [("polynomial", 0), ("polynomial", 7), ("cubic", None)])
def test_bad_trend_kind(kind, degree):
    with pytest.raises(ValueError):
        fit_trend(np.arange(10.0), np.arange(10.0), kind, degree)


def test_rank_deficient_and_short():
    with pytest.raises(FitError):
        fit_trend(np.zeros(10), np.arange(10.0), "linear")
    with pytest.raises(FitError):
        fit_trend(np.arange(3.0), np.arange(3.0), "polynomial", 3)


@pytest.mark.parametrize("kind, degree", [("linear", None), ("polynomial", 2), ("polynomial", 5)])
def test_residual_orthogonal_to_basis(kind, degree):
    rng = np.random.default_rng(3)
    t = np.arange(0.0, 7200.0)
    y = 22 + 1e-4 * t + 1e-3 * rng.standard_normal(len(t))
    m = fit_trend(t, y, kind, degree)
    r = detrend(t, y, m)
    u = (t - t.mean()) / (0.5 * (t[-1] - t[0]))
    for p in range(m.degree + 1):
        basis = u**p
        assert abs(r @ basis) / (np.linalg.norm(r) * np.linalg.norm(basis)) < 1e-9
    assert abs(r.mean()) < 1e-12


def test_detrend_idempotent():
    rng = np.random.default_rng(5)
    t = np.arange(0.0, 7200.0)
    y = 22 + 3e-5 * t + 2e-4 * rng.standard_normal(len(t))
    r = detrend(t, y, fit_trend(t, y, "linear"))
    again = fit_trend(t, r, "linear")
    assert np.all(np.abs(again.params) < 1e-10)


def test_detrend_pure_trend():
    t = np.arange(0.0, 3600.0)
    y = 20 + 0.002 * t
    assert np.max(np.abs(detrend(t, y, fit_trend(t, y, "linear")))) < 1e-10


def test_detrend_preserves_bump():
    t = np.arange(0.0, 14400.0)
    y = 22 + 2e-5 * t + _bump(t, 9000, 1800, 1.5e-3)
    r = detrend(t, y, fit_trend(t, y, "linear"))
    assert r.max() == pytest.approx(1.5e-3, rel=0.10)


# --- steady state ----------------------------------------------------------------

def test_rolling_slope_exact_on_ramp():
    y = 0.5 + 0.003 * np.arange(1000.0)
    s = rolling_slope(y, 50, 2.0)
    assert np.allclose(s, 0.0015, atol=1e-12)
    assert len(s) == 1000 - 50 + 1


def test_steady_state_exponential_oracle():
    t = np.arange(0.0, 20000.0)
    hit = detect_steady_state(0.05 * np.exp(-t / 600.0), SteadyStateCriterion())
    assert hit is not None
    assert abs(hit - STEADY_ORACLE) <= 600.0


def test_steady_state_constant():
    assert detect_steady_state(np.full(5000, 0.02), SteadyStateCriterion()) == 0.0


def test_steady_state_ramp_absent():
    t = np.arange(0.0, 20000.0)
    assert detect_steady_state(0.001 * t / 60.0, SteadyStateCriterion()) is None


def test_steady_state_short_series_absent():
    assert detect_steady_state(np.zeros(1000), SteadyStateCriterion()) is None


def test_steady_state_start_time_offset():
    assert detect_steady_state(np.zeros(3000), SteadyStateCriterion(), 1.0, 500.0) == 500.0


@settings(max_examples=30, deadline=None)
@given(th1=st.floats(2e-6, 1e-4), th2=st.floats(2e-6, 1e-4), tau=st.floats(200, 1500))
def test_steady_state_monotone_in_threshold(th1, th2, tau):
    lo, hi = sorted((th1, th2))
    t = np.arange(0.0, 15000.0)
    y = 0.05 * np.exp(-t / tau)
    a = detect_steady_state(y, SteadyStateCriterion(slope_threshold=lo))
    b = detect_steady_state(y, SteadyStateCriterion(slope_threshold=hi))
    if a is not None:
        assert b is not None and b <= a


def test_criterion_validation():
    for kw in ({"window": 0}, {"slope_threshold": -1}, {"hold": 0}):
        with pytest.raises(ValueError):
            SteadyStateCriterion(**kw)


# --- fluctuations -----------------------------------------------------------------

def test_fluctuation_injected_bump():
    rng = np.random.default_rng(11)
    t = np.arange(0.0, 43200.0)
    r = 2e-4 * rng.standard_normal(len(t)) + _bump(t, 20000, 1800, 1.5e-3)
    ev = detect_fluctuations(r)
    assert len(ev) == 1
    e = ev[0]
    assert e.polarity == 1
    assert e.peak_amplitude == pytest.approx(1.5e-3, rel=0.20)
    assert e.duration == pytest.approx(1800, rel=0.25)
    assert e.start < 20000 < e.start + e.duration


def test_fluctuation_negative_bump():
    rng = np.random.default_rng(12)
    t = np.arange(0.0, 43200.0)
    r = 2e-4 * rng.standard_normal(len(t)) - _bump(t, 30000, 2400, 2e-3)
    ev = detect_fluctuations(r, channel="fluid_L")
    assert len(ev) == 1
    assert ev[0].polarity == -1 and ev[0].peak_amplitude < 0
    assert ev[0].channel == "fluid_L"


def test_fluctuation_clean_noise():
    rng = np.random.default_rng(13)
    assert len(detect_fluctuations(2e-4 * rng.standard_normal(86400))) <= 1


def test_fluctuation_all_zero():
    assert detect_fluctuations(np.zeros(20000)) == []


def test_fluctuation_noise_window_too_short():
    with pytest.raises(ValueError):
        detect_fluctuations(np.zeros(20000), noise_window=(0, 500))


def test_fluctuation_large_scale_event():
    # 0.02 °C excursions are handled by the same detector
    rng = np.random.default_rng(14)
    t = np.arange(0.0, 43200.0)
    r = 2e-3 * rng.standard_normal(len(t)) + _bump(t, 20000, 1200, 0.02)
    ev = detect_fluctuations(r)
    assert len(ev) == 1 and ev[0].peak_amplitude == pytest.approx(0.02, rel=0.2)


@pytest.mark.parametrize("c", [0.1, 3.0])
def test_fluctuation_scale_equivariant(c):
    rng = np.random.default_rng(15)
    t = np.arange(0.0, 43200.0)
    r = 2e-4 * rng.standard_normal(len(t)) + _bump(t, 20000, 1800, 1.5e-3)
    a = detect_fluctuations(r)
    b = detect_fluctuations(c * r)
    assert [(e.start, e.duration, e.polarity) for e in a] == [(e.start, e.duration, e.polarity) for e in b]
    for ea, eb in zip(a, b):
        assert eb.peak_amplitude == pytest.approx(c * ea.peak_amplitude, rel=1e-12)


def test_fluctuation_duration_filter():
    rng = np.random.default_rng(16)
    t = np.arange(0.0, 43200.0)
    r = 2e-4 * rng.standard_normal(len(t)) + _bump(t, 20000, 10000, 2e-3)
    assert detect_fluctuations(r) == []


# --- growth ---------------------------------------------------------------------

def test_growth_identical_statistics():
    rng = np.random.default_rng(21)
    r = 2e-4 * rng.standard_normal(4 * 3600)
    ratio = fluctuation_growth(r, (0, 7200), (7200, 14400))
    assert abs(ratio - 1) < 2 / math.sqrt(7200)


def test_growth_doubled_sigma():
    rng = np.random.default_rng(22)
    r = np.concatenate([2e-4 * rng.standard_normal(7200), 4e-4 * rng.standard_normal(7200)])
    assert fluctuation_growth(r, (0, 7200), (7200, 14400)) == pytest.approx(2.0, rel=0.10)


def test_growth_degenerate():
    r = np.concatenate([np.zeros(7200), np.ones(7200)])
    with pytest.raises(DegenerateWindowError):
        fluctuation_growth(r, (0, 7200), (7200, 14400))
    with pytest.raises(DegenerateWindowError):
        fluctuation_growth(r, (0, 1800), (7200, 14400))
    with pytest.raises(DegenerateWindowError):
        fluctuation_growth(r, (0, 7200), (3600, 10800))


# --- lead / lag -----------------------------------------------------------------

def _sinusoid(days=5, period=60.0):
    t = np.arange(0.0, days * 86400.0, period)
    return t, 21 + 0.15 * np.sin(2 * np.pi * t / 86400.0)


def test_lag_constructed_shift():
    t, env = _sinusoid()
    diff = 21 + 0.15 * np.sin(2 * np.pi * (t - 3600.0) / 86400.0)
    est = lead_lag(env, diff, 3 * 3600.0, 60.0)
    assert est
    for e in est:
        assert abs(e.lag - 3600.0) <= 60.0
        assert e.reliable and e.correlation > 0.99


def test_lag_first_order_oracle():
    t, env = _sinusoid(days=6)
    diff = first_order_response(env, 7200.0, 60.0)
    est = lead_lag(env[1440:], diff[1440:], 3 * 3600.0, 60.0, start_time=86400.0)
    assert est
    for e in est:
        assert abs(e.lag - LAG_ORACLE) <= 300.0


def test_lag_uncorrelated_noise_unreliable():
    t, env = _sinusoid()
    rng = np.random.default_rng(31)
    est = lead_lag(env, rng.standard_normal(len(t)), 3 * 3600.0, 60.0)
    assert all(abs(e.correlation) < 0.3 and not e.reliable for e in est)


@pytest.mark.parametrize("shift", [600.0, 1800.0])
def test_lag_shift_equivariance(shift):
    t, env = _sinusoid(days=6)
    diff = first_order_response(env, 3600.0, 60.0)
    n = int(shift / 60)
    base = lead_lag(env[1440:], diff[1440:], 3 * 3600.0, 60.0)
    moved = lead_lag(env[1440:], diff[1440 - n:len(diff) - n], 3 * 3600.0, 60.0)
    assert len(base) == len(moved)
    for a, b in zip(base, moved):
        assert abs((b.lag - a.lag) - shift) <= 60.0


def test_lag_errors():
    t, env = _sinusoid(days=1)
    with pytest.raises(NoExtremaError):
        lead_lag(np.full(len(t), 21.0), env, 3600.0, 60.0)
    with pytest.raises(ValueError):
        lead_lag(env, env, 86400.0, 60.0)
    with pytest.raises(ValueError):
        lead_lag(env, env[:-1], 3600.0, 60.0)


def test_first_order_response_ramp_exact():
    # tau y' = x - y with x = a t, y(0) = -a tau has solution y = a (t - tau)
    t = np.arange(0.0, 5000.0, 10.0)
    y = first_order_response(1e-3 * t, 600.0, 10.0, y0=-1e-3 * 600.0)
    assert np.allclose(y, 1e-3 * (t - 600.0), atol=1e-12)
