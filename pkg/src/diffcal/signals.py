"""Trend removal and event detection on temperature series.

All functions take plain arrays sampled at a uniform ``sample_period``
(seconds) and return times in seconds relative to the first sample unless a
``start_time`` is given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.ndimage import uniform_filter1d
from scipy.signal import correlate, find_peaks, lfilter

from .errors import (DegenerateWindowError, FitConvergenceError, FitError,
                     NoExtremaError)

MAD_TO_SIGMA = 1.4826


# --- trends --------------------------------------------------------------

@dataclass
class TrendModel:
    """Fitted trend.

    ``params`` are in raw time units: ascending polynomial coefficients for
    ``linear``/``polynomial``; ``[a, b, tau]`` of ``a + b*exp(-t/tau)`` for
    ``exp_approach``.
    """

    kind: str
    params: np.ndarray
    rms_residual: float
    degree: int | None = None
    converged: bool = True
    # polynomial evaluation uses a centred, scaled variable for accuracy
    _center: float = 0.0
    _scale: float = 1.0
    _scaled_coef: np.ndarray | None = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "exp_approach":
            a, b, tau = self.params
            return a + b * np.exp(-t / tau)
        return np.polynomial.polynomial.polyval((t - self._center) / self._scale, self._scaled_coef)


def _parse_kind(kind, degree):
    if kind in ("linear", "exp_approach"):
        return kind, (1 if kind == "linear" else None)
    if kind in ("polynomial", "poly"):
        if degree is None or not 1 <= int(degree) <= 6:
            raise ValueError("polynomial degree must be in [1, 6]")
        return "polynomial", int(degree)
    raise ValueError(f"unknown trend kind {kind!r}")


def fit_trend(t, y, kind: str = "linear", degree: int | None = None, *,
              max_iter: int = 200, xtol: float = 1e-9) -> TrendModel:
    """Least-squares trend of ``y(t)``.

    Polynomials are solved by orthogonal decomposition on a centred time
    axis.  ``exp_approach`` uses Levenberg-Marquardt started from
    ``(last value, first - last, span / 3)``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    kind, degree = _parse_kind(kind, degree)
    n_params = 3 if kind == "exp_approach" else degree + 1
    if len(y) <= n_params:
        raise FitError("series too short for the number of trend parameters")
    if kind == "exp_approach":
        return _fit_exp(t, y, max_iter, xtol)

    center = 0.5 * (t[0] + t[-1])
    scale = max(0.5 * (t[-1] - t[0]), 1e-300)
    u = (t - center) / scale
    X = np.vander(u, degree + 1, increasing=True)
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < degree + 1:
        raise FitError("rank-deficient design matrix")
    raw = np.polynomial.polynomial.Polynomial(coef)
    # substitute u = (t - center)/scale to express coefficients in raw t
    raw = raw(np.polynomial.polynomial.Polynomial([-center / scale, 1.0 / scale]))
    params = np.zeros(degree + 1)
    params[:len(raw.coef)] = raw.coef
    resid = y - X @ coef
    return TrendModel(kind, params, float(np.sqrt(np.mean(resid**2))), degree,
                      True, center, scale, coef)


def _fit_exp(t, y, max_iter, xtol):
    t0 = t[0]
    tr = t - t0
    span = tr[-1]
    p0 = np.array([y[-1], y[0] - y[-1], span / 3.0])

    def resid(p):
        return p[0] + p[1] * np.exp(-tr / p[2]) - y

    def jac(p):
        e = np.exp(-tr / p[2])
        return np.column_stack([np.ones_like(tr), e, p[1] * tr * e / p[2] ** 2])

    res = optimize.least_squares(resid, p0, jac=jac, method="lm", xtol=xtol,
                                 ftol=1e-15, gtol=1e-15, max_nfev=max_iter, x_scale="jac")
    a, b_rel, tau = res.x
    converged = res.status in (2, 3, 4) or (res.status == 1 and res.cost == 0.0)
    if tau <= 0 or not np.isfinite(res.x).all():
        converged = False
    # move the amplitude back to the raw time origin
    b = b_rel * math.exp(t0 / tau) if tau > 0 else b_rel
    rms = float(np.sqrt(np.mean(res.fun**2)))
    model = TrendModel("exp_approach", np.array([a, b, tau]), rms, None, converged)
    if not converged:
        raise FitConvergenceError(
            f"Levenberg-Marquardt did not converge ({res.message})", model)
    return model


def detrend(t, y, model: TrendModel) -> np.ndarray:
    """Residual ``y - model(t)``."""
    return np.asarray(y, dtype=float) - model(t)


# --- steady state ----------------------------------------------------------

@dataclass(frozen=True)
class SteadyStateCriterion:
    window: float = 600.0  # s
    slope_threshold: float = 1e-5  # °C/min
    hold: int = 3

    def __post_init__(self):
        if not self.window > 0:
            raise ValueError("window must be > 0")
        if not self.slope_threshold > 0:
            raise ValueError("slope_threshold must be > 0")
        if int(self.hold) < 1:
            raise ValueError("hold must be >= 1")


def rolling_slope(y, n: int, sample_period: float = 1.0) -> np.ndarray:
    """Least-squares slope (per second) of every length-``n`` window of ``y``.

    Element ``i`` belongs to the window starting at sample ``i``.
    """
    y = np.asarray(y, dtype=float)
    ramp = np.arange(n) - 0.5 * (n - 1)
    denom = np.sum(ramp**2) * sample_period
    return correlate(y - y.mean(), ramp, mode="valid", method="auto") / denom


def detect_steady_state(diff_series, criterion: SteadyStateCriterion = SteadyStateCriterion(),
                        sample_period: float = 1.0, start_time: float = 0.0) -> float | None:
    """Start of the first run of ``hold`` consecutive flat windows, or None.

    A window is flat when the magnitude of its least-squares slope is below
    ``criterion.slope_threshold`` (°C/min).
    """
    n = max(2, int(round(criterion.window / sample_period)))
    y = np.asarray(diff_series, dtype=float)
    span = criterion.hold * n
    if len(y) < span:
        return None
    flat = np.abs(rolling_slope(y, n, sample_period)) * 60.0 < criterion.slope_threshold
    ok = flat[: len(y) - span + 1].copy()
    for j in range(1, criterion.hold):
        ok &= flat[j * n: j * n + len(ok)]
    hits = np.flatnonzero(ok)
    if hits.size == 0:
        return None
    return start_time + hits[0] * sample_period


# --- mesoscale fluctuations --------------------------------------------------

@dataclass(frozen=True)
class FluctuationEvent:
    channel: str
    start: float
    duration: float
    peak_amplitude: float
    polarity: int


def moving_average(y, length: int) -> np.ndarray:
    return uniform_filter1d(np.asarray(y, dtype=float), size=max(1, length), mode="nearest")


def detect_fluctuations(residual, sample_period: float = 1.0,
                        noise_window: tuple[float, float] = (0.0, 7200.0),
                        threshold_factor: float = 4.0,
                        duration_range: tuple[float, float] = (600.0, 3600.0), *,
                        smoothing: float = 60.0, merge_gap: float = 120.0,
                        channel: str = "diff", start_time: float = 0.0) -> list[FluctuationEvent]:
    """Excursions of the smoothed residual beyond ``threshold_factor`` noise sigmas.

    The noise sigma is the scaled median absolute deviation of the smoothed
    residual inside ``noise_window`` (seconds from ``start_time``).
    """
    r = np.asarray(residual, dtype=float)
    n_smooth = max(1, int(round(smoothing / sample_period)))
    w0, w1 = noise_window
    if w1 - w0 < 10 * smoothing:
        raise ValueError("noise window must span at least 10 smoothing lengths")
    i0 = max(0, int(round((w0 - start_time) / sample_period)))
    i1 = min(len(r), int(round((w1 - start_time) / sample_period)))
    if i1 - i0 < 10 * n_smooth:
        raise ValueError("noise window lies outside the series")
    s = moving_average(r, n_smooth)
    ref = s[i0:i1]
    sigma = MAD_TO_SIGMA * np.median(np.abs(ref - np.median(ref)))
    above = np.abs(s) > threshold_factor * sigma
    if not above.any():
        return []
    # run boundaries
    edges = np.diff(np.concatenate([[0], above.astype(np.int8), [0]]))
    starts = list(np.flatnonzero(edges == 1))
    ends = list(np.flatnonzero(edges == -1))  # exclusive
    max_gap = merge_gap / sample_period
    runs = [[starts[0], ends[0]]]
    for a, b in zip(starts[1:], ends[1:]):
        if a - runs[-1][1] < max_gap:
            runs[-1][1] = b
        else:
            runs.append([a, b])
    events = []
    lo, hi = duration_range
    for a, b in runs:
        duration = (b - a) * sample_period
        if not lo <= duration <= hi:
            continue
        seg = s[a:b]
        peak = float(seg[np.argmax(np.abs(seg))])
        events.append(FluctuationEvent(channel, start_time + a * sample_period, duration,
                                       peak, 1 if peak >= 0 else -1))
    return events


def fluctuation_growth(residual, window_a: tuple[float, float], window_b: tuple[float, float],
                       sample_period: float = 1.0, start_time: float = 0.0) -> float:
    """RMS of the residual in ``window_b`` over that in ``window_a``."""
    (a0, a1), (b0, b1) = window_a, window_b
    for lo, hi in (window_a, window_b):
        if hi - lo < 3600.0:
            raise DegenerateWindowError("each window must span at least one hour")
    if a0 < b1 and b0 < a1:
        raise DegenerateWindowError("windows must be disjoint")
    r = np.asarray(residual, dtype=float)

    def rms(lo, hi):
        i0 = int(round((lo - start_time) / sample_period))
        i1 = int(round((hi - start_time) / sample_period))
        if i0 < 0 or i1 > len(r):
            raise DegenerateWindowError("window outside the series")
        return float(np.sqrt(np.mean(r[i0:i1] ** 2)))

    base = rms(a0, a1)
    if base == 0:
        raise DegenerateWindowError("residual is identically zero in the reference window")
    return rms(b0, b1) / base


# --- lead / lag --------------------------------------------------------------

@dataclass(frozen=True)
class LagEstimate:
    peak_time: float
    lag: float  # positive: the calorimeter follows the environment
    correlation: float
    extremum: str  # "max" | "min"
    reliable: bool


def _windowed_correlation(env, diff, centre, half, max_shift):
    """Pearson correlation of env[c-half:c+half] with diff shifted by each lag."""
    e = env[centre - half: centre + half]
    d = diff[centre - half - max_shift: centre + half + max_shift]
    n = len(e)
    e0 = e - e.mean()
    e_norm = np.sqrt(np.sum(e0**2))
    d = d - d.mean()
    cross = correlate(d, e0, mode="valid", method="fft")
    c1 = np.concatenate([[0.0], np.cumsum(d)])
    c2 = np.concatenate([[0.0], np.cumsum(d * d)])
    s1 = c1[n:] - c1[:-n]
    s2 = c2[n:] - c2[:-n]
    var = np.maximum(s2 - s1 * s1 / n, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = cross / (e_norm * np.sqrt(var))
    return np.nan_to_num(r)


def lead_lag(env_series, diff_series, max_lag: float, sample_period: float = 1.0, *,
             smoothing: float = 3600.0, min_correlation: float = 0.3,
             start_time: float = 0.0) -> list[LagEstimate]:
    """Delay of the differential response at each environmental extremum.

    Extrema are found on a moving-average-smoothed environment.  Around each
    one, env over a window of ``4 * max_lag`` is correlated with the
    differential series shifted by every lag in ``[-max_lag, max_lag]``; the
    lag of largest absolute correlation is reported.
    """
    env = np.asarray(env_series, dtype=float)
    diff = np.asarray(diff_series, dtype=float)
    if len(env) != len(diff):
        raise ValueError("series must share a time base")
    span = (len(env) - 1) * sample_period
    if not 0 < max_lag < span / 4:
        raise ValueError("max_lag must be positive and below a quarter of the span")
    max_shift = int(round(max_lag / sample_period))
    half = 2 * max_shift
    smooth = moving_average(env, int(round(smoothing / sample_period)))
    p2p = np.ptp(smooth)
    if p2p == 0:
        raise NoExtremaError("environment series is flat")
    found = []
    for sign, label in ((1.0, "max"), (-1.0, "min")):
        idx, _ = find_peaks(sign * smooth, distance=max(1, 2 * max_shift), prominence=0.1 * p2p)
        found.extend((i, label) for i in idx)
    found.sort()
    out = []
    for i, label in found:
        if i - half - max_shift < 0 or i + half + max_shift > len(env):
            continue
        r = _windowed_correlation(env, diff, i, half, max_shift)
        j = int(np.argmax(np.abs(r)))
        corr = float(np.clip(r[j], -1.0, 1.0))
        out.append(LagEstimate(start_time + i * sample_period, (j - max_shift) * sample_period,
                               corr, label, abs(corr) >= min_correlation))
    if not out:
        raise NoExtremaError("no environmental extremum with enough data around it")
    return out


def first_order_response(x, tau: float, sample_period: float = 1.0, y0: float | None = None) -> np.ndarray:
    """Exact discretisation of ``tau y' = x - y`` for a piecewise-linear input."""
    x = np.asarray(x, dtype=float)
    a = math.exp(-sample_period / tau)
    # ramp-invariant coefficients
    b1 = 1 - tau / sample_period * (1 - a)
    b0 = tau / sample_period * (1 - a) - a
    y0 = x[0] if y0 is None else y0
    return lfilter([b1, b0], [1.0, -a], x, zi=[y0 - b1 * x[0]])[0]
