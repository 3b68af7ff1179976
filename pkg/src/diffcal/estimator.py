"""Relative heat-capacity estimation from differential temperature traces.

With equal heat delivered to both channels, the ratio of the temperature
rises of the experimental (left) and control (right) channels gives the
relative change of specific heat::

    dC/C = k / (1 + dt / dT_control) - 1

``dt`` is the channel differential ``T_L - T_R`` at the end point,
``dT_control`` the time differential of the control channel and
``k = m_R / m_L`` the ratio of water-equivalent masses.

Two protocols read the end point differently:

* type 1: fixed marks (30/45/60 min) after the second setpoint; requires
  both channels to start at the same temperature.
* type 2: the first window in which the differential trace is flat
  (zone 4); tolerates unequal start temperatures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NoSteadyStateError, ProtocolError, TraceError
from .signals import SteadyStateCriterion, detect_steady_state
from .simulator import MultiChannelTrace

DEFAULT_MARK_OFFSETS = (1800.0, 2700.0, 3600.0)
DEFAULT_BEGIN_TOLERANCE = 0.1  # °C; above this only type 2 is meaningful


@dataclass(frozen=True)
class Mark:
    label: str
    T_end_L: float
    T_end_R: float
    dt: float
    delta_T_control: float


@dataclass
class AttemptRecord:
    """Readings extracted from one attempt.

    ``marks`` holds one entry per read-out point; for type 2 there is a
    single ``"steady"`` mark.
    """

    kind: str  # "control" | "experimental"
    protocol: str  # "type1" | "type2"
    T_begin_L: float
    T_begin_R: float
    marks: list = field(default_factory=list)
    k: float = 1.0
    steady_time: float | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be > 0")

    def mark(self, label: str) -> Mark:
        for m in self.marks:
            if m.label == label:
                return m
        raise KeyError(label)

    @property
    def delta_T_control(self) -> float:
        """Control-channel rise at the last mark."""
        return self.marks[-1].delta_T_control


@dataclass(frozen=True)
class HeatCapacityEstimate:
    value: float
    sigma: float = 0.0
    protocol: str = "type1"
    mark_label: str = ""
    calibrated: bool = False


@dataclass(frozen=True)
class ErrorBudget:
    """First-order uncertainty of dC/C from its measurement sources.

    ``total_dC_over_C_sigma`` is the root-sum-square of the propagated
    components and ``worst_case`` their linear sum.  Inhomogeneity has no
    propagation model and is carried as a declared value only.
    """

    sigma_sensor: float
    sigma_fill_k: float
    sigma_inhomogeneity: float
    sigma_dt_zone4: float
    dt_component: float
    k_component: float
    total_dC_over_C_sigma: float
    worst_case: float


def mark_label(offset: float) -> str:
    return f"{offset / 60:g}min"


def mass_ratio_k(m_L: float, m_R: float) -> float:
    """``m_R / m_L`` for water-equivalent masses (kg)."""
    if not (m_L > 0 and m_R > 0):
        raise ValueError("masses must be > 0")
    return m_R / m_L


def dC_over_C(dt, delta_T_control, k=1.0):
    """Vectorised ratio estimator; no validation."""
    return k / (1.0 + dt / delta_T_control) - 1.0


def estimate_dC_over_C(dt: float, delta_T_control: float, k: float = 1.0, *,
                       sigma_dt: float = 0.0, sigma_k: float = 0.0,
                       protocol: str = "type1", mark_label: str = "",
                       calibrated: bool = False) -> HeatCapacityEstimate:
    if delta_T_control == 0:
        raise ZeroDivisionError("delta_T_control is zero")
    if 1.0 + dt / delta_T_control <= 0:
        raise ValueError("non-physical dt: the experimental channel would not have moved")
    value = float(dC_over_C(dt, delta_T_control, k))
    sigma = 0.0
    if sigma_dt or sigma_k:
        sigma = error_budget(sigma_dt, abs(delta_T_control), sigma_k, dt, k).total_dC_over_C_sigma
    return HeatCapacityEstimate(value, sigma, protocol, mark_label, calibrated)


def error_budget(sigma_dt: float, delta_T_control: float, sigma_k: float,
                 dt: float = 0.0, k: float = 1.0, *, sigma_sensor: float = 0.0,
                 sigma_inhomogeneity: float = 0.0) -> ErrorBudget:
    """Propagate dt and k uncertainties through the ratio estimator.

    ``sigma_sensor`` is per sensor; the differential reading involves two, so
    it enters the dt uncertainty as ``sqrt(2) * sigma_sensor`` in quadrature.
    """
    for name, v in (("sigma_dt", sigma_dt), ("sigma_k", sigma_k),
                    ("sigma_sensor", sigma_sensor), ("sigma_inhomogeneity", sigma_inhomogeneity)):
        if v < 0:
            raise ValueError(f"{name} must be >= 0")
    if delta_T_control <= 0:
        raise ValueError("delta_T_control must be > 0")
    ratio = 1.0 + dt / delta_T_control
    d_dt = k / (delta_T_control * ratio**2)
    d_k = 1.0 / ratio
    sigma_dt_eff = float(np.hypot(sigma_dt, np.sqrt(2.0) * sigma_sensor))
    dt_comp = d_dt * sigma_dt_eff
    k_comp = d_k * sigma_k
    return ErrorBudget(
        sigma_sensor=sigma_sensor,
        sigma_fill_k=sigma_k,
        sigma_inhomogeneity=sigma_inhomogeneity,
        sigma_dt_zone4=sigma_dt,
        dt_component=dt_comp,
        k_component=k_comp,
        total_dC_over_C_sigma=float(np.hypot(dt_comp, k_comp)),
        worst_case=dt_comp + k_comp,
    )


def calibrate_dt(dt_experiment: float, dt_controls: Sequence[float]) -> float:
    """Remove the zero level measured in control attempts (their mean)."""
    controls = np.asarray(dt_controls, dtype=float)
    if controls.size == 0:
        raise ValueError("at least one control dt is required")
    return float(dt_experiment - controls.mean())


# --- extraction ----------------------------------------------------------

def _window_mean(trace, channel, t0, t1):
    i0 = trace.index_of(t0)
    i1 = trace.index_of(t1)
    if i0 < 0 or i1 >= len(trace) or i1 < i0:
        raise TraceError(f"window [{t0:g}, {t1:g}] s is outside the trace")
    return float(np.mean(trace[channel][i0:i1 + 1]))


def _begin(trace, step_time, begin_window):
    t0 = step_time - begin_window
    if t0 < trace.start_time - 1e-9:
        raise TraceError("trace starts after the pre-step window")
    # exclude the step sample itself
    t1 = step_time - trace.sample_period
    return _window_mean(trace, "fluid_L", t0, t1), _window_mean(trace, "fluid_R", t0, t1)


def extract_type1(trace: MultiChannelTrace, step_time: float,
                  mark_offsets: Sequence[float] = DEFAULT_MARK_OFFSETS,
                  begin_tolerance: float = DEFAULT_BEGIN_TOLERANCE, *,
                  begin_window: float = 300.0, mark_halfwidth: float = 60.0,
                  kind: str = "experimental", k: float = 1.0) -> AttemptRecord:
    """Read dt at fixed offsets after the setpoint step.

    Begin temperatures are means over ``begin_window`` seconds before the
    step; each mark is a mean over ``+-mark_halfwidth`` around it.
    """
    if step_time + max(mark_offsets) + mark_halfwidth > trace.end_time + 1e-9:
        raise TraceError("trace is too short for the requested marks")
    b_l, b_r = _begin(trace, step_time, begin_window)
    if abs(b_l - b_r) > begin_tolerance:
        raise ProtocolError(
            f"begin temperatures differ by {abs(b_l - b_r):.4f} °C "
            f"(> {begin_tolerance:g} °C); use the type2 protocol instead")
    marks = []
    for off in mark_offsets:
        t = step_time + off
        e_l = _window_mean(trace, "fluid_L", t - mark_halfwidth, t + mark_halfwidth)
        e_r = _window_mean(trace, "fluid_R", t - mark_halfwidth, t + mark_halfwidth)
        marks.append(Mark(mark_label(off), e_l, e_r, e_l - e_r, e_r - b_r))
    return AttemptRecord(kind, "type1", b_l, b_r, marks, k)


def extract_type2(trace: MultiChannelTrace, step_time: float,
                  flatness: SteadyStateCriterion | None = None, *,
                  begin_window: float = 300.0, zone_window: float = 600.0,
                  search_start: float = 0.0,
                  kind: str = "experimental", k: float = 1.0) -> AttemptRecord:
    """Read dt in the first flat stretch of the differential after the step.

    The flatness search begins ``search_start`` seconds after the step; the
    reading is the mean over ``zone_window`` seconds from the detection time.
    """
    flatness = flatness or SteadyStateCriterion()
    b_l, b_r = _begin(trace, step_time, begin_window)
    i0 = trace.index_of(step_time + search_start)
    diff = trace.diff[i0:]
    t_rel = None
    if len(diff) > flatness.hold * flatness.window / trace.sample_period:
        t_rel = detect_steady_state(diff, flatness, trace.sample_period)
    if t_rel is None:
        raise NoSteadyStateError("the differential temperature never became flat")
    t0 = step_time + search_start + t_rel
    t1 = t0 + zone_window
    if t1 > trace.end_time + 1e-9:
        raise NoSteadyStateError("trace ends inside the steady-state window")
    e_l = _window_mean(trace, "fluid_L", t0, t1)
    e_r = _window_mean(trace, "fluid_R", t0, t1)
    mark = Mark("steady", e_l, e_r, e_l - e_r, e_r - b_r)
    return AttemptRecord(kind, "type2", b_l, b_r, [mark], k, steady_time=t0)
