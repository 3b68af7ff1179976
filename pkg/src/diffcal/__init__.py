"""Differential calorimeter simulation and relative heat-capacity estimation."""

from .errors import (DiffcalError, NoSteadyStateError, ProtocolError,
                     TraceError)
from .estimator import (AttemptRecord, ErrorBudget, HeatCapacityEstimate,
                        calibrate_dt, error_budget, estimate_dC_over_C,
                        extract_type1, extract_type2, mass_ratio_k)
from .harness import ExperimentPlan, SummaryTable, recovery_report, run_batch
from .signals import (FluctuationEvent, LagEstimate, SteadyStateCriterion,
                      TrendModel, detect_fluctuations, detect_steady_state,
                      detrend, fit_trend, fluctuation_growth, lead_lag)
from .simulator import (CalorimeterConfig, EnvironmentModel,
                        FluctuationEventSpec, MultiChannelTrace, NoiseModel,
                        ThermostatProfile, render_event_power, simulate_attempt,
                        simulate_truth, thermostat_setpoint)
from .traceio import read_config, read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "DiffcalError",
    "NoSteadyStateError",
    "ProtocolError",
    "TraceError",
    "AttemptRecord",
    "ErrorBudget",
    "HeatCapacityEstimate",
    "calibrate_dt",
    "error_budget",
    "estimate_dC_over_C",
    "extract_type1",
    "extract_type2",
    "mass_ratio_k",
    "ExperimentPlan",
    "SummaryTable",
    "recovery_report",
    "run_batch",
    "FluctuationEvent",
    "LagEstimate",
    "SteadyStateCriterion",
    "TrendModel",
    "detect_fluctuations",
    "detect_steady_state",
    "detrend",
    "fit_trend",
    "fluctuation_growth",
    "lead_lag",
    "CalorimeterConfig",
    "EnvironmentModel",
    "FluctuationEventSpec",
    "MultiChannelTrace",
    "NoiseModel",
    "ThermostatProfile",
    "render_event_power",
    "simulate_attempt",
    "simulate_truth",
    "thermostat_setpoint",
    "read_config",
    "read_trace",
    "write_trace",
]
