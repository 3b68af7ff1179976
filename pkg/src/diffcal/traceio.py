"""Trace CSV files and the line-oriented run configuration format.

Trace file::

    # diffcal-trace v1 period=1.0 start=0.0
    time_s,fluid_L_C,fluid_R_C,air_1_C,air_2_C,env_C
    0.000,22.000010,21.999990,22.000000,22.000020,21.000000
    ...

Configuration file: one ``section.key = value`` per line, ``#`` starts a
comment.  Units are seconds, °C, kg, W.
"""

from __future__ import annotations

import io
import math
import os
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ConfigError, TraceError
from .harness import ExperimentPlan
from .signals import SteadyStateCriterion
from .simulator import (CHANNELS, CalorimeterConfig, EnvironmentModel,
                        FluctuationEventSpec, MultiChannelTrace, NoiseModel,
                        ThermostatProfile)

FORMAT_VERSION = 1
HEADER_COLUMNS = ["time_s"] + [f"{c}_C" for c in CHANNELS]
_MAGIC = re.compile(r"^# diffcal-trace v(\d+) period=(\S+) start=(\S+)$")


def _open(target, mode):
    if isinstance(target, (str, os.PathLike)):
        return open(target, mode, newline="", encoding="utf-8"), True
    return target, False


def format_trace(trace: MultiChannelTrace) -> str:
    buf = io.StringIO()
    write_trace(trace, buf)
    return buf.getvalue()


def write_trace(trace: MultiChannelTrace, destination) -> None:
    """Write ``trace`` as CSV to a path or text stream (6 decimals, °C)."""
    for name in CHANNELS:
        if name not in trace.channels:
            raise TraceError(f"trace lacks channel {name}")
    data = np.column_stack([trace.times] + [trace.channels[c] for c in CHANNELS])
    if not np.isfinite(data).all():
        raise TraceError("trace contains non-finite values")
    fh, owned = _open(destination, "w")
    try:
        fh.write(f"# diffcal-trace v{FORMAT_VERSION} period={float(trace.sample_period)!r} "
                 f"start={float(trace.start_time)!r}\n")
        fh.write(",".join(HEADER_COLUMNS) + "\n")
        for row in data:
            fh.write(f"{row[0]:.3f}," + ",".join(f"{v:.6f}" for v in row[1:]) + "\n")
    finally:
        if owned:
            fh.close()


def read_trace(source) -> MultiChannelTrace:
    fh, owned = _open(source, "r")
    try:
        lines = fh.read().splitlines()
    finally:
        if owned:
            fh.close()
    if len(lines) < 2:
        raise TraceError("malformed header: file too short")
    m = _MAGIC.match(lines[0].strip())
    if not m:
        raise TraceError("malformed header: missing '# diffcal-trace v1 period=... start=...' line")
    if int(m.group(1)) != FORMAT_VERSION:
        raise TraceError(f"unsupported trace format version {m.group(1)}")
    try:
        period, start = float(m.group(2)), float(m.group(3))
    except ValueError:
        raise TraceError("malformed header: period/start are not numbers") from None
    if not (math.isfinite(period) and period > 0 and math.isfinite(start)):
        raise TraceError("malformed header: invalid period or start")
    header = [h.strip() for h in lines[1].split(",")]
    if header != HEADER_COLUMNS:
        raise TraceError(f"malformed header: expected columns {','.join(HEADER_COLUMNS)}")
    rows = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(HEADER_COLUMNS):
            raise TraceError(f"ragged row at line {lineno}: {len(parts)} fields, "
                             f"expected {len(HEADER_COLUMNS)}")
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise TraceError(f"unparseable number at line {lineno}") from None
        if not all(math.isfinite(v) for v in values):
            raise TraceError(f"non-finite value at line {lineno}")
        rows.append(values)
    if len(rows) < 2:
        raise TraceError("a trace needs at least 2 samples")
    data = np.array(rows)
    expected = start + np.arange(len(rows)) * period
    if np.max(np.abs(data[:, 0] - expected)) > 1e-3 + 1e-9 * abs(expected).max():
        raise TraceError("time column is inconsistent with the header period/start")
    return MultiChannelTrace(period, start, {c: data[:, i + 1] for i, c in enumerate(CHANNELS)})


# --- run configuration ----------------------------------------------------------

def _floats(text):
    return tuple(float(p) for p in text.split(","))


def _pair_or_scalar(text):
    v = _floats(text)
    return v[0] if len(v) == 1 else v


def _steps(text):
    out = []
    for part in text.split(","):
        t, v = part.split(":")
        out.append((float(t), float(v)))
    return tuple(out)


def _events(text):
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        bits = part.split(":")
        if len(bits) not in (4, 5):
            raise ConfigError(f"event needs channel:start:duration:amplitude[:shape], got {part!r}")
        out.append(FluctuationEventSpec(bits[0], float(bits[1]), float(bits[2]), float(bits[3]),
                                        *(bits[4:] or [])))
    return tuple(out)


def _optional_float(text):
    return None if text.lower() in ("none", "") else float(text)


def _optional_int(text):
    return None if text.lower() in ("none", "") else int(text)


_SIM_KEYS: dict[str, Callable] = {
    "mode": str, "sample_mass_L": float, "sample_mass_R": float,
    "specific_heat_base": float, "dC_over_C_injected": float,
    "container_heat_capacity": _pair_or_scalar,
    "thermal_resistance_sample_chamber": _pair_or_scalar,
    "thermal_resistance_chamber_env": float, "chamber_heat_capacity": float,
    "initial_temps": _pair_or_scalar, "initial_chamber_temp": _optional_float,
    "sample_period": float, "duration": float, "heat_drive": str,
    "substeps": _optional_int,
}
_THERMOSTAT_KEYS = {"steps": _steps, "tracking_time_constant": float, "control_accuracy": float}
_ENV_KEYS = {f.name: float for f in fields(EnvironmentModel)}
_NOISE_KEYS = {"sensor_white_sigma": float, "quantization_step": float,
               "fill_error_sigma": float, "rng_seed": int}
_PLAN_KEYS = {
    "label": str, "n_control": int, "n_experimental": int, "injected_dC_over_C": float,
    "protocol": str, "mark_offsets": _floats, "seed_base": int, "calibration": str,
    "k": _optional_float, "type2_search_start": float, "handling_time": float,
    "step_time": _optional_float,
}
_STEADY_KEYS = {"window": float, "slope_threshold": float, "hold": int}
_DETECTOR_KEYS = {"threshold_factor": float, "noise_window": _floats,
                  "duration_range": _floats, "smoothing": float, "merge_gap": float}
_SECTIONS = {
    "sim": _SIM_KEYS, "thermostat": _THERMOSTAT_KEYS, "environment": _ENV_KEYS,
    "noise": _NOISE_KEYS, "plan": _PLAN_KEYS, "steady": _STEADY_KEYS,
    "detector": _DETECTOR_KEYS, "events": {"list": _events},
}


@dataclass
class RunConfig:
    calorimeter: CalorimeterConfig = field(default_factory=CalorimeterConfig)
    events: tuple = ()
    plan: ExperimentPlan = field(default_factory=ExperimentPlan)
    criterion: SteadyStateCriterion = field(default_factory=SteadyStateCriterion)
    detector: dict = field(default_factory=dict)


def parse_config(text: str) -> RunConfig:
    """Parse ``section.key = value`` lines; unknown sections or keys are errors."""
    values: dict[str, dict] = {s: {} for s in _SECTIONS}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        lhs, rhs = (s.strip() for s in line.split("=", 1))
        if "." not in lhs:
            raise ConfigError(f"line {lineno}: key {lhs!r} lacks a section")
        section, key = lhs.split(".", 1)
        if section not in _SECTIONS:
            raise ConfigError(f"line {lineno}: unknown section {section!r}")
        if key not in _SECTIONS[section]:
            raise ConfigError(f"line {lineno}: unknown key {lhs!r}")
        try:
            values[section][key] = _SECTIONS[section][key](rhs)
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {lhs}: {exc}") from None
    try:
        config = CalorimeterConfig(
            thermostat=ThermostatProfile(**values["thermostat"]),
            environment=EnvironmentModel(**values["environment"]),
            noise=NoiseModel(**values["noise"]),
            **values["sim"],
        )
        criterion = SteadyStateCriterion(**values["steady"])
        plan = ExperimentPlan(base_config=config, criterion=criterion, **values["plan"])
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(config, values["events"].get("list", ()), plan, criterion, values["detector"])


def read_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
