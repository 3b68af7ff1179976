"""Lumped-parameter simulator of a two-channel differential calorimeter.

Two cups (left = experimental, right = control) sit in a shared chamber.
In *active* mode the chamber is a thermostatted block that follows a
piecewise-constant setpoint schedule; in *passive* mode it is a dewar whose
air exchanges heat with the laboratory.

Per fluid channel (fluid and its container lumped into one node)::

    (m_i c_i + C_container) dT_i/dt = q_i(t) + P_event_i(t)

where the heat flow ``q_i`` depends on ``heat_drive``:

``"coupled"``
    ``q_i = (T_chamber - T_i) / R_i``.  Each cup draws heat according to
    its own temperature, so both cups end at the chamber temperature.
``"equal"`` (default, active mode only)
    Both cups receive the heat flow a nominal reference cup would draw,
    ``q = (T_chamber - T_ref) / R``.  This is the equal-heat condition the
    ratio estimator relies on: the temperature rise of each channel is
    inversely proportional to its heat capacity, also after the transient.

Passive mode is always coupled::

    C_chamber dT_chamber/dt = (T_env - T_chamber)/R_env + sum_i (T_i - T_chamber)/R_i

The model is linear, so each fixed RK4 step is applied as the exact
equivalent affine map ``x -> Phi x + G0 u(t) + Gh u(t+h/2) + G1 u(t+h)``.
Setpoint and control noise are held constant over a step; environment and
event power are evaluated at the RK4 stage times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, TraceError

CHANNELS = ("fluid_L", "fluid_R", "air_1", "air_2", "env")
FLUID_CHANNELS = ("fluid_L", "fluid_R")
EVENT_SHAPES = ("gaussian_bump", "raised_cosine")

WATER_SPECIFIC_HEAT = 4186.0  # J/(kg·°C)

# gaussian_bump: the event duration spans +-2.5 standard deviations
_GAUSS_SIGMAS_PER_DURATION = 5.0


def _finite(name, value):
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite, got {value!r}")


def _positive(name, value):
    _finite(name, value)
    if value <= 0:
        raise ConfigError(f"{name} must be > 0, got {value!r}")


def _pair(name, value):
    if np.ndim(value) == 0:
        value = (value, value)
    value = tuple(float(v) for v in value)
    if len(value) != 2:
        raise ConfigError(f"{name} needs one value per fluid channel")
    return value


@dataclass(frozen=True)
class ThermostatProfile:
    """Setpoint schedule of the active thermostat.

    ``steps`` is an ordered sequence of ``(time_s, setpoint_C)``.
    """

    steps: tuple = ((0.0, 22.0), (1800.0, 24.0))
    tracking_time_constant: float = 300.0
    control_accuracy: float = 0.002

    def __post_init__(self):
        steps = tuple((float(t), float(v)) for t, v in self.steps)
        if not steps:
            raise ConfigError("thermostat needs at least one step")
        for t, v in steps:
            _finite("step time", t)
            _finite("setpoint", v)
        times = [t for t, _ in steps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("thermostat step times must be strictly increasing")
        _positive("tracking_time_constant", self.tracking_time_constant)
        _finite("control_accuracy", self.control_accuracy)
        if self.control_accuracy < 0:
            raise ConfigError("control_accuracy must be >= 0")
        object.__setattr__(self, "steps", steps)

    @property
    def last_step_time(self) -> float:
        return self.steps[-1][0]


def thermostat_setpoint(profile: ThermostatProfile, t):
    """Setpoint in force at time ``t`` (scalar or array).

    A step applies from its own time onwards; before the first step the
    first setpoint is returned.
    """
    times = np.array([s[0] for s in profile.steps])
    values = np.array([s[1] for s in profile.steps])
    idx = np.searchsorted(times, t, side="right") - 1
    idx = np.clip(idx, 0, len(values) - 1)
    out = values[idx]
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class EnvironmentModel:
    """Laboratory air temperature: mean + circadian sinusoid + linear drift."""

    mean_temp: float = 21.0
    circadian_amplitude: float = 0.15
    circadian_period: float = 86400.0
    slow_drift_rate: float = 0.0  # °C/day
    phase: float = 0.0  # rad

    def __post_init__(self):
        for f in fields(self):
            _finite(f.name, getattr(self, f.name))
        _positive("circadian_period", self.circadian_period)
        if self.circadian_amplitude < 0:
            raise ConfigError("circadian_amplitude must be >= 0")

    def temperature(self, t):
        t = np.asarray(t, dtype=float)
        return (
            self.mean_temp
            + self.circadian_amplitude * np.sin(2 * np.pi * t / self.circadian_period + self.phase)
            + self.slow_drift_rate * t / 86400.0
        )


@dataclass(frozen=True)
class NoiseModel:
    sensor_white_sigma: float = 2e-4
    quantization_step: float = 1e-5
    fill_error_sigma: float = 5e-5  # kg, 0.05 ml of water
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("sensor_white_sigma", "fill_error_sigma"):
            value = getattr(self, name)
            _finite(name, value)
            if value < 0:
                raise ConfigError(f"{name} must be >= 0")
        _positive("quantization_step", self.quantization_step)

    @classmethod
    def noiseless(cls, rng_seed=0, quantization_step=1e-5):
        return cls(0.0, quantization_step, 0.0, rng_seed)


@dataclass(frozen=True)
class FluctuationEventSpec:
    """A heat pulse sized to produce a given temperature excursion."""

    channel: str
    start: float
    duration: float
    amplitude: float
    shape: str = "gaussian_bump"

    def __post_init__(self):
        if self.channel not in FLUID_CHANNELS:
            raise ConfigError(f"event channel must be one of {FLUID_CHANNELS}")
        if self.shape not in EVENT_SHAPES:
            raise ConfigError(f"event shape must be one of {EVENT_SHAPES}")
        _finite("start", self.start)
        _positive("duration", self.duration)
        _finite("amplitude", self.amplitude)

    def profile(self, t):
        """Unit-peak excursion shape and its time derivative at ``t``."""
        t = np.asarray(t, dtype=float)
        if self.shape == "gaussian_bump":
            center = self.start + 0.5 * self.duration
            sigma = self.duration / _GAUSS_SIGMAS_PER_DURATION
            a = np.exp(-0.5 * ((t - center) / sigma) ** 2)
            return a, -(t - center) / sigma**2 * a
        u = (t - self.start) / self.duration
        inside = (u >= 0) & (u <= 1)
        a = np.where(inside, 0.5 * (1 - np.cos(2 * np.pi * u)), 0.0)
        da = np.where(inside, np.pi / self.duration * np.sin(2 * np.pi * u), 0.0)
        return a, da


@dataclass(frozen=True)
class CalorimeterConfig:
    mode: str = "active"
    sample_mass_L: float = 0.015
    sample_mass_R: float = 0.015
    specific_heat_base: float = WATER_SPECIFIC_HEAT
    dC_over_C_injected: float = 0.0
    container_heat_capacity: tuple = (0.5, 0.5)  # J/°C
    thermal_resistance_sample_chamber: tuple = (16.0, 16.0)  # °C/W
    thermal_resistance_chamber_env: float = 20.0  # °C/W, passive mode
    chamber_heat_capacity: float = 1000.0  # J/°C, passive mode
    thermostat: ThermostatProfile = field(default_factory=ThermostatProfile)
    environment: EnvironmentModel = field(default_factory=EnvironmentModel)
    noise: NoiseModel = field(default_factory=NoiseModel)
    initial_temps: tuple = (22.0, 22.0)
    initial_chamber_temp: float | None = None
    sample_period: float = 1.0
    duration: float = 10800.0
    heat_drive: str = "equal"
    substeps: int | None = None

    def __post_init__(self):
        if self.mode not in ("active", "passive"):
            raise ConfigError(f"mode must be 'active' or 'passive', got {self.mode!r}")
        if self.heat_drive not in ("equal", "coupled"):
            raise ConfigError(f"heat_drive must be 'equal' or 'coupled', got {self.heat_drive!r}")
        for name in ("container_heat_capacity", "thermal_resistance_sample_chamber", "initial_temps"):
            object.__setattr__(self, name, _pair(name, getattr(self, name)))
        for name in ("sample_mass_L", "sample_mass_R", "specific_heat_base",
                     "thermal_resistance_chamber_env", "chamber_heat_capacity",
                     "sample_period", "duration"):
            _positive(name, getattr(self, name))
        for v in self.container_heat_capacity + self.thermal_resistance_sample_chamber:
            _positive("per-channel heat capacity / resistance", v)
        for v in self.initial_temps:
            _finite("initial_temps", v)
        if self.initial_chamber_temp is not None:
            _finite("initial_chamber_temp", self.initial_chamber_temp)
        _finite("dC_over_C_injected", self.dC_over_C_injected)
        if self.dC_over_C_injected <= -1:
            raise ConfigError("dC_over_C_injected must be > -1")
        if self.duration < self.sample_period:
            raise ConfigError("duration must be >= sample_period")
        if self.substeps is not None and int(self.substeps) < 1:
            raise ConfigError("substeps must be >= 1")

    @property
    def n_samples(self) -> int:
        return int(math.floor(self.duration / self.sample_period + 1e-9)) + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.sample_period

    def water_equivalent_masses(self) -> tuple[float, float]:
        """Nominal fill plus container heat capacity expressed as kg of water."""
        c = self.specific_heat_base
        return (self.sample_mass_L + self.container_heat_capacity[0] / c,
                self.sample_mass_R + self.container_heat_capacity[1] / c)

    def with_seed(self, seed: int) -> "CalorimeterConfig":
        return replace(self, noise=replace(self.noise, rng_seed=int(seed)))


@dataclass
class MultiChannelTrace:
    """Uniformly sampled temperatures, one array per channel (°C)."""

    sample_period: float
    start_time: float
    channels: Mapping[str, np.ndarray]

    def __post_init__(self):
        self.channels = {name: np.asarray(v, dtype=float) for name, v in self.channels.items()}
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) != 1:
            raise TraceError("all channel series must have equal length")
        if lengths.pop() < 2:
            raise TraceError("a trace needs at least 2 samples")
        if not self.sample_period > 0:
            raise TraceError("sample_period must be > 0")

    def __len__(self):
        return len(next(iter(self.channels.values())))

    def __getitem__(self, name):
        if name == "diff":
            return self.diff
        return self.channels[name]

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(len(self)) * self.sample_period

    @property
    def end_time(self) -> float:
        return self.start_time + (len(self) - 1) * self.sample_period

    @property
    def diff(self) -> np.ndarray:
        """Channel-differential temperature ``fluid_L - fluid_R``."""
        return self.channels["fluid_L"] - self.channels["fluid_R"]

    def index_of(self, t: float) -> int:
        return int(round((t - self.start_time) / self.sample_period))


# --- event power -----------------------------------------------------------

def _channel_heat_capacities(config, masses):
    c = config.specific_heat_base
    cc = config.container_heat_capacity
    return (masses[0] * c * (1 + config.dC_over_C_injected) + cc[0],
            masses[1] * c + cc[1])


def _restoring_resistance(config, index):
    if config.mode == "active" and config.heat_drive == "equal":
        return math.inf
    return config.thermal_resistance_sample_chamber[index]


def _event_power_fn(spec, config, heat_capacity):
    idx = FLUID_CHANNELS.index(spec.channel)
    conductance = 1.0 / _restoring_resistance(config, idx)

    def power(t):
        a, da = spec.profile(t)
        return spec.amplitude * (heat_capacity * da + conductance * a)

    return power


def _check_event(spec, config):
    if spec.duration < 4 * config.sample_period:
        raise ConfigError("event duration must cover at least 4 sample periods")
    if spec.start < 0 or spec.start + spec.duration > config.duration:
        raise ConfigError("event must lie within the simulated duration")


def render_event_power(spec: FluctuationEventSpec, config: CalorimeterConfig) -> np.ndarray:
    """Heat flow (W) into ``spec.channel`` sampled on the trace time grid.

    The waveform inverts the single-node channel model, so the noiseless
    temperature excursion follows ``spec.profile`` with peak ``spec.amplitude``.
    """
    _check_event(spec, config)
    masses = (config.sample_mass_L, config.sample_mass_R)
    cap = _channel_heat_capacities(config, masses)[FLUID_CHANNELS.index(spec.channel)]
    return _event_power_fn(spec, config, cap)(config.times)


# --- integration -----------------------------------------------------------

def _rk4_affine(A, B, h):
    """Matrices of one RK4 step for ``x' = A x + B u(t)``.

    Returns ``Phi, G0, Gh, G1`` such that the RK4 update equals
    ``Phi x + G0 u(t) + Gh u(t + h/2) + G1 u(t + h)``.
    """

    def step(x, u0, uh, u1):
        k1 = A @ x + B @ u0
        k2 = A @ (x + 0.5 * h * k1) + B @ uh
        k3 = A @ (x + 0.5 * h * k2) + B @ uh
        k4 = A @ (x + h * k3) + B @ u1
        return x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    n, m = B.shape
    eye_n, eye_m = np.eye(n), np.eye(m)
    zn, zm = np.zeros((n, m)), np.zeros((m, m))
    phi = step(eye_n, np.zeros((m, n)), np.zeros((m, n)), np.zeros((m, n)))
    g0 = step(zn, eye_m, zm, zm)
    gh = step(zn, zm, eye_m, zm)
    g1 = step(zn, zm, zm, eye_m)
    return phi, g0, gh, g1


def _system_matrices(config, caps):
    """State ``[T_L, T_R, T_chamber, T_ref]``; input ``[setpoint, T_env, P_L, P_R]``."""
    A = np.zeros((4, 4))
    B = np.zeros((4, 4))
    R = config.thermal_resistance_sample_chamber
    B[0, 2] = 1.0 / caps[0]
    B[1, 3] = 1.0 / caps[1]
    if config.mode == "active":
        tau = config.thermostat.tracking_time_constant
        A[2, 2] = -1.0 / tau
        B[2, 0] = 1.0 / tau
        if config.heat_drive == "equal":
            c = config.specific_heat_base
            c_ref = config.sample_mass_R * c + config.container_heat_capacity[1]
            g = 1.0 / R[1]
            for i in (0, 1):
                A[i, 2] = g / caps[i]
                A[i, 3] = -g / caps[i]
            A[3, 2] = g / c_ref
            A[3, 3] = -g / c_ref
            return A, B
    for i in (0, 1):
        A[i, i] = -1.0 / (R[i] * caps[i])
        A[i, 2] = 1.0 / (R[i] * caps[i])
    if config.mode == "passive":
        c_ch = config.chamber_heat_capacity
        g_env = 1.0 / config.thermal_resistance_chamber_env
        A[2, 2] = -(g_env + 1.0 / R[0] + 1.0 / R[1]) / c_ch
        A[2, 0] = 1.0 / (R[0] * c_ch)
        A[2, 1] = 1.0 / (R[1] * c_ch)
        B[2, 1] = g_env / c_ch
    return A, B


def _min_time_constant(A):
    rates = np.abs(np.linalg.eigvals(A).real)
    rates = rates[rates > 1e-15]
    return math.inf if rates.size == 0 else 1.0 / rates.max()


def _control_noise(config, rng, n):
    """Bounded AR(1) deviation of the thermostat, one value per sample."""
    acc = config.thermostat.control_accuracy
    z = rng.standard_normal(n)
    if acc == 0 or config.mode != "active":
        return np.zeros(n)
    rho = math.exp(-config.sample_period / config.thermostat.tracking_time_constant)
    e = np.empty(n)
    e[0] = z[0]
    scale = math.sqrt(1 - rho * rho)
    for i in range(1, n):
        e[i] = rho * e[i - 1] + scale * z[i]
    return np.clip(e * acc / 3.0, -acc, acc)


_STATE_ORDER = ((0, 1, 2, 3), (1, 0, 2, 3), (2, 0, 1, 3), (3, 0, 1, 2))
_INPUT_ORDER = ((0, 1, 2, 3), (0, 1, 3, 2), (0, 1, 2, 3), (0, 1, 2, 3))


def _ordered_drive(inputs, gains):
    """``sum_k u_k @ G_k.T`` with a fixed, mirror-symmetric summation order."""
    out = np.zeros((len(inputs[0]), 4))
    for i, order in enumerate(_INPUT_ORDER):
        acc = out[:, i]
        for u, g in zip(inputs, gains):
            for j in order:
                acc += u[:, j] * g[i, j]
    return out


@dataclass
class _Truth:
    times: np.ndarray
    states: np.ndarray  # (n_samples, 4)
    env: np.ndarray
    heat_capacities: tuple
    masses: tuple


def _integrate(config: CalorimeterConfig, events: Sequence[FluctuationEventSpec], streams):
    fill_rng, control_rng, _ = streams
    sigma_fill = config.noise.fill_error_sigma
    dm = fill_rng.standard_normal(2) * sigma_fill
    masses = (config.sample_mass_L + dm[0], config.sample_mass_R + dm[1])
    if min(masses) <= 0:
        raise ConfigError("fill error produced a non-positive mass")
    caps = _channel_heat_capacities(config, masses)
    A, B = _system_matrices(config, caps)

    tau_min = _min_time_constant(A)
    period = config.sample_period
    if config.substeps is None:
        substeps = max(1, math.ceil(period / (tau_min / 4.0)))
    else:
        substeps = int(config.substeps)
        if period / substeps > tau_min / 4.0:
            raise ConfigError(
                f"integration step {period / substeps:g} s exceeds a quarter of the "
                f"fastest time constant ({tau_min:g} s)")
    h = period / substeps

    for spec in events:
        _check_event(spec, config)
    powers = {ch: [] for ch in FLUID_CHANNELS}
    for spec in events:
        idx = FLUID_CHANNELS.index(spec.channel)
        powers[spec.channel].append(_event_power_fn(spec, config, caps[idx]))

    n = config.n_samples
    n_steps = (n - 1) * substeps
    t_half = np.arange(2 * n_steps + 1) * (0.5 * h)
    u = np.zeros((len(t_half), 4))
    u[:, 1] = config.environment.temperature(t_half)
    for col, ch in ((2, "fluid_L"), (3, "fluid_R")):
        for fn in powers[ch]:
            u[:, col] += fn(t_half)

    # setpoint and control noise held over each step
    step_t = np.arange(n_steps) * h
    noise = _control_noise(config, control_rng, n)
    held = thermostat_setpoint(config.thermostat, step_t) + noise[np.arange(n_steps) // substeps]

    phi, g0, gh, g1 = _rk4_affine(A, B, h)
    u0, uh, u1 = u[0:-1:2], u[1::2], u[2::2]
    u0 = u0.copy(); uh = uh.copy(); u1 = u1.copy()
    for arr in (u0, uh, u1):
        arr[:, 0] = held
    drive = _ordered_drive((u0, uh, u1), (g0, gh, g1))

    t_l, t_r = config.initial_temps
    if config.initial_chamber_temp is not None:
        t_ch = config.initial_chamber_temp
    elif config.mode == "active":
        t_ch = thermostat_setpoint(config.thermostat, 0.0)
    else:
        t_ch = float(config.environment.temperature(0.0))
    x = [float(t_l), float(t_r), float(t_ch), float(t_r)]
    states = np.empty((n, 4))
    states[0] = x
    # explicit sums in a mirror-symmetric term order keep L and R bit-identical
    # for symmetric configurations, which BLAS summation order does not
    (a0, a1, a2, a3), (b0, b1, b2, b3), (c0, c1, c2, c3), (d0, d1, d2, d3) = (
        [float(phi[i, j]) for j in order] for i, order in enumerate(_STATE_ORDER))
    rows = iter(drive.tolist())
    for i in range(1, n):
        for _ in range(substeps):
            e = next(rows)
            x = [((a0 * x[0] + a1 * x[1]) + a2 * x[2]) + a3 * x[3] + e[0],
                 ((b0 * x[1] + b1 * x[0]) + b2 * x[2]) + b3 * x[3] + e[1],
                 ((c0 * x[2] + c1 * x[0]) + c2 * x[1]) + c3 * x[3] + e[2],
                 ((d0 * x[3] + d1 * x[0]) + d2 * x[1]) + d3 * x[2] + e[3]]
        states[i] = x
    times = config.times
    return _Truth(times, states, config.environment.temperature(times), caps, masses)


def _streams(config):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(config.noise.rng_seed).spawn(3)]


def simulate_truth(config: CalorimeterConfig, events: Sequence[FluctuationEventSpec] = ()) -> MultiChannelTrace:
    """Noise-free physical temperatures (no sensor noise, no quantization).

    Fill error and thermostat control noise are physical and still applied.
    """
    truth = _integrate(config, events, _streams(config))
    s = truth.states
    return MultiChannelTrace(config.sample_period, 0.0, {
        "fluid_L": s[:, 0], "fluid_R": s[:, 1],
        "air_1": s[:, 2], "air_2": s[:, 2].copy(), "env": truth.env,
    })


def quantize(values, step):
    return np.round(np.asarray(values) / step) * step


def simulate_attempt(config: CalorimeterConfig, events: Sequence[FluctuationEventSpec] = ()) -> MultiChannelTrace:
    """Simulate one measurement attempt as seen by the five sensors.

    Deterministic in ``config`` (including ``config.noise.rng_seed``) and
    ``events``.
    """
    streams = _streams(config)
    truth = _integrate(config, events, streams)
    sensor_rng = streams[2]
    sigma = config.noise.sensor_white_sigma
    q = config.noise.quantization_step
    s = truth.states
    raw = {
        "fluid_L": s[:, 0], "fluid_R": s[:, 1],
        "air_1": s[:, 2], "air_2": s[:, 2], "env": truth.env,
    }
    channels = {}
    for name in CHANNELS:
        noisy = raw[name] + sigma * sensor_rng.standard_normal(len(truth.times))
        channels[name] = quantize(noisy, q)
    return MultiChannelTrace(config.sample_period, 0.0, channels)


def total_energy(config: CalorimeterConfig, trace: MultiChannelTrace, masses=None) -> np.ndarray:
    """Internal energy (J, relative to 0 °C) of cups and chamber in passive mode."""
    masses = masses or (config.sample_mass_L, config.sample_mass_R)
    caps = _channel_heat_capacities(config, masses)
    return (caps[0] * trace["fluid_L"] + caps[1] * trace["fluid_R"]
            + config.chamber_heat_capacity * trace["air_1"])
