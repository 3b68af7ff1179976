"""Batches of control and experimental attempts, end to end.

A batch simulates ``n_control`` attempts with two untreated samples and
``n_experimental`` attempts whose left sample carries the injected heat
capacity change, extracts readings per protocol, removes the control zero
level from every experimental dt and summarises each (protocol, mark) as
mean and sample standard deviation.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DiffcalError
from .estimator import (DEFAULT_BEGIN_TOLERANCE, DEFAULT_MARK_OFFSETS,
                        AttemptRecord, dC_over_C, extract_type1, extract_type2,
                        mark_label, mass_ratio_k)
from .signals import SteadyStateCriterion
from .simulator import CalorimeterConfig, simulate_attempt

log = logging.getLogger(__name__)

PROTOCOLS = ("type1", "type2")


@dataclass(frozen=True)
class ExperimentPlan:
    base_config: CalorimeterConfig = field(default_factory=CalorimeterConfig)
    label: str = "22->24"
    n_control: int = 20
    n_experimental: int = 20
    injected_dC_over_C: float = 0.0
    protocol: str = "both"
    mark_offsets: tuple = DEFAULT_MARK_OFFSETS
    seed_base: int = 0
    calibration: str = "mean"  # "mean": per-mark control mean; "paired": i-th control
    criterion: SteadyStateCriterion = field(default_factory=SteadyStateCriterion)
    begin_tolerance: float = DEFAULT_BEGIN_TOLERANCE
    k: float | None = None  # None: nominal water-equivalent mass ratio
    type2_search_start: float = 3600.0  # s after the step
    handling_time: float = 1200.0  # s between excitation and the second setpoint
    step_time: float | None = None  # None: last thermostat step

    def __post_init__(self):
        if self.n_control < 1 or self.n_experimental < 1:
            raise ValueError("attempt counts must be >= 1")
        if self.injected_dC_over_C <= -1:
            raise ValueError("injected dC/C must be > -1")
        if self.protocol not in PROTOCOLS + ("both",):
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.calibration not in ("mean", "paired"):
            raise ValueError("calibration must be 'mean' or 'paired'")
        if self.calibration == "paired" and self.n_control != self.n_experimental:
            raise ValueError("paired calibration needs equal control and experimental counts")
        object.__setattr__(self, "mark_offsets", tuple(float(m) for m in self.mark_offsets))

    @property
    def protocols(self) -> tuple:
        return PROTOCOLS if self.protocol == "both" else (self.protocol,)

    @property
    def assumed_k(self) -> float:
        if self.k is not None:
            return self.k
        m_l, m_r = self.base_config.water_equivalent_masses()
        return mass_ratio_k(m_l, m_r)

    @property
    def resolved_step_time(self) -> float:
        if self.step_time is not None:
            return self.step_time
        return self.base_config.thermostat.last_step_time


@dataclass(frozen=True)
class SummaryRow:
    protocol: str
    mark: str
    kind: str
    n: int
    delta_T_mean: float
    delta_T_sd: float
    dt_mean: float
    dt_sd: float
    dC_over_C_mean: float
    dC_over_C_sd: float
    minutes_after_excitation: float | None = None

    @property
    def se(self) -> float:
        return self.dC_over_C_sd / np.sqrt(self.n)


@dataclass
class SummaryTable:
    rows: list

    def get(self, protocol: str, mark: str, kind: str = "experimental") -> SummaryRow:
        for r in self.rows:
            if (r.protocol, r.mark, r.kind) == (protocol, mark, kind):
                return r
        raise KeyError((protocol, mark, kind))

    def experimental(self) -> list:
        return [r for r in self.rows if r.kind == "experimental"]

    def calibrated_se(self, protocol: str, mark: str) -> float:
        """Standard error of the calibrated experimental mean.

        Combines the experimental spread with the uncertainty of the control
        zero level, both expressed in dC/C.
        """
        e = self.get(protocol, mark)
        c = self.get(protocol, mark, "control")
        return float(np.hypot(e.se, c.se))


@dataclass(frozen=True)
class AttemptFailure:
    kind: str
    seed: int
    protocol: str
    error: str


@dataclass
class BatchResult:
    records: list
    summary: SummaryTable
    failures: list = field(default_factory=list)

    def __iter__(self):
        # allows ``records, summary = run_batch(plan)``
        return iter((self.records, self.summary))


def _attempt(args):
    plan, kind, seed = args
    injected = plan.injected_dC_over_C if kind == "experimental" else 0.0
    config = replace(plan.base_config.with_seed(seed), dC_over_C_injected=injected)
    trace = simulate_attempt(config)
    step = plan.resolved_step_time
    k = plan.assumed_k
    out = []
    for proto in plan.protocols:
        try:
            if proto == "type1":
                rec = extract_type1(trace, step, plan.mark_offsets, plan.begin_tolerance, kind=kind, k=k)
            else:
                rec = extract_type2(trace, step, plan.criterion,
                                    search_start=plan.type2_search_start, kind=kind, k=k)
            rec.seed = seed
            out.append(rec)
        except DiffcalError as exc:
            out.append(AttemptFailure(kind, seed, proto, f"{exc.code}: {exc}"))
    return out


def _sd(x):
    return float(np.std(x, ddof=1)) if len(x) > 1 else 0.0


def run_batch(plan: ExperimentPlan, workers: int | None = None) -> BatchResult:
    """Simulate, extract, calibrate and summarise one batch.

    Attempt ``i`` (controls first, then experimental) uses seed
    ``plan.seed_base + i``.  With ``workers`` > 1 attempts run in separate
    processes; the result does not depend on scheduling.
    """
    jobs = [(plan, "control", plan.seed_base + i) for i in range(plan.n_control)]
    jobs += [(plan, "experimental", plan.seed_base + plan.n_control + i)
             for i in range(plan.n_experimental)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_attempt, jobs, chunksize=8))
    else:
        results = [_attempt(j) for j in jobs]

    records, failures = [], []
    for res in results:
        for item in res:
            (failures if isinstance(item, AttemptFailure) else records).append(item)
    for f in failures:
        log.warning("attempt failed: %s seed=%d %s: %s", f.kind, f.seed, f.protocol, f.error)
    if not records:
        raise DiffcalError("every attempt in the batch failed")
    return BatchResult(records, summarize(records, plan), failures)


def _mark_labels(plan, protocol):
    if protocol == "type1":
        return [mark_label(m) for m in plan.mark_offsets]
    return ["steady"]


def calibrated_values(records: Sequence[AttemptRecord], protocol: str, mark: str,
                      calibration: str = "mean"):
    """Per-attempt (kind, dT_control, calibrated dt, dC/C) for one mark.

    Control attempts are calibrated against their own mean so that their
    spread is expressed on the same scale as the experimental one.
    """
    sel = [r for r in records if r.protocol == protocol]
    ctrl = [r for r in sel if r.kind == "control"]
    if not ctrl:
        raise DiffcalError(f"no control attempts for {protocol} {mark}")
    ctrl_dt = np.array([r.mark(mark).dt for r in ctrl])
    zero = ctrl_dt.mean()
    paired = {}
    if calibration == "paired":
        paired = {i: r.mark(mark).dt for i, r in enumerate(ctrl)}
    out = {"control": [], "experimental": []}
    exp_index = 0
    for r in sel:
        m = r.mark(mark)
        if r.kind == "experimental" and calibration == "paired":
            ref = paired.get(exp_index, zero)
            exp_index += 1
        else:
            ref = zero
        dt = m.dt - ref
        out[r.kind].append((m.delta_T_control, dt, float(dC_over_C(dt, m.delta_T_control, r.k))))
    return out


def summarize(records: Sequence[AttemptRecord], plan: ExperimentPlan) -> SummaryTable:
    rows = []
    for proto in plan.protocols:
        for mark in _mark_labels(plan, proto):
            try:
                groups = calibrated_values(records, proto, mark, plan.calibration)
            except DiffcalError:
                continue
            if mark == "steady":
                minutes = None
            else:
                minutes = (float(mark[:-3]) * 60 + plan.handling_time) / 60
            for kind in ("experimental", "control"):
                vals = groups[kind]
                if not vals:
                    continue
                arr = np.array(vals)
                rows.append(SummaryRow(
                    proto, mark, kind, len(vals),
                    float(arr[:, 0].mean()), _sd(arr[:, 0]),
                    float(arr[:, 1].mean()), _sd(arr[:, 1]),
                    float(arr[:, 2].mean()), _sd(arr[:, 2]),
                    minutes,
                ))
    return SummaryTable(rows)


@dataclass(frozen=True)
class RecoveryRow:
    protocol: str
    mark: str
    mean: float
    bias: float
    z: float
    passed: bool


def recovery_report(true_value: float, summary: SummaryTable) -> list:
    """Bias and z-score (bias over StDev/sqrt(N)) of each experimental row."""
    out = []
    for r in summary.experimental():
        bias = r.dC_over_C_mean - true_value
        se = r.dC_over_C_sd / np.sqrt(r.n)
        if se > 0:
            z = bias / se
        else:
            z = 0.0 if bias == 0 else float(np.copysign(np.inf, bias))
        out.append(RecoveryRow(r.protocol, r.mark, r.dC_over_C_mean, bias, float(z), abs(z) < 3))
    return out
