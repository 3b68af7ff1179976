"""Command line front end.

Exit status: 0 success, 1 data or protocol error, 2 usage error.  Errors are
printed to stderr as a single line ``diffcal: <CODE>: <message>``.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import replace

import numpy as np

from .errors import ConfigError, DiffcalError
from .estimator import calibrate_dt, dC_over_C, extract_type1, extract_type2
from .harness import recovery_report, run_batch
from .signals import (SteadyStateCriterion, detect_fluctuations, detrend, fit_trend,
                      lead_lag)
from .simulator import CHANNELS, simulate_attempt
from .svgplot import write_svg
from .traceio import read_config, read_trace, write_trace

PROG = "diffcal"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    return str(v)


def _emit(header, rows, out_csv=None, stream=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    text = buf.getvalue()
    (stream or sys.stdout).write(text)
    if out_csv:
        with open(out_csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _float_list(text):
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _default_seed():
    env = os.environ.get("DIFFCAL_SEED")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"DIFFCAL_SEED must be an integer, got {env!r}") from None


# --- subcommands -------------------------------------------------------------

def cmd_simulate(args):
    run = read_config(args.config)
    seed = args.seed if args.seed is not None else _default_seed()
    config = run.calorimeter if seed is None else run.calorimeter.with_seed(seed)
    trace = simulate_attempt(config, run.events)
    write_trace(trace, args.out)
    _emit(["samples", "sample_period", "seed", "step_time"],
          [[len(trace), trace.sample_period, config.noise.rng_seed, config.thermostat.last_step_time]])


def _extract(trace, args, kind):
    if args.protocol == "type1":
        return extract_type1(trace, args.step_time, [m * 60 for m in args.marks],
                             args.begin_tolerance, kind=kind, k=args.k)
    return extract_type2(trace, args.step_time, SteadyStateCriterion(), kind=kind, k=args.k,
                         search_start=args.search_start)


def cmd_analyze(args):
    trace = read_trace(args.trace)
    rec = _extract(trace, args, "experimental")
    controls = [_extract(read_trace(p), args, "control") for p in args.controls or ()]
    rows = []
    for m in rec.marks:
        if controls:
            dt = calibrate_dt(m.dt, [c.mark(m.label).dt for c in controls])
        else:
            dt = m.dt
        value = float(dC_over_C(dt, m.delta_T_control, rec.k))
        rows.append([args.protocol, m.label, rec.T_begin_L, rec.T_begin_R, m.T_end_L, m.T_end_R,
                     m.dt, dt, m.delta_T_control, rec.k, value, len(controls)])
    _emit(["protocol", "mark", "T_begin_L", "T_begin_R", "T_end_L", "T_end_R", "dt_raw",
           "dt_calibrated", "delta_T_control", "k", "dC_over_C", "n_controls"], rows, args.out_csv)


def _parse_detrend(text):
    if text in ("linear", "exp"):
        return ("linear", None) if text == "linear" else ("exp_approach", None)
    if text.startswith("poly:"):
        try:
            return "polynomial", int(text[5:])
        except ValueError:
            pass
    raise argparse.ArgumentTypeError(f"--detrend must be linear, poly:D or exp, got {text!r}")


def cmd_detect(args):
    trace = read_trace(args.trace)
    if args.channel != "diff" and args.channel not in CHANNELS:
        raise UsageError(f"unknown channel {args.channel!r}")
    i0 = trace.index_of(max(args.start, trace.start_time))
    t = trace.times[i0:]
    y = trace[args.channel][i0:]
    kind, degree = args.detrend
    model = fit_trend(t, y, kind, degree)
    resid = detrend(t, y, model)
    noise = args.noise_window or [t[0], t[0] + 7200.0]
    events = detect_fluctuations(resid, trace.sample_period, tuple(noise[:2]), args.threshold,
                                 (args.min_duration, args.max_duration),
                                 channel=args.channel, start_time=float(t[0]))
    _emit(["channel", "start_s", "duration_s", "peak_amplitude_C", "polarity", "trend", "trend_rms_C"],
          [[e.channel, e.start, e.duration, e.peak_amplitude, e.polarity, model.kind, model.rms_residual]
           for e in events], args.out_csv)


def cmd_batch(args):
    run = read_config(args.config)
    plan = run.plan
    seed = _default_seed()
    if seed is not None:
        plan = replace(plan, seed_base=seed)
    result = run_batch(plan, workers=args.workers)
    report = {(r.protocol, r.mark): r for r in recovery_report(plan.injected_dC_over_C, result.summary)}
    rows = []
    for r in result.summary.rows:
        rec = report.get((r.protocol, r.mark)) if r.kind == "experimental" else None
        rows.append([r.protocol, r.mark, r.kind, r.n, r.delta_T_mean, r.delta_T_sd, r.dt_mean, r.dt_sd,
                     r.dC_over_C_mean, r.dC_over_C_sd, r.minutes_after_excitation,
                     rec.bias if rec else None, rec.z if rec else None,
                     (int(rec.passed) if rec else None)])
    _emit(["protocol", "mark", "kind", "N", "delta_T_mean", "delta_T_sd", "dt_mean", "dt_sd",
           "dC_over_C_mean", "dC_over_C_sd", "minutes_after_excitation", "bias", "z", "pass"],
          rows, args.out_summary)
    for f in result.failures:
        print(f"{PROG}: W_ATTEMPT: {f.kind} seed={f.seed} {f.protocol}: {f.error}", file=sys.stderr)


def cmd_leadlag(args):
    trace = read_trace(args.trace)
    est = lead_lag(trace["env"], trace.diff, args.max_lag, trace.sample_period,
                   start_time=trace.start_time)
    _emit(["peak_time_s", "extremum", "lag_s", "correlation", "reliable"],
          [[e.peak_time, e.extremum, e.lag, e.correlation, int(e.reliable)] for e in est], args.out_csv)


def cmd_plot(args):
    trace = read_trace(args.trace)
    channels = [c.strip() for c in args.channels.split(",") if c.strip()]
    for c in channels:
        if c != "diff" and c not in CHANNELS:
            raise UsageError(f"unknown channel {c!r}")
    write_svg(trace, args.out, channels, title=os.path.basename(args.trace))
    _emit(["svg", "channels", "samples"], [[args.out, "|".join(channels), len(trace)]])


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog=PROG, description="Differential calorimeter simulation and analysis.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="simulate one attempt and write its trace")
    s.add_argument("--config", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="estimate dC/C from a trace")
    a.add_argument("--trace", required=True)
    a.add_argument("--protocol", choices=("type1", "type2"), required=True)
    a.add_argument("--marks", type=_float_list, default=[30.0, 45.0, 60.0], help="minutes after the step")
    a.add_argument("--k", type=float, default=1.0)
    a.add_argument("--controls", nargs="+", metavar="F")
    a.add_argument("--step-time", type=float, default=1800.0)
    a.add_argument("--begin-tolerance", type=float, default=0.1)
    a.add_argument("--search-start", type=float, default=0.0, help="type2: s after the step")
    a.add_argument("--out-csv")
    a.set_defaults(func=cmd_analyze)

    d = sub.add_parser("detect", help="detect mesoscale fluctuations")
    d.add_argument("--trace", required=True)
    d.add_argument("--detrend", type=_parse_detrend, default=("linear", None))
    d.add_argument("--channel", default="diff")
    d.add_argument("--start", type=float, default=0.0)
    d.add_argument("--noise-window", type=_float_list)
    d.add_argument("--threshold", type=float, default=4.0)
    d.add_argument("--min-duration", type=float, default=600.0)
    d.add_argument("--max-duration", type=float, default=3600.0)
    d.add_argument("--out-csv")
    d.set_defaults(func=cmd_detect)

    b = sub.add_parser("batch", help="run a control/experimental batch")
    b.add_argument("--config", required=True)
    b.add_argument("--out-summary", required=True)
    b.add_argument("--workers", type=int)
    b.set_defaults(func=cmd_batch)

    l = sub.add_parser("leadlag", help="lag of the differential behind environment extrema")
    l.add_argument("--trace", required=True)
    l.add_argument("--max-lag", type=float, required=True)
    l.add_argument("--out-csv")
    l.set_defaults(func=cmd_leadlag)

    g = sub.add_parser("plot", help="write an SVG chart of trace channels")
    g.add_argument("--trace", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--channels", default="fluid_L,fluid_R")
    g.set_defaults(func=cmd_plot)
    return p


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        print(f"{PROG}: E_USAGE: {exc}", file=sys.stderr)
        return 2
    except DiffcalError as exc:
        print(f"{PROG}: {exc.code}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ZeroDivisionError, OSError) as exc:
        print(f"{PROG}: E_DATA: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
