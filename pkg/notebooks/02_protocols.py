"""
Type-1 and type-2 readouts
==========================

Type 1 reads the channel difference 30, 45 and 60 min after the step and
needs equal starting temperatures.  Type 2 waits until the difference is
flat, so it tolerates a starting offset.  Both are calibrated against a
control attempt with two untreated samples.
"""

# %%
from dataclasses import replace

from diffcal import (CalorimeterConfig, SteadyStateCriterion, calibrate_dt,
                     error_budget, estimate_dC_over_C, extract_type1,
                     extract_type2, simulate_attempt)
from diffcal.errors import ProtocolError

base = CalorimeterConfig()
control = simulate_attempt(base.with_seed(10))
treated = simulate_attempt(replace(base, dC_over_C_injected=0.0208).with_seed(11))

# %%
c1 = extract_type1(control, 1800.0, kind="control")
e1 = extract_type1(treated, 1800.0)
for m in e1.marks:
    dt = calibrate_dt(m.dt, [c1.mark(m.label).dt])
    est = estimate_dC_over_C(dt, m.delta_T_control)
    print(f"type1 {m.label:>6}: dt_raw={m.dt:+.5f} dt_cal={dt:+.5f} "
          f"dT={m.delta_T_control:.4f} dC/C={est.value:+.4f}")

# %%
# Zone 4 is searched from one hour after the step.
crit = SteadyStateCriterion()
c2 = extract_type2(control, 1800.0, crit, search_start=3600.0, kind="control")
e2 = extract_type2(treated, 1800.0, crit, search_start=3600.0)
m = e2.marks[0]
dt = calibrate_dt(m.dt, [c2.marks[0].dt])
print(f"type2: zone 4 at {e2.steady_time:.0f} s, dt_cal={dt:+.5f}, "
      f"dC/C={estimate_dC_over_C(dt, m.delta_T_control).value:+.4f} (injected 0.0208)")

# %%
# A 0.3 °C offset at the start rules out type 1.
offset = simulate_attempt(replace(base, initial_temps=(22.3, 22.0), dC_over_C_injected=0.0208))
try:
    extract_type1(offset, 1800.0)
except ProtocolError as exc:
    print("type1 refused:", exc)
print("type2 still works, dt =", f"{extract_type2(offset, 1800.0, crit, search_start=3600.0).marks[0].dt:+.5f}")

# %%
# Error budget: 0.001 °C zone-4 variation on a 2 °C step, plus a k term.
b = error_budget(0.001, 2.0, 0.0005, sigma_sensor=1e-5)
print(f"dt component {b.dt_component:.6f}, k component {b.k_component:.6f}, "
      f"rss {b.total_dC_over_C_sigma:.6f}, worst case {b.worst_case:.6f}")
