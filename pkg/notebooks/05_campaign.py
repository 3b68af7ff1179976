"""
A reference-style campaign
==========================

Run control and experimental batches for both protocols and summarise them
as mean ± StDev, then check the recovered dC/C against the injected value.
Pass the number of attempts per arm as the first argument (default 20).
"""

# %%
import sys
import time

from diffcal import ExperimentPlan, recovery_report, run_batch

n = int(sys.argv[1]) if len(sys.argv) > 1 else 20
plan = ExperimentPlan(n_control=n, n_experimental=n, injected_dC_over_C=0.0208, seed_base=500)
t0 = time.perf_counter()
result = run_batch(plan)
print(f"{2 * n} attempts in {time.perf_counter() - t0:.1f} s, {len(result.failures)} failures")

# %%
print(f"{'protocol':8} {'mark':>6} {'kind':>12} {'N':>3} {'dT':>16} {'dt':>18} {'dC/C':>18}")
for r in result.summary.rows:
    print(f"{r.protocol:8} {r.mark:>6} {r.kind:>12} {r.n:3d} "
          f"{r.delta_T_mean:7.4f}±{r.delta_T_sd:.4f} {r.dt_mean:+8.4f}±{r.dt_sd:.4f} "
          f"{r.dC_over_C_mean:+8.4f}±{r.dC_over_C_sd:.4f}")

# %%
for row in recovery_report(plan.injected_dC_over_C, result.summary):
    print(f"{row.protocol}/{row.mark}: bias {row.bias:+.4f}, z {row.z:+.2f}, "
          f"{'pass' if row.passed else 'FAIL'}")
