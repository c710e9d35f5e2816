# Small power sweep through the experiment harness.  The full-size version
# of this is `python -m pinchbeam sweep --var power --values -20 -10 0 10 20 30`.

from pinchbeam import ExperimentPlan, ScenarioConfig, run_plan
from pinchbeam.harness import format_results

plan = ExperimentPlan(
    sweep_var="power",
    values=(-20, 0, 20),
    direction="dl",
    trials=10,
    scenario=ScenarioConfig(N_s=1000),
)
rows = run_plan(plan)
print(format_results(rows, "csv"))

# same thing as a quick table
for r in rows:
    print("%5.0f dBm  %-4s %-5s %7.2f +- %.2f" % (r.sweep_value, r.scheme, r.system, r.mean_sumrate, r.stderr))
