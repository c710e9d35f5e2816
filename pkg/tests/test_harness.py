import csv
import io
import json

import numpy as np
import pytest

from pinchbeam import harness
from pinchbeam.config import ScenarioConfig
from pinchbeam.errors import InvalidConfigError, PinchError, PlanFailedError
from pinchbeam.harness import CSV_COLUMNS, ExperimentPlan, emit_results, format_results, load_config, run_plan

FAST = ScenarioConfig(N_s=300)


def test_empty_file_gives_default_plan(tmp_path):
    path = tmp_path / "plan.yaml"
    path.write_text("")
    plan = load_config(path)
    cfg = plan.scenario
    assert plan.trials == 400 and plan.sweep_var == "power"
    assert (cfg.D_x, cfg.D_y, cfg.M, cfg.N, cfg.K, cfg.a) == (50, 6, 5, 6, 4, 5)
    assert cfg.f == 28e9 and cfg.n_eff == 1.4 and cfg.kappa == 0.1 and cfg.N_s == 10_000
    resolved = plan.resolved()["scenario"]
    assert resolved["sigma2_dbm"] == pytest.approx(-90) and resolved["P_d_dbm"] == pytest.approx(0)
    assert resolved["P_u_dbm"] == pytest.approx(0)
    assert resolved["Delta"] == pytest.approx(299_792_458 / 28e9 / 2)


def test_yaml_fields(tmp_path):
    path = tmp_path / "plan.yaml"
    path.write_text("sweep_var: num_users\nvalues: [2, 4]\ndirection: ul\nschemes: [zf]\n"
                    "trials: 3\nN_s: 1e3\nP_u_dbm: 10\nscenario:\n  kappa: 0.2\n")
    plan = load_config(path)
    assert plan.values == (2, 4) and plan.schemes == ("zf",) and plan.scenario.N_s == 1000
    assert plan.scenario.P_u == pytest.approx(1e-2) and plan.scenario.kappa == 0.2


@pytest.mark.parametrize("text,field", [
    ("M: 0\n", "M"),
    ("N: 7\nDelta: 10\n", "Delta"),
    ("bogus: 1\n", "bogus"),
    ("values: []\n", "values"),
    ("sweep_var: num_pas\nvalues: [2, 0]\n", "values"),
    ("direction: up\n", "direction"),
    ("schemes: [mrc]\n", "schemes"),
    ("trials: 0\n", "trials"),
    ("P_d: 1\nP_d_dbm: 0\n", "P_d_dbm"),
    ("- just\n- a list\n", "path"),
])
def test_validation_errors_name_the_field(tmp_path, text, field):
    path = tmp_path / "plan.yaml"
    path.write_text(text)
    with pytest.raises(InvalidConfigError) as exc:
        load_config(path)
    assert exc.value.field == field


def test_missing_file():
    with pytest.raises(InvalidConfigError):
        load_config("/nonexistent/plan.yaml")


def test_single_trial_has_zero_stderr():
    rows = run_plan(ExperimentPlan(trials=1, scenario=FAST, schemes=("zf",)))
    assert all(r.stderr == 0.0 and r.trials == 1 for r in rows)


def test_same_plan_same_bytes():
    plan = ExperimentPlan(values=(0.0, 10.0), trials=3, scenario=FAST, direction="ul")
    a = format_results(run_plan(plan), "csv")
    b = format_results(run_plan(plan), "csv")
    assert a == b
    assert format_results(run_plan(plan), "json", plan) == format_results(run_plan(plan), "json", plan)


def test_parallel_matches_sequential():
    plan = ExperimentPlan(values=(0.0,), trials=4, scenario=FAST, schemes=("mmse",))
    par = ExperimentPlan(values=(0.0,), trials=4, scenario=FAST, schemes=("mmse",), workers=2)
    assert format_results(run_plan(plan)) == format_results(run_plan(par))


def test_power_sweep_trend():
    plan = ExperimentPlan(values=(-20.0, 0.0, 20.0), trials=8, scenario=ScenarioConfig(N_s=1000),
                          schemes=("zf", "mmse"), systems=("pass",))
    rows = run_plan(plan)
    for scheme in ("zf", "mmse"):
        means = [r.mean_sumrate for r in rows if r.scheme == scheme]
        assert means[0] < means[1] < means[2]


def test_zero_rows_header_only(tmp_path):
    path = tmp_path / "out.csv"
    emit_results([], "csv", path)
    assert path.read_text() == ",".join(CSV_COLUMNS) + "\n"


def test_row_count_and_columns():
    plan = ExperimentPlan(sweep_var="num_pas", values=(2, 4), trials=2, scenario=FAST, direction="ul",
                          schemes=("mrc", "mmse"))
    text = format_results(run_plan(plan), "csv")
    records = list(csv.reader(io.StringIO(text)))
    assert tuple(records[0]) == CSV_COLUMNS
    assert len(records) - 1 == 2 * 2 * 2
    for rec in records[1:]:
        assert float(rec[5]) >= 0 and float(rec[6]) >= 0


def test_json_round_trip(tmp_path):
    plan = ExperimentPlan(sweep_var="side_length", values=(20.0, 50.0), trials=2, scenario=FAST)
    rows = run_plan(plan)
    path = tmp_path / "out.json"
    text = emit_results(rows, "json", path, plan)
    assert harness.rows_from_json(path.read_text()) == rows
    doc = json.loads(text)
    assert doc["config"]["scenario"]["L_m"] == 50.0 and doc["config"]["trials"] == 2


def test_infeasible_zf_rows_are_marked():
    plan = ExperimentPlan(sweep_var="num_users", values=(4, 6), trials=1, scenario=FAST, systems=("hmimo",))
    rows = run_plan(plan)
    marked = [r for r in rows if r.infeasible]
    assert [(r.sweep_value, r.scheme) for r in marked] == [(6.0, "zf")]
    assert ",zf,hmimo,infeasible,,0,," in format_results(rows)


def test_timing_off_by_default():
    rows = run_plan(ExperimentPlan(trials=1, scenario=FAST, schemes=("mrt",)))
    assert all(r.mean_walltime is None for r in rows)
    rows = run_plan(ExperimentPlan(trials=1, scenario=FAST, schemes=("mrt",), timing=True))
    assert rows[0].mean_walltime > 0


def test_failures_are_counted(monkeypatch):
    real = harness.run_sweep
    calls = {"n": 0}

    def flaky(*args, **kw):
        calls["n"] += 1
        if calls["n"] == 1:
            raise PinchError("synthetic failure")
        return real(*args, **kw)

    monkeypatch.setattr(harness, "run_sweep", flaky)
    with pytest.raises(PlanFailedError):
        run_plan(ExperimentPlan(trials=5, scenario=FAST, schemes=("mrt",), systems=("pass",)))
    calls["n"] = 0
    rows = run_plan(ExperimentPlan(trials=101, scenario=ScenarioConfig(N_s=50, max_sweeps=1),
                                   schemes=("mrt",), systems=("pass",)))
    assert rows[0].failures == 1 and rows[0].trials == 100


def test_unwritable_path():
    with pytest.raises(PinchError):
        emit_results([], "csv", "/nonexistent/dir/out.csv")


def test_seed_isolation():
    """Trial t's draws depend only on seed + t."""
    later = run_plan(ExperimentPlan(trials=3, scenario=FAST, schemes=("mmse",), systems=("pass",), seed=7))
    alone = run_plan(ExperimentPlan(trials=1, scenario=FAST, schemes=("mmse",), systems=("pass",), seed=9))
    third = harness._trial(ExperimentPlan(trials=3, scenario=FAST, schemes=("mmse",), seed=7), 0.0, 2)
    assert alone[0].mean_sumrate == pytest.approx(third["mmse", "pass"][0], rel=1e-11)
    assert np.isfinite(later[0].mean_sumrate)
