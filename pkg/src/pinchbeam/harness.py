"""Monte-Carlo experiment plans: configuration, execution and result files.

A plan sweeps one scenario variable over a list of values.  For every value
it runs ``trials`` independent trials; trial ``t`` uses the generator seeded
with ``seed + t``, which first draws the user positions and then the
initial PASS layout.  Every scheme and system of that trial sees the same
draws, so the comparison between them is paired.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field, fields
import io
import json
import logging
import math
from pathlib import Path

import numpy as np
import yaml

from . import downlink, uplink
from .channel import sample_users
from .config import DBM_FIELDS, SCENARIO_FIELDS, ScenarioConfig, dbm_to_watt, scenario_from_mapping
from .errors import InvalidConfigError, PinchError, PlanFailedError
from .hmimo import baseline_sumrate
from .optimizer import init_layout, run_sweep

log = logging.getLogger(__name__)

SWEEP_VARS = ("power", "side_length", "num_pas", "num_users", "search_resolution")
SYSTEMS = ("pass", "hmimo")
DIRECTIONS = ("dl", "ul")
CSV_COLUMNS = (
    "sweep_var",
    "sweep_value",
    "direction",
    "scheme",
    "system",
    "mean_sumrate_bps_hz",
    "stderr",
    "trials",
    "mean_sweeps",
    "mean_walltime_s",
)
INFEASIBLE = "infeasible"
MAX_FAILURE_FRACTION = 0.01
DIGITS = 12

# sweep variable -> scenario field it overrides (power depends on direction)
_SWEEP_FIELD = {"side_length": "D_x", "num_pas": "N", "num_users": "K", "search_resolution": "N_s"}
_INTEGER_VARS = {"num_pas", "num_users", "search_resolution"}


def _round(x):
    """Round to the precision the result files carry."""
    return float(f"{x:.{DIGITS}g}")


@dataclass(frozen=True)
class ExperimentPlan:
    """One sweep experiment.

    ``values`` are in the unit of the sweep variable: dBm for ``power``
    (applied to P_d or P_u according to ``direction``), metres for
    ``side_length`` and plain counts otherwise.  ``schemes`` defaults to
    every scheme of the direction.  ``seed`` is the base seed; it defaults
    to ``scenario.seed``.
    """

    sweep_var: str = "power"
    values: tuple = (0.0,)
    direction: str = "dl"
    schemes: tuple | None = None
    systems: tuple = SYSTEMS
    trials: int = 400
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    seed: int | None = None
    timing: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.sweep_var not in SWEEP_VARS:
            raise InvalidConfigError("sweep_var", f"must be one of {SWEEP_VARS}, got {self.sweep_var!r}")
        if self.direction not in DIRECTIONS:
            raise InvalidConfigError("direction", f"must be 'dl' or 'ul', got {self.direction!r}")
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise InvalidConfigError("values", "need at least one sweep value")
        allowed = downlink.SCHEMES if self.direction == "dl" else uplink.SCHEMES
        schemes = allowed if self.schemes is None else tuple(self.schemes)
        bad = [s for s in schemes if s not in allowed]
        if bad or not schemes:
            raise InvalidConfigError("schemes", f"{self.direction} schemes are {allowed}, got {schemes}")
        object.__setattr__(self, "schemes", schemes)
        object.__setattr__(self, "systems", tuple(self.systems))
        bad = [s for s in self.systems if s not in SYSTEMS]
        if bad or not self.systems:
            raise InvalidConfigError("systems", f"must be drawn from {SYSTEMS}, got {self.systems}")
        for name, low in (("trials", 1), ("workers", 1)):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < low:
                raise InvalidConfigError(name, f"must be an integer >= {low}, got {value!r}")
        if self.seed is None:
            object.__setattr__(self, "seed", self.scenario.seed)
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidConfigError("seed", f"must be a non-negative integer, got {self.seed!r}")
        for value in self.values:
            self.point_config(value)

    def point_config(self, value):
        """Scenario of one sweep point."""
        if self.sweep_var == "power":
            name = "P_d" if self.direction == "dl" else "P_u"
            try:
                watts = dbm_to_watt(float(value))
            except (TypeError, ValueError):
                raise InvalidConfigError("values", f"not a power in dBm: {value!r}") from None
            return self.scenario.replace(**{name: watts})
        name = _SWEEP_FIELD[self.sweep_var]
        if self.sweep_var in _INTEGER_VARS:
            if not float(value).is_integer():
                raise InvalidConfigError("values", f"{self.sweep_var} needs integers, got {value!r}")
            value = int(value)
        else:
            value = float(value)
        try:
            return self.scenario.replace(**{name: value})
        except InvalidConfigError as exc:
            raise InvalidConfigError("values", f"{self.sweep_var}={value!r} gives an invalid scenario ({exc})") from None

    def resolved(self):
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "scenario"}
        out["values"] = list(self.values)
        out["schemes"] = list(self.schemes)
        out["systems"] = list(self.systems)
        out["scenario"] = self.scenario.resolved()
        return out


PLAN_FIELDS = tuple(f.name for f in fields(ExperimentPlan) if f.name != "scenario")


def plan_from_mapping(values):
    """Build a plan from a flat mapping of plan and scenario field names.

    Scenario fields may also be nested under a ``scenario`` key.
    """
    values = dict(values or {})
    scenario_keys = dict(values.pop("scenario", None) or {})
    plan_kwargs = {}
    for key, value in values.items():
        if key in PLAN_FIELDS:
            plan_kwargs[key] = value
        elif key in SCENARIO_FIELDS or key in DBM_FIELDS:
            if key in scenario_keys:
                raise InvalidConfigError(key, "given both at top level and under 'scenario'")
            scenario_keys[key] = value
        else:
            raise InvalidConfigError(key, "unknown configuration field")
    for key in ("values", "schemes", "systems"):
        if key in plan_kwargs and isinstance(plan_kwargs[key], (str, int, float)):
            plan_kwargs[key] = [plan_kwargs[key]]
    for key in ("trials", "workers", "seed"):
        if key in plan_kwargs and isinstance(plan_kwargs[key], float) and plan_kwargs[key].is_integer():
            plan_kwargs[key] = int(plan_kwargs[key])
    if "seed" in plan_kwargs and "seed" not in scenario_keys:
        scenario_keys["seed"] = plan_kwargs["seed"]
    return ExperimentPlan(scenario=scenario_from_mapping(scenario_keys), **plan_kwargs)


def load_config(path):
    """Read a YAML plan file; an empty file gives the default plan."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidConfigError("path", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InvalidConfigError("path", f"{path} is not valid YAML: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise InvalidConfigError("path", f"{path} must hold a key-value mapping")
    return plan_from_mapping(data)


@dataclass(frozen=True)
class ResultRow:
    """Aggregate of one (sweep value, scheme, system) cell.

    ``mean_sumrate`` is ``None`` for an infeasible cell (ZF with K > M);
    ``mean_sweeps`` is ``None`` for the fixed baseline and
    ``mean_walltime`` is ``None`` unless the plan asked for timing.
    """

    sweep_var: str
    sweep_value: float
    direction: str
    scheme: str
    system: str
    mean_sumrate: float | None
    stderr: float | None
    trials: int
    mean_sweeps: float | None = None
    mean_walltime: float | None = None
    failures: int = 0

    @property
    def infeasible(self):
        return self.mean_sumrate is None


def _trial(plan, value, t):
    """All schemes and systems of one trial -> {(scheme, system): outcome}.

    An outcome is ``(sumrate, sweeps, walltime)`` or ``None`` on failure.
    """
    config = plan.point_config(value)
    rng = np.random.default_rng(plan.seed + t)
    users = sample_users(config, rng)
    layout = init_layout(config, rng) if "pass" in plan.systems else None
    out = {}
    for scheme in plan.schemes:
        if scheme == "zf" and config.K > config.M:
            continue
        for system in plan.systems:
            try:
                if system == "pass":
                    res = run_sweep(config, users, plan.direction, scheme, layout=layout)
                    out[scheme, system] = (res.sumrate, res.trace.sweeps, res.trace.walltime)
                else:
                    out[scheme, system] = (baseline_sumrate(config, users, plan.direction, scheme), None, None)
            except (PinchError, ArithmeticError, np.linalg.LinAlgError) as exc:
                log.warning("trial %d, %s=%r, %s/%s failed: %s", t, plan.sweep_var, value, scheme, system, exc)
                out[scheme, system] = None
    return out


def _trial_job(args):
    return _trial(*args)


def _aggregate(plan, value, outcomes, scheme, system):
    base = dict(sweep_var=plan.sweep_var, sweep_value=_round(float(value)), direction=plan.direction,
                scheme=scheme, system=system)
    config = plan.point_config(value)
    if scheme == "zf" and config.K > config.M:
        return ResultRow(mean_sumrate=None, stderr=None, trials=0, **base)
    ok = [o[scheme, system] for o in outcomes if o[scheme, system] is not None]
    failures = len(outcomes) - len(ok)
    if failures > MAX_FAILURE_FRACTION * len(outcomes):
        raise PlanFailedError(
            f"{failures} of {len(outcomes)} trials failed for {plan.sweep_var}={value!r}, {scheme}/{system}"
        )
    if failures:
        log.warning("%d trial(s) excluded for %s=%r, %s/%s", failures, plan.sweep_var, value, scheme, system)
    rates = np.array([o[0] for o in ok])
    n = len(rates)
    stderr = float(np.std(rates, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    sweeps = walltime = None
    if system == "pass":
        sweeps = _round(float(np.mean([o[1] for o in ok])))
        if plan.timing:
            walltime = _round(float(np.mean([o[2] for o in ok])))
    return ResultRow(mean_sumrate=_round(float(np.mean(rates))), stderr=_round(stderr), trials=n,
                     mean_sweeps=sweeps, mean_walltime=walltime, failures=failures, **base)


def run_plan(plan):
    """Run every trial of the plan and aggregate one row per cell.

    Rows are ordered by sweep value, then scheme, then system.  With
    ``workers > 1`` trials run in separate processes; results are folded
    in trial order, so the output does not depend on the worker count.
    """
    rows = []
    for value in plan.values:
        jobs = [(plan, value, t) for t in range(plan.trials)]
        if plan.workers > 1:
            with ProcessPoolExecutor(plan.workers) as pool:
                outcomes = list(pool.map(_trial_job, jobs))
        else:
            outcomes = [_trial_job(job) for job in jobs]
        for scheme in plan.schemes:
            for system in plan.systems:
                rows.append(_aggregate(plan, value, outcomes, scheme, system))
    return rows


# -- output -------------------------------------------------------------------


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.{DIGITS}g}"
    return str(x)


def _csv_record(row):
    mean = INFEASIBLE if row.infeasible else row.mean_sumrate
    return [row.sweep_var, row.sweep_value, row.direction, row.scheme, row.system, mean,
            row.stderr, row.trials, row.mean_sweeps, row.mean_walltime]


def _json_record(row):
    rec = dict(zip(CSV_COLUMNS, _csv_record(row)))
    rec["failures"] = row.failures
    return rec


def format_results(rows, fmt="csv", plan=None):
    """Serialise rows to CSV or JSON text."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(v) for v in _csv_record(row)])
        return buf.getvalue()
    if fmt == "json":
        doc = {"config": plan.resolved() if plan is not None else None, "rows": [_json_record(r) for r in rows]}
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")


def emit_results(rows, fmt, path, plan=None):
    """Write rows to ``path``.  JSON output embeds the resolved plan."""
    text = format_results(rows, fmt, plan)
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise PinchError(f"cannot write results to {path}: {exc.strerror}") from None
    return text


def rows_from_json(text):
    """Parse the ``rows`` of a JSON result document back into ResultRow objects."""
    rows = []
    for rec in json.loads(text)["rows"]:
        mean = rec["mean_sumrate_bps_hz"]
        rows.append(ResultRow(
            sweep_var=rec["sweep_var"], sweep_value=rec["sweep_value"], direction=rec["direction"],
            scheme=rec["scheme"], system=rec["system"],
            mean_sumrate=None if mean == INFEASIBLE else mean, stderr=rec["stderr"], trials=rec["trials"],
            mean_sweeps=rec["mean_sweeps"], mean_walltime=rec["mean_walltime_s"], failures=rec["failures"],
        ))
    return rows


__all__ = [
    "CSV_COLUMNS",
    "ExperimentPlan",
    "ResultRow",
    "emit_results",
    "format_results",
    "load_config",
    "plan_from_mapping",
    "rows_from_json",
    "run_plan",
]
