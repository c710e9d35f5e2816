"""Command line entry point: ``python -m pinchbeam {run,sweep,selftest}``."""

import argparse
import logging
import sys

from . import selftest
from .config import ScenarioConfig
from .errors import PinchError
from .harness import ExperimentPlan, emit_results, format_results, load_config, run_plan

_VAR_NAMES = {
    "power": "power",
    "side-length": "side_length",
    "pas": "num_pas",
    "users": "num_users",
    "resolution": "search_resolution",
}


def _csv_list(text):
    return tuple(item.strip() for item in text.split(",") if item.strip())


def _add_plan_flags(p):
    # None means "keep the plan's value"
    p.add_argument("--direction", choices=("dl", "ul"))
    p.add_argument("--schemes", type=_csv_list, help="comma-separated, e.g. zf,mmse")
    p.add_argument("--systems", type=_csv_list, help="comma-separated subset of pass,hmimo")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, help="base seed; trial t uses seed + t")
    p.add_argument("--resolution", dest="N_s", type=int, help="candidate points per waveguide")
    p.add_argument("--workers", type=int)
    p.add_argument("--timing", action="store_true", default=None, help="report mean wall time (not reproducible)")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser():
    parser = argparse.ArgumentParser(prog="pinchbeam", description="Pinching-antenna beamforming experiments.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the plan in a YAML file")
    run.add_argument("plan", help="plan file; an empty file runs the default plan")
    _add_plan_flags(run)

    sweep = sub.add_parser("sweep", help="sweep one variable on the default scenario")
    sweep.add_argument("--var", required=True, choices=sorted(_VAR_NAMES))
    sweep.add_argument("--values", required=True, nargs="+", type=float,
                       help="sweep points (dBm for power, metres for side-length)")
    _add_plan_flags(sweep)

    check = sub.add_parser("selftest", help="compare fast paths against direct computations")
    check.add_argument("--quick", action="store_true", help="fewer random instances")
    return parser


def _overrides(args):
    """Plan keyword arguments given explicitly on the command line."""
    out = {}
    for name in ("direction", "schemes", "systems", "trials", "seed", "workers", "timing"):
        value = getattr(args, name)
        if value is not None:
            out[name] = value
    return out


def _with_overrides(plan, args):
    changes = _overrides(args)
    scenario = plan.scenario
    if "seed" in changes:
        scenario = scenario.replace(seed=changes["seed"])
    if args.N_s is not None:
        scenario = scenario.replace(N_s=args.N_s)
    if "direction" in changes and "schemes" not in changes and plan.direction != changes["direction"]:
        changes["schemes"] = None
    fields = dict(sweep_var=plan.sweep_var, values=plan.values, direction=plan.direction, schemes=plan.schemes,
                  systems=plan.systems, trials=plan.trials, seed=plan.seed, timing=plan.timing,
                  workers=plan.workers)
    fields.update(changes)
    return ExperimentPlan(scenario=scenario, **fields)


def _run(plan, args):
    rows = run_plan(plan)
    if args.out:
        emit_results(rows, args.format, args.out, plan)
    else:
        sys.stdout.write(format_results(rows, args.format, plan))
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "selftest":
            results = selftest.run_all(quick=args.quick)
            for r in results:
                print(r.line())
            failed = sum(not r.ok for r in results)
            print(f"{len(results) - failed}/{len(results)} checks passed")
            return 1 if failed else 0
        if args.command == "run":
            plan = _with_overrides(load_config(args.plan), args)
        else:
            base = ExperimentPlan(sweep_var=_VAR_NAMES[args.var], values=tuple(args.values),
                                  scenario=ScenarioConfig(), trials=400)
            plan = _with_overrides(base, args)
        return _run(plan, args)
    except (PinchError, ValueError) as exc:
        print(f"pinchbeam: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
