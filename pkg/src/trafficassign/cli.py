"""Command line entry point: ``trafficassign {solve,compare,validate}``."""

from __future__ import annotations

import argparse
import logging
import sys
import warnings

from .cost import COST_MODES
from .runner import (EXIT_CONVERGED, EXIT_INPUT_ERROR, EXIT_NOT_CONVERGED,
                     IncompatibleScenarios, OutputError, compare, run, write_comparison)
from .scenario import ScenarioError, load_scenario
from .solvers import METHODS

log = logging.getLogger("trafficassign")


def _overrides(args) -> dict:
    return {"model": args.model, "cost_mode": args.cost_mode, "solver": args.solver,
            "eps": args.eps, "max_iters": args.max_iters}


def _add_solve_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", type=float, help="relative gap tolerance")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--model", choices=sorted(COST_MODES))
    p.add_argument("--cost-mode", choices=["bpr", "instantaneous", "actual"])
    p.add_argument("--solver", choices=METHODS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trafficassign",
                                     description="Path-based user-equilibrium traffic assignment")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one scenario and write result files")
    p.add_argument("--scenario", required=True,
                   help="scenario JSON path or builtin name (paper_fig3_static, paper_fig3_dynamic)")
    p.add_argument("--out", required=True, help="output directory")
    _add_solve_flags(p)

    p = sub.add_parser("compare", help="score several solutions under a reference model")
    p.add_argument("--scenario", required=True, action="append",
                   help="repeatable; each scenario is solved then re-evaluated")
    p.add_argument("--variant", action="append", default=[], metavar="MODEL:COST_MODE",
                   help="repeatable; solve every scenario under each variant")
    p.add_argument("--reference-model", default="ctm", choices=sorted(COST_MODES))
    p.add_argument("--reference-cost-mode", default="actual",
                   choices=["bpr", "instantaneous", "actual"])
    p.add_argument("--out", required=True)
    _add_solve_flags(p)

    p = sub.add_parser("validate", help="check a scenario file and report problems")
    p.add_argument("--scenario", required=True)
    return parser


def _cmd_solve(args) -> int:
    scenario = load_scenario(args.scenario, _overrides(args))
    code = run(scenario, args.out)
    log.info("wrote results to %s", args.out)
    print(f"{scenario.name}: {'converged' if code == EXIT_CONVERGED else 'not converged'} "
          f"({scenario.model}/{scenario.cost_mode}/{scenario.solver.method})")
    return code


def _cmd_compare(args) -> int:
    scenarios = []
    for path in args.scenario:
        if not args.variant:
            scenarios.append(load_scenario(path, _overrides(args)))
            continue
        for variant in args.variant:
            model, _, cost_mode = variant.partition(":")
            ov = _overrides(args) | {"model": model, "cost_mode": cost_mode or None}
            if model != "static" and ov["solver"] is None:
                base = load_scenario(path)
                if base.solver.method == "fw":
                    ov["solver"] = "msa_then_epm"
            scenarios.append(load_scenario(path, ov))
    ref = {"model": args.reference_model, "cost_mode": args.reference_cost_mode}
    if args.reference_cost_mode not in COST_MODES[args.reference_model]:
        raise ScenarioError([f"reference cost mode {args.reference_cost_mode!r} is "
                             f"incompatible with model {args.reference_model!r}"])
    entries, reference = compare(scenarios, args.reference_model, args.reference_cost_mode)
    write_comparison(entries, reference, ref, args.out)
    for e in entries:
        s = e.summary(e.result.scenario.dt)
        print(f"{s['label']}: integrated D = {s['integrated_d_wardrop_flow']:.6g}, "
              f"integrated Dx = {s['integrated_d_wardrop_state']}")
    return EXIT_CONVERGED if all(e.result.report.converged for e in entries) else EXIT_NOT_CONVERGED


def _cmd_validate(args) -> int:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        scenario = load_scenario(args.scenario)
    for w in caught:
        print(f"warning: {w.message}")
    net = scenario.network
    print(f"{scenario.name}: ok ({net.n_links} links, {len(net.ods)} ODs, {net.n_paths} paths)")
    return EXIT_CONVERGED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"solve": _cmd_solve, "compare": _cmd_compare, "validate": _cmd_validate}
    try:
        return handlers[args.command](args)
    except ScenarioError as exc:
        for err in exc.errors:
            print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (OutputError, IncompatibleScenarios) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
