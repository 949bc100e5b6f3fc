"""Solve orchestration and result files (CSV + JSON)."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path as FsPath

import numpy as np

from .cost import ModelManager
from .metrics import time_integral, wardrop_distance_flow, wardrop_distance_state
from .models import StateTrajectory
from .network import Network
from .scenario import Scenario
from .solvers import SolverConfig, SolverReport, solve

EXIT_CONVERGED = 0
EXIT_INPUT_ERROR = 1
EXIT_NOT_CONVERGED = 2


def fmt(value) -> str:
    """Shortest round-trip text for a number; empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_atomic(path: FsPath, text: str) -> None:
    path = FsPath(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def assignment_csv(h, network: Network) -> str:
    h = np.asarray(h)
    return _csv(["path_id", "timestep", "value_vph"],
                ((path.id, k, h[p, k]) for p, path in enumerate(network.paths)
                 for k in range(h.shape[1])))


def path_costs_csv(c, network: Network) -> str:
    c = np.asarray(c)
    return _csv(["path_id", "timestep", "cost_seconds"],
                ((path.id, k, c[p, k]) for p, path in enumerate(network.paths)
                 for k in range(c.shape[1])))


def state_csv(traj: StateTrajectory, network: Network) -> str:
    """Rows for (link, path) pairs on a path; vehicles at the start of each step."""
    rows = []
    for p, path in enumerate(network.paths):
        for l in network.path_link_indices(p):
            for k in range(traj.n_steps):
                rows.append((network.links[l].id, path.id, k, traj.x[l, p, k],
                             traj.inflow[l, p, k], traj.outflow[l, p, k]))
    return _csv(["link_id", "path_id", "timestep", "vehicles", "inflow", "outflow"], rows)


def iterations_csv(report: SolverReport) -> str:
    return _csv(["k", "gap", "step", "wall_ms"],
                ((it.k, it.relative_gap, it.step, round(it.wall_time * 1000, 3))
                 for it in report.iterations))


def metrics_csv(d_flow, d_state=None) -> str:
    n = len(d_flow)
    return _csv(["timestep", "d_wardrop_flow", "d_wardrop_state"],
                ((k, d_flow[k], None if d_state is None else d_state[k]) for k in range(n)))


@dataclass
class RunResult:
    scenario: Scenario
    report: SolverReport
    trajectory: StateTrajectory | None
    costs: np.ndarray

    @property
    def exit_code(self) -> int:
        return EXIT_CONVERGED if self.report.converged else EXIT_NOT_CONVERGED

    @property
    def label(self) -> str:
        return f"{self.scenario.name}-{self.scenario.model}-{self.scenario.cost_mode}"


def solve_scenario(scenario: Scenario) -> RunResult:
    manager = ModelManager(scenario.network, scenario.model, scenario.cost_mode)
    report = solve(manager, scenario.solver)
    final = manager.evaluate(report.final_assignment)
    return RunResult(scenario, report, final.trajectory, final.costs)


def report_json(result: RunResult, wall_ms: float) -> str:
    r = result.report
    doc = {
        "converged": r.converged,
        "gap": r.gap,
        "iterations": len(r.iterations),
        "termination_reason": r.termination_reason,
        "wall_ms": round(wall_ms, 3),
        "evaluations": r.n_evaluations,
        "config": result.scenario.effective_config(),
    }
    return json.dumps(doc, indent=2) + "\n"


def run(scenario: Scenario, output_dir) -> int:
    """Solve and write every result file; returns the process exit code."""
    out = FsPath(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"output directory {out} is not writable")
    except OSError as exc:
        raise OutputError(str(exc)) from exc
    start = time.perf_counter()
    result = solve_scenario(scenario)
    net = scenario.network
    h = result.report.final_assignment
    files = {
        "assignment.csv": assignment_csv(h, net),
        "path_costs.csv": path_costs_csv(result.costs, net),
        "iterations.csv": iterations_csv(result.report),
        "metrics.csv": metrics_csv(wardrop_distance_flow(h, result.costs, net)),
    }
    if result.trajectory is not None:
        files["state.csv"] = state_csv(result.trajectory, net)
    for name, text in files.items():
        write_atomic(out / name, text)
    write_atomic(out / "report.json", report_json(result, (time.perf_counter() - start) * 1000))
    return result.exit_code


class OutputError(OSError):
    pass


class IncompatibleScenarios(ValueError):
    pass


@dataclass
class ComparisonEntry:
    label: str
    result: RunResult
    d_flow: np.ndarray
    d_state: np.ndarray | None

    def summary(self, dt: float) -> dict:
        return {
            "label": self.label,
            "model": self.result.scenario.model,
            "cost_mode": self.result.scenario.cost_mode,
            "converged": self.result.report.converged,
            "gap": self.result.report.gap,
            "integrated_d_wardrop_flow": time_integral(self.d_flow, dt),
            "integrated_d_wardrop_state": None if self.d_state is None
            else time_integral(self.d_state, dt),
        }


def _check_compatible(scenarios: list[Scenario]) -> None:
    first = scenarios[0].network
    for s in scenarios[1:]:
        n = s.network
        if n.n_links != first.n_links or n.n_paths != first.n_paths:
            raise IncompatibleScenarios(
                f"{s.name}: network has {n.n_links} links / {n.n_paths} paths, "
                f"expected {first.n_links} / {first.n_paths}")
        if n.dt != first.dt or n.n_steps != first.n_steps:
            raise IncompatibleScenarios(f"{s.name}: time grid differs from {scenarios[0].name}")


def compare(scenarios: list[Scenario], reference_model: str = "ctm",
            reference_cost_mode: str = "actual",
            results: list[RunResult] | None = None) -> tuple[list[ComparisonEntry], RunResult | None]:
    """Solve each scenario and score its assignment under a reference model.

    The reference equilibrium trajectory comes from the member whose model and
    cost mode match the reference, or from a fresh solve of the first scenario
    under the reference model. Returns the entries and the reference run.
    """
    if not scenarios:
        raise ValueError("nothing to compare")
    _check_compatible(scenarios)
    if results is None:
        results = [solve_scenario(s) for s in scenarios]
    network = scenarios[0].network
    manager = ModelManager(network, reference_model, reference_cost_mode)

    reference = next((r for r in results if r.scenario.model == reference_model
                      and r.scenario.cost_mode == reference_cost_mode), None)
    if reference is None and reference_model != "static":
        method = scenarios[0].solver.method
        ref_scn = scenarios[0].replace(model=reference_model, cost_mode=reference_cost_mode,
                                       solver="msa_then_epm" if method == "fw" else method)
        reference = solve_scenario(ref_scn)

    entries = []
    labels: dict[str, int] = {}
    for r in results:
        ev = manager.evaluate(r.report.final_assignment)
        d_flow = wardrop_distance_flow(r.report.final_assignment, ev.costs, network)
        d_state = None
        if ev.trajectory is not None and reference is not None:
            d_state = wardrop_distance_state(ev.trajectory, reference.trajectory)
        label = r.label
        labels[label] = labels.get(label, 0) + 1
        if labels[label] > 1:
            label = f"{label}-{labels[label]}"
        entries.append(ComparisonEntry(label, r, d_flow, d_state))
    return entries, reference


def write_comparison(entries: list[ComparisonEntry], reference: RunResult | None,
                     reference_config: dict, output_dir) -> None:
    out = FsPath(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dt = entries[0].result.scenario.dt
    summaries = [e.summary(dt) for e in entries]
    for e in entries:
        write_atomic(out / f"metrics_{e.label}.csv", metrics_csv(e.d_flow, e.d_state))
        write_atomic(out / f"assignment_{e.label}.csv",
                     assignment_csv(e.result.report.final_assignment, e.result.scenario.network))
    write_atomic(out / "summary.csv", _csv(
        ["label", "model", "cost_mode", "converged", "gap",
         "integrated_d_wardrop_flow", "integrated_d_wardrop_state"],
        ([s["label"], s["model"], s["cost_mode"], s["converged"], s["gap"],
          s["integrated_d_wardrop_flow"], s["integrated_d_wardrop_state"]] for s in summaries)))
    doc = {"reference": reference_config,
           "reference_equilibrium": None if reference is None else reference.label,
           "solutions": summaries}
    write_atomic(out / "compare.json", json.dumps(doc, indent=2) + "\n")


__all__ = ["run", "compare", "solve_scenario", "write_comparison", "RunResult",
           "SolverConfig", "EXIT_CONVERGED", "EXIT_NOT_CONVERGED", "EXIT_INPUT_ERROR"]
