"""Scenario files: strict JSON schema, defaults, semantic checks, and resolution
into a :class:`~trafficassign.network.Network` plus model and solver settings."""

from __future__ import annotations

import copy
import json
import warnings
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path as FsPath
from typing import Any

import jsonschema

from .cost import COST_MODES
from .models import DEFAULT_JAM_DENSITY, FundamentalDiagram, ModelConfigError
from .network import DemandProfile, Link, Network, ODPair, Path, validate
from .solvers import SolverConfig

DEFAULT_DT = 5.0
DEFAULT_GAMMA = 0.15
BUILTIN = ("paper_fig3_static", "paper_fig3_dynamic")


class ScenarioError(ValueError):
    """Invalid scenario; ``errors`` holds ``"<json-pointer>: <message>"`` strings."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class Scenario:
    name: str
    network: Network
    model: str
    cost_mode: str
    solver: SolverConfig
    dt: float
    horizon: float
    document: dict  # fully resolved input, defaults filled in
    defaults_applied: list[str] = field(default_factory=list)
    overrides: dict = field(default_factory=dict)

    def effective_config(self) -> dict:
        return {"scenario": self.document, "defaults_applied": self.defaults_applied,
                "overrides": self.overrides}

    def replace(self, **changes) -> "Scenario":
        """Re-resolve with top-level overrides (model, cost_mode, solver fields)."""
        return resolve(self.document, name=self.name, overrides=changes, warn=False)


def schema() -> dict:
    text = resources.files("trafficassign").joinpath("data/scenario.schema.json").read_text()
    return json.loads(text)


def builtin_path(name: str) -> FsPath:
    if name not in BUILTIN:
        raise KeyError(f"no builtin scenario {name!r}; choose from {BUILTIN}")
    return FsPath(str(resources.files("trafficassign").joinpath(f"data/{name}.json")))


def load_scenario(path, overrides: dict | None = None) -> Scenario:
    """Read, validate, and resolve a scenario file.

    ``path`` may also name a builtin scenario. ``overrides`` keys are
    ``model``, ``cost_mode``, ``solver`` (method), ``eps``, ``max_iters``.
    """
    p = FsPath(path)
    if not p.exists() and str(path) in BUILTIN:
        p = builtin_path(str(path))
    try:
        doc = json.loads(p.read_text())
    except FileNotFoundError:
        raise ScenarioError([f"{p}: file not found"]) from None
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{p}: parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None
    return resolve(doc, name=doc.get("name", p.stem) if isinstance(doc, dict) else p.stem,
                   overrides=overrides or {})


def _pointer(path) -> str:
    return "/" + "/".join(str(x) for x in path) if path else "/"


def resolve(doc: Any, name: str = "scenario", overrides: dict | None = None,
            warn: bool = True) -> Scenario:
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    validator = jsonschema.Draft202012Validator(schema())
    errs = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errs:
        raise ScenarioError([f"{_pointer(e.absolute_path)}: {e.message}" for e in errs])

    doc = copy.deepcopy(doc)
    applied: list[str] = []
    applied_overrides: dict = {}
    solver_doc = doc.setdefault("solver", {})
    for key, target in (("model", None), ("cost_mode", None), ("solver", "method"),
                        ("method", "method"), ("eps", "eps"), ("max_iters", "max_iters"),
                        ("tau0", "tau0"), ("sigma", "sigma"), ("mu", "mu"),
                        ("msa_warmup_iters", "msa_warmup_iters")):
        if key not in overrides:
            continue
        value = overrides[key]
        if target is None:
            applied_overrides[key] = {"file": doc.get(key), "override": value}
            doc[key] = value
        else:
            applied_overrides[target] = {"file": solver_doc.get(target), "override": value}
            solver_doc[target] = value
    if "model" in overrides and "cost_mode" not in overrides \
            and doc.get("cost_mode") not in COST_MODES.get(doc["model"], ()):
        doc.pop("cost_mode", None)

    errors: list[str] = []
    model = doc["model"]
    if model not in COST_MODES:
        raise ScenarioError([f"/model: unknown model {model!r}"])
    if "cost_mode" not in doc:
        doc["cost_mode"] = COST_MODES[model][0] if model == "static" else "actual"
        applied.append(f"cost_mode={doc['cost_mode']}")
    cost_mode = doc["cost_mode"]
    if cost_mode not in COST_MODES[model]:
        errors.append(f"/cost_mode: cost mode {cost_mode!r} is incompatible with model {model!r}")

    defaults = asdict(SolverConfig())
    if "method" not in solver_doc:
        solver_doc["method"] = "fw" if model == "static" else defaults["method"]
        applied.append(f"solver.method={solver_doc['method']}")
    for key, value in defaults.items():
        if key not in solver_doc:
            solver_doc[key] = value
            applied.append(f"solver.{key}={value}")
    if solver_doc["method"] == "fw" and model != "static":
        errors.append("/solver/method: FW requires static model")

    grid = doc["grid"]
    if "dt_seconds" not in grid:
        grid["dt_seconds"] = DEFAULT_DT
        applied.append(f"grid.dt_seconds={DEFAULT_DT}")
    dt, horizon = float(grid["dt_seconds"]), float(grid["horizon_seconds"])
    n = horizon / dt
    if abs(n - round(n)) > 1e-9 * max(1.0, n):
        errors.append(f"/grid: horizon_seconds {horizon} is not a multiple of dt_seconds {dt}")

    links = []
    for i, ld in enumerate(doc["network"]["links"]):
        if "bpr_gamma" not in ld and model == "static":
            ld["bpr_gamma"] = DEFAULT_GAMMA
            applied.append(f"links[{ld['id']}].bpr_gamma={DEFAULT_GAMMA}")
        jam = ld.get("jam_density_vpkm")
        if jam is None and model == "ctm":
            ld["jam_density_vpkm"] = jam = DEFAULT_JAM_DENSITY
            applied.append(f"links[{ld['id']}].jam_density_vpkm={DEFAULT_JAM_DENSITY}")
            if warn:
                warnings.warn(f"link {ld['id']}: jam_density missing, using default "
                              f"{DEFAULT_JAM_DENSITY} veh/km", stacklevel=3)
        links.append(Link(ld["id"], ld["from_node"], ld["to_node"], float(ld["length_m"]),
                          float(ld["capacity_vph"]), float(ld["free_flow_speed_kph"]),
                          None if jam is None else float(jam),
                          float(ld.get("bpr_gamma", DEFAULT_GAMMA))))

    if errors:
        raise ScenarioError(errors)

    ods, paths = [], []
    for od in doc["ods"]:
        profile = DemandProfile.from_breakpoints([tuple(b) for b in od["demand"]], dt, horizon)
        ods.append(ODPair(od["id"], od["origin"], od["destination"],
                          tuple(p["id"] for p in od["paths"]), profile))
        paths.extend(Path(p["id"], tuple(p["links"]), od["id"]) for p in od["paths"])
    network = Network(links, ods, paths)
    with warnings.catch_warnings():
        if not warn:
            warnings.simplefilter("ignore")
        diagnostics = validate(network)
    errors.extend(f"/network: {d}" for d in diagnostics)
    if not errors and model != "static":
        try:
            FundamentalDiagram.from_network(network, dt)
        except ModelConfigError as exc:
            errors.append(f"/grid/dt_seconds: {exc}")
    if errors:
        raise ScenarioError(errors)

    try:
        solver = SolverConfig(**{k: solver_doc[k] for k in defaults})
    except ValueError as exc:
        raise ScenarioError([f"/solver: {exc}"]) from None
    return Scenario(doc.get("name", name), network, model, cost_mode, solver, dt, horizon,
                    doc, applied, applied_overrides)
