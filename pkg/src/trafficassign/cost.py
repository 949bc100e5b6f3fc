"""Link travel times and path costs; composition with the models into F(h)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import Loader, ModelConfigError, StateTrajectory, static_flows
from .network import Link, Network, build_incidence

COST_MODES = {"static": ("bpr",), "mn": ("instantaneous", "actual"),
              "ctm": ("instantaneous", "actual")}


def bpr(flow, link: Link):
    """BPR travel time in seconds for a flow in veh/hr."""
    flow = np.asarray(flow, dtype=float)
    if np.any(flow < 0):
        raise ValueError("negative flow")
    return link.free_flow_travel_time * (1.0 + link.bpr_gamma * (flow / link.capacity) ** 4)


class _BPRTable:
    def __init__(self, network: Network):
        self.t0 = np.array([l.free_flow_travel_time for l in network.links])[:, None]
        self.gamma = np.array([l.bpr_gamma for l in network.links])[:, None]
        self.cap = np.array([l.capacity for l in network.links])[:, None]

    def __call__(self, f: np.ndarray) -> np.ndarray:
        if np.any(f < 0):
            raise ValueError("negative flow")
        return self.t0 * (1.0 + self.gamma * (f / self.cap) ** 4)


def static_path_costs(h, network: Network, delta: np.ndarray | None = None) -> np.ndarray:
    """Sum of BPR link times along each path, per timestep."""
    if delta is None:
        delta = build_incidence(network)
    f = static_flows(h, delta)
    return delta.T @ _BPRTable(network)(f)


def link_travel_time(x, f, free_flow_time, dt: float):
    """Occupancy-over-discharge travel time, seconds.

    ``x`` is the link occupancy (vehicles) at the start of the step and ``f``
    its outflow over the step. Falls back to the free-flow time when either is
    zero and never returns less than it.
    """
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    t0 = np.broadcast_to(np.asarray(free_flow_time, dtype=float), np.broadcast_shapes(x.shape, f.shape))
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where((x > 0) & (f > 0), dt * x / f, t0)
    return np.maximum(tau, t0)


def link_travel_times(traj: StateTrajectory, network: Network) -> np.ndarray:
    """Travel time on every link at every step, shape (link, n_steps)."""
    t0 = np.array([l.free_flow_travel_time for l in network.links])[:, None]
    x = traj.link_occupancy[:, :-1]
    return link_travel_time(x, traj.link_flow, t0, traj.dt)


def instantaneous_path_costs(traj: StateTrajectory, network: Network,
                             tau: np.ndarray | None = None) -> np.ndarray:
    if tau is None:
        tau = link_travel_times(traj, network)
    return np.vstack([tau[network.path_link_indices(p)].sum(axis=0)
                      for p in range(network.n_paths)])


def actual_path_costs(traj: StateTrajectory, network: Network,
                      tau: np.ndarray | None = None) -> np.ndarray:
    """Experienced travel time for each departure step.

    Each link's time is read at the moment the vehicle enters it, linearly
    interpolated between grid points and held at the last value past the horizon.
    """
    if tau is None:
        tau = link_travel_times(traj, network)
    grid = np.arange(tau.shape[1]) * traj.dt
    out = np.empty((network.n_paths, tau.shape[1]))
    for p in range(network.n_paths):
        clock = grid.copy()
        for l in network.path_link_indices(p):
            clock = clock + np.interp(clock, grid, tau[l])
        out[p] = clock - grid
    return out


@dataclass
class Evaluation:
    costs: np.ndarray
    trajectory: StateTrajectory | None = None


class ModelManager:
    """Realizes F: assignment -> path costs for one model / cost-mode pair.

    Stateless between calls; holds only precomputed network structure.
    """

    def __init__(self, network: Network, model: str = "static", cost_mode: str | None = None):
        if model not in COST_MODES:
            raise ModelConfigError(f"unknown model {model!r}")
        if cost_mode is None:
            cost_mode = COST_MODES[model][0]
        if cost_mode not in COST_MODES[model]:
            raise ModelConfigError(f"cost mode {cost_mode!r} is incompatible with model {model!r}")
        self.network = network
        self.model = model
        self.cost_mode = cost_mode
        self.delta = build_incidence(network)
        self._loader = None if model == "static" else Loader(network, model)
        self.n_evaluations = 0

    @property
    def is_static(self) -> bool:
        return self.model == "static"

    def evaluate(self, h) -> Evaluation:
        self.n_evaluations += 1
        h = np.asarray(h, dtype=float)
        if self.is_static:
            return Evaluation(static_path_costs(h, self.network, self.delta))
        traj = self._loader.run(h)
        tau = link_travel_times(traj, self.network)
        if self.cost_mode == "instantaneous":
            c = instantaneous_path_costs(traj, self.network, tau)
        else:
            c = actual_path_costs(traj, self.network, tau)
        return Evaluation(c, traj)

    def __call__(self, h) -> np.ndarray:
        return self.evaluate(h).costs


def evaluate_F(h, network: Network, model: str = "static", cost_mode: str | None = None) -> np.ndarray:
    """Path costs induced by ``h`` under the chosen model and cost mode."""
    return ModelManager(network, model, cost_mode)(h)
