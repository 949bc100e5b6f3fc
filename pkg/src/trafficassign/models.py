"""Traffic models mapping a demand assignment to link flows or a state trajectory.

The static model is a single incidence product. The dynamic models (CTM and
Merchant-Nemhauser) use one cell per link with path-segregated vehicle counts,
a triangular fundamental diagram, FIFO splitting at nodes, demand-proportional
supply allocation at merges, and unbounded point queues at the origins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .network import KPH_TO_MPS, Network

DEFAULT_JAM_DENSITY = 140.0  # veh/km
SINK = -1


class ModelConfigError(ValueError):
    pass


def static_flows(h, delta: np.ndarray) -> np.ndarray:
    """Link flows ``delta @ h`` per timestep, veh/hr."""
    h = np.asarray(h, dtype=float)
    if h.shape[0] != delta.shape[1]:
        raise ValueError(f"assignment has {h.shape[0]} paths, incidence has {delta.shape[1]}")
    return delta @ h


@dataclass(frozen=True)
class FundamentalDiagram:
    """Per-link triangular demand/supply functions in vehicles per step."""

    ff_ratio: np.ndarray  # v*dt/L, fraction of the cell that can leave per step
    wave_ratio: np.ndarray  # w*dt/L
    max_vehicles: np.ndarray  # jam density * length; inf disables spillback
    step_capacity: np.ndarray  # capacity * dt, vehicles
    constant_supply: bool = False

    @classmethod
    def from_network(cls, network: Network, dt: float,
                     constant_supply: bool = False) -> "FundamentalDiagram":
        L = len(network.links)
        ff, wave, xmax, cap = (np.empty(L) for _ in range(4))
        for i, link in enumerate(network.links):
            v = link.free_flow_speed * KPH_TO_MPS
            if v * dt > link.length * (1 + 1e-12):
                raise ModelConfigError(
                    f"link {link.id}: CFL violated, free-flow speed * dt = {v * dt:.3f} m "
                    f"exceeds length {link.length} m")
            kj = DEFAULT_JAM_DENSITY if link.jam_density is None else link.jam_density
            ff[i] = v * dt / link.length
            cap[i] = link.capacity * dt / 3600.0
            if np.isinf(kj):
                wave[i], xmax[i] = 0.0, np.inf
            else:
                kc = link.capacity / link.free_flow_speed
                if kj <= kc:
                    raise ModelConfigError(f"link {link.id}: jam density below critical density")
                w = link.capacity / (kj - kc) / 3.6  # m/s
                wave[i] = w * dt / link.length
                xmax[i] = kj * link.length / 1000.0
        return cls(ff, wave, xmax, cap, constant_supply)

    def demand(self, x: np.ndarray) -> np.ndarray:
        return np.minimum(self.ff_ratio * x, self.step_capacity)

    def supply(self, x: np.ndarray) -> np.ndarray:
        if self.constant_supply:
            return self.step_capacity.copy()
        finite = np.isfinite(self.max_vehicles)
        room = np.where(finite, self.max_vehicles, 0.0) - x
        congested = np.where(finite, self.wave_ratio * room, np.inf)
        return np.clip(np.minimum(congested, self.step_capacity), 0.0, None)


class _Cells:
    """Flattened (link, path) cells for links on each path, with successor maps."""

    def __init__(self, network: Network):
        link, path, nxt, first = [], [], [], []
        for p in range(network.n_paths):
            seq = network.path_link_indices(p)
            base = len(link)
            first.append(base)
            for i, l in enumerate(seq):
                link.append(l)
                path.append(p)
                nxt.append(base + i + 1 if i + 1 < len(seq) else SINK)
        self.link = np.array(link, dtype=int)
        self.path = np.array(path, dtype=int)
        self.next_cell = np.array(nxt, dtype=int)
        self.first_cell = np.array(first, dtype=int)
        self.n_links = network.n_links
        self.n_paths = network.n_paths
        self.internal = self.next_cell != SINK
        self.next_link = np.where(self.internal, self.link[np.where(self.internal, self.next_cell, 0)], SINK)
        self.next_link_safe = np.where(self.internal, self.next_link, 0)
        self.next_link_internal = self.next_link[self.internal]
        self.next_cell_internal = self.next_cell[self.internal]
        self.first_link = self.link[self.first_cell]

    def to_dense(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n_links, self.n_paths) + values.shape[1:])
        out[self.link, self.path] = values
        return out


@dataclass(frozen=True)
class StepResult:
    x: np.ndarray  # cell counts at t + dt
    queue: np.ndarray  # origin queues at t + dt, per path
    inflow: np.ndarray  # per cell, vehicles this step
    outflow: np.ndarray
    exited: float


def _node_step(cells: _Cells, fd: FundamentalDiagram, x: np.ndarray,
               queue: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flows for one step. Returns (cell inflow, cell outflow, queue discharge)."""
    L = cells.n_links
    xl = np.bincount(cells.link, weights=x, minlength=L)
    xl_cell = xl[cells.link]
    share = np.divide(x, xl_cell, out=np.zeros_like(x), where=xl_cell > 0)
    d_cell = fd.demand(xl)[cells.link] * share
    s_link = fd.supply(xl)

    wanted = np.bincount(cells.next_link_internal, weights=d_cell[cells.internal], minlength=L)
    wanted += np.bincount(cells.first_link, weights=queue, minlength=L)
    ratio = np.divide(s_link, wanted, out=np.ones(L), where=wanted > s_link)

    # FIFO: an upstream link discharges at the rate of its most restrictive movement
    cell_ratio = np.where(cells.internal, ratio[cells.next_link_safe], 1.0)
    theta = np.ones(L)
    active = d_cell > 0
    np.minimum.at(theta, cells.link[active], cell_ratio[active])
    out = theta[cells.link] * d_cell

    discharge = queue * ratio[cells.first_link]
    inflow = np.zeros_like(x)
    inflow[cells.next_cell_internal] = out[cells.internal]
    inflow[cells.first_cell] += discharge
    return inflow, out, discharge


def _step(cells, fd, x, queue, arrivals) -> StepResult:
    queue = queue + arrivals
    inflow, out, discharge = _node_step(cells, fd, x, queue)
    exited = float(out[~cells.internal].sum())
    return StepResult(x + inflow - out, queue - discharge, inflow, out, exited)


def ctm_step(network: Network, x: np.ndarray, queue: np.ndarray, arrivals: np.ndarray,
             dt: float | None = None) -> StepResult:
    """Advance the CTM one step from dense state ``x`` (link, path).

    ``arrivals`` are vehicles per path joining the origin queues this step.
    """
    return _dense_step(network, x, queue, arrivals, dt, constant_supply=False)


def mn_step(network: Network, x: np.ndarray, queue: np.ndarray, arrivals: np.ndarray,
            dt: float | None = None) -> StepResult:
    """As :func:`ctm_step` but with every link's supply fixed at capacity."""
    return _dense_step(network, x, queue, arrivals, dt, constant_supply=True)


def _dense_step(network, x, queue, arrivals, dt, constant_supply):
    cells = _Cells(network)
    fd = FundamentalDiagram.from_network(network, dt or network.dt, constant_supply)
    r = _step(cells, fd, np.asarray(x, dtype=float)[cells.link, cells.path],
              np.asarray(queue, dtype=float), np.asarray(arrivals, dtype=float))
    return StepResult(cells.to_dense(r.x), r.queue, cells.to_dense(r.inflow),
                      cells.to_dense(r.outflow), r.exited)


@dataclass(frozen=True)
class StateTrajectory:
    """Path-segregated link occupancy over the horizon.

    ``x`` has one more timestep than the flow arrays: ``x[..., k]`` is the
    state at ``k * dt`` and flows at index ``k`` happen during step ``k``.
    """

    x: np.ndarray  # (link, path, n_steps + 1) vehicles
    inflow: np.ndarray  # (link, path, n_steps) vehicles per step
    outflow: np.ndarray
    queue: np.ndarray  # (path, n_steps + 1) vehicles waiting at origins
    entered: np.ndarray  # (n_steps,) vehicles joining origin queues
    exited: np.ndarray  # (n_steps,) vehicles leaving at destinations
    dt: float

    @property
    def link_occupancy(self) -> np.ndarray:
        return self.x.sum(axis=1)

    @property
    def link_flow(self) -> np.ndarray:
        """Total link outflow per step, vehicles."""
        return self.outflow.sum(axis=1)

    @property
    def n_steps(self) -> int:
        return self.inflow.shape[2]


MODELS = ("static", "mn", "ctm")


class Loader:
    """Reusable dynamic network loader; precomputes cell maps and the FD."""

    def __init__(self, network: Network, model: str, dt: float | None = None):
        if model not in ("ctm", "mn"):
            raise ModelConfigError(f"no dynamic loading for model {model!r}")
        self.network = network
        self.model = model
        self.dt = dt or network.dt
        self.cells = _Cells(network)
        self.fd = FundamentalDiagram.from_network(network, self.dt, constant_supply=model == "mn")

    def run(self, h) -> StateTrajectory:
        h = np.asarray(h, dtype=float)
        n_paths, K = self.network.n_paths, self.network.n_steps
        if h.shape != (n_paths, K):
            raise ValueError(f"assignment shape {h.shape} != {(n_paths, K)}")
        cells, fd = self.cells, self.fd
        arrivals = h * (self.dt / 3600.0)
        xs, ins, outs, qs, exited = _simulate(
            arrivals, cells.link, cells.next_cell, cells.first_cell, cells.n_links,
            fd.ff_ratio, fd.wave_ratio, np.where(np.isfinite(fd.max_vehicles), fd.max_vehicles, 0.0),
            np.isfinite(fd.max_vehicles), fd.step_capacity, fd.constant_supply)
        return StateTrajectory(cells.to_dense(xs), cells.to_dense(ins), cells.to_dense(outs),
                               qs, arrivals.sum(axis=0), exited, self.dt)


@numba.njit(cache=True)
def _simulate(arrivals, link, next_cell, first_cell, n_links, ff_ratio, wave_ratio,
              max_vehicles, finite_jam, step_capacity, constant_supply):
    # compiled twin of repeated _step calls; kept in lockstep by the test suite
    n_paths, K = arrivals.shape
    C = link.shape[0]
    xs = np.zeros((C, K + 1))
    ins = np.zeros((C, K))
    outs = np.zeros((C, K))
    qs = np.zeros((n_paths, K + 1))
    exited = np.zeros(K)
    x = np.zeros(C)
    q = np.zeros(n_paths)
    xl = np.empty(n_links)
    supply = np.empty(n_links)
    wanted = np.empty(n_links)
    ratio = np.empty(n_links)
    theta = np.empty(n_links)
    d = np.empty(C)
    out = np.empty(C)
    inflow = np.empty(C)
    for k in range(K):
        for p in range(n_paths):
            q[p] += arrivals[p, k]
        xl[:] = 0.0
        for c in range(C):
            xl[link[c]] += x[c]
        for l in range(n_links):
            if constant_supply:
                supply[l] = step_capacity[l]
            elif finite_jam[l]:
                supply[l] = max(0.0, min(wave_ratio[l] * (max_vehicles[l] - xl[l]), step_capacity[l]))
            else:
                supply[l] = step_capacity[l]
            wanted[l] = 0.0
            theta[l] = 1.0
        for c in range(C):
            l = link[c]
            if xl[l] > 0:
                d[c] = min(ff_ratio[l] * xl[l], step_capacity[l]) * (x[c] / xl[l])
            else:
                d[c] = 0.0
            if next_cell[c] >= 0:
                wanted[link[next_cell[c]]] += d[c]
        for p in range(n_paths):
            wanted[link[first_cell[p]]] += q[p]
        for l in range(n_links):
            ratio[l] = supply[l] / wanted[l] if wanted[l] > supply[l] else 1.0
        for c in range(C):
            if d[c] > 0 and next_cell[c] >= 0:
                r = ratio[link[next_cell[c]]]
                if r < theta[link[c]]:
                    theta[link[c]] = r
        inflow[:] = 0.0
        gone = 0.0
        for c in range(C):
            out[c] = theta[link[c]] * d[c]
            if next_cell[c] >= 0:
                inflow[next_cell[c]] = out[c]
            else:
                gone += out[c]
        for p in range(n_paths):
            discharge = q[p] * ratio[link[first_cell[p]]]
            inflow[first_cell[p]] += discharge
            q[p] -= discharge
        for c in range(C):
            x[c] = x[c] + inflow[c] - out[c]
            xs[c, k + 1] = x[c]
            ins[c, k] = inflow[c]
            outs[c, k] = out[c]
        for p in range(n_paths):
            qs[p, k + 1] = q[p]
        exited[k] = gone
    return xs, ins, outs, qs, exited


def run_loading(h, network: Network, model: str = "ctm") -> StateTrajectory:
    """Simulate the dynamic model over the full horizon."""
    return Loader(network, model).run(h)


def conservation_residual(traj: StateTrajectory) -> np.ndarray:
    """Per-step relative imbalance of entered vs exited + in network + queued."""
    entered = np.concatenate([[0.0], np.cumsum(traj.entered)])
    exited = np.concatenate([[0.0], np.cumsum(traj.exited)])
    stock = traj.x.sum(axis=(0, 1)) + traj.queue.sum(axis=0)
    scale = np.maximum(entered, 1.0)
    return np.abs(entered - exited - stock) / scale
