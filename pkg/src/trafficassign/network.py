"""Network description: links, paths, OD pairs with demand, and incidence."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

KPH_TO_MPS = 1.0 / 3.6


@dataclass(frozen=True)
class Link:
    id: int
    from_node: int
    to_node: int
    length: float  # meters
    capacity: float  # veh/hr
    free_flow_speed: float  # km/hr
    jam_density: float | None = None  # veh/km, CTM only
    bpr_gamma: float = 0.15

    @property
    def free_flow_travel_time(self) -> float:
        """Seconds to traverse the link at free-flow speed."""
        return self.length / (self.free_flow_speed * KPH_TO_MPS)

    @property
    def critical_density(self) -> float:
        return self.capacity / self.free_flow_speed


@dataclass(frozen=True)
class Path:
    id: int
    links: tuple[int, ...]
    od: int


@dataclass(frozen=True)
class DemandProfile:
    """Piecewise-constant OD demand rate (veh/hr) on a uniform time grid."""

    values: np.ndarray
    dt: float
    horizon: float

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_steps(self) -> int:
        return len(self.values)

    @classmethod
    def from_breakpoints(cls, breakpoints: Sequence[tuple[float, float]],
                         dt: float, horizon: float) -> "DemandProfile":
        """Expand ``[(start_s, rate_vph), ...]`` onto the grid.

        Step ``k`` takes the rate of the last breakpoint whose start is at or
        before ``k * dt``; steps before the first breakpoint get zero.
        """
        n = _grid_steps(dt, horizon)
        starts = np.array([b[0] for b in breakpoints], dtype=float)
        rates = np.array([b[1] for b in breakpoints], dtype=float)
        order = np.argsort(starts, kind="stable")
        starts, rates = starts[order], rates[order]
        t = np.arange(n) * dt
        idx = np.searchsorted(starts, t, side="right") - 1
        values = np.where(idx >= 0, rates[np.clip(idx, 0, None)], 0.0)
        return cls(values, dt, horizon)

    @classmethod
    def constant(cls, rate: float, dt: float, horizon: float) -> "DemandProfile":
        return cls(np.full(_grid_steps(dt, horizon), float(rate)), dt, horizon)


def _grid_steps(dt: float, horizon: float) -> int:
    n = horizon / dt
    if dt <= 0 or abs(n - round(n)) > 1e-9 * max(1.0, n):
        raise ValueError(f"horizon {horizon} is not an integer multiple of dt {dt}")
    return int(round(n))


@dataclass(frozen=True)
class ODPair:
    id: int
    origin_node: int
    destination_node: int
    paths: tuple[int, ...]
    demand: DemandProfile


@dataclass(frozen=True)
class Network:
    """Immutable link/path/OD container.

    Arrays throughout the package index links and paths by their position in
    ``links`` and ``paths``, not by their ids.
    """

    links: tuple[Link, ...]
    ods: tuple[ODPair, ...]
    paths: tuple[Path, ...]
    _link_index: dict = field(init=False, repr=False, compare=False)
    _path_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "ods", tuple(self.ods))
        object.__setattr__(self, "paths", tuple(self.paths))
        object.__setattr__(self, "_link_index", {l.id: i for i, l in enumerate(self.links)})
        object.__setattr__(self, "_path_index", {p.id: i for i, p in enumerate(self.paths)})

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    @property
    def nodes(self) -> list[int]:
        return sorted({l.from_node for l in self.links} | {l.to_node for l in self.links})

    @property
    def dt(self) -> float:
        return self.ods[0].demand.dt

    @property
    def horizon(self) -> float:
        return self.ods[0].demand.horizon

    @property
    def n_steps(self) -> int:
        return self.ods[0].demand.n_steps

    def link_index(self, link_id: int) -> int:
        return self._link_index[link_id]

    def path_index(self, path_id: int) -> int:
        return self._path_index[path_id]

    def link(self, link_id: int) -> Link:
        return self.links[self._link_index[link_id]]

    def path(self, path_id: int) -> Path:
        return self.paths[self._path_index[path_id]]

    def path_link_indices(self, p: int) -> list[int]:
        """Link positions along the path at position ``p``."""
        return [self._link_index[l] for l in self.paths[p].links]

    def od_path_indices(self) -> list[np.ndarray]:
        """Path positions grouped by OD, in ``ods`` order."""
        return [np.array([self._path_index[pid] for pid in od.paths], dtype=int)
                for od in self.ods]

    def demand_matrix(self) -> np.ndarray:
        """OD demand rates, shape (n_ods, n_steps), veh/hr."""
        return np.vstack([od.demand.values for od in self.ods])

    def free_flow_path_times(self) -> np.ndarray:
        tt = np.array([l.free_flow_travel_time for l in self.links])
        return np.array([tt[self.path_link_indices(p)].sum() for p in range(self.n_paths)])

    def with_demand(self, demands: dict[int, DemandProfile]) -> "Network":
        """Copy with some OD demand profiles replaced (keyed by OD id)."""
        ods = [ODPair(od.id, od.origin_node, od.destination_node, od.paths,
                      demands.get(od.id, od.demand)) for od in self.ods]
        return Network(self.links, ods, self.paths)

    def with_links(self, **changes) -> "Network":
        """Copy with the given attributes overridden on every link."""
        from dataclasses import replace
        return Network([replace(l, **changes) for l in self.links], self.ods, self.paths)


def build_incidence(network: Network) -> np.ndarray:
    """Binary link-by-path incidence matrix."""
    delta = np.zeros((network.n_links, network.n_paths))
    for p in range(network.n_paths):
        delta[network.path_link_indices(p), p] = 1.0
    delta.setflags(write=False)
    return delta


def validate(network: Network) -> list[str]:
    """Check structural invariants; returns one message per violation.

    Links not used by any path trigger a ``UserWarning`` but are not errors.
    """
    errors: list[str] = []
    link_ids = set()
    for l in network.links:
        if l.id in link_ids:
            errors.append(f"link {l.id}: duplicate link id")
        link_ids.add(l.id)
        if not l.length > 0:
            errors.append(f"link {l.id}: length must be positive")
        if not l.capacity > 0:
            errors.append(f"link {l.id}: capacity must be positive")
        if not l.free_flow_speed > 0:
            errors.append(f"link {l.id}: free_flow_speed must be positive")
        if l.jam_density is not None and l.free_flow_speed > 0 \
                and not l.jam_density > l.critical_density:
            errors.append(f"link {l.id}: jam_density must exceed critical density")
        if l.bpr_gamma < 0:
            errors.append(f"link {l.id}: bpr_gamma must be nonnegative")

    od_by_id = {od.id: od for od in network.ods}
    path_ids = set()
    for path in network.paths:
        if path.id in path_ids:
            errors.append(f"path {path.id}: duplicate path id")
        path_ids.add(path.id)
        missing = [l for l in path.links if l not in link_ids]
        if missing:
            errors.append(f"path {path.id}: unknown link ids {missing}")
            continue
        if not path.links:
            errors.append(f"path {path.id}: path has no links")
            continue
        if len(set(path.links)) != len(path.links):
            errors.append(f"path {path.id}: path repeats a link")
        seq = [network.link(l) for l in path.links]
        for a, b in zip(seq, seq[1:]):
            if a.to_node != b.from_node:
                errors.append(f"path {path.id}: path not connected (link {a.id} -> link {b.id})")
        od = od_by_id.get(path.od)
        if od is None:
            errors.append(f"path {path.id}: unknown OD {path.od}")
            continue
        if seq[0].from_node != od.origin_node:
            errors.append(f"path {path.id}: does not start at origin node {od.origin_node}")
        if seq[-1].to_node != od.destination_node:
            errors.append(f"path {path.id}: does not end at destination node {od.destination_node}")

    grids = set()
    for od in network.ods:
        if not od.paths:
            errors.append(f"od {od.id}: OD has no paths")
        for pid in od.paths:
            if pid not in path_ids:
                errors.append(f"od {od.id}: unknown path id {pid}")
            elif network.path(pid).od != od.id:
                errors.append(f"od {od.id}: path {pid} belongs to OD {network.path(pid).od}")
        d = od.demand
        if np.any(d.values < 0) or not np.all(np.isfinite(d.values)):
            errors.append(f"od {od.id}: demand must be finite and nonnegative")
        try:
            n = _grid_steps(d.dt, d.horizon)
            if n != d.n_steps:
                errors.append(f"od {od.id}: demand length {d.n_steps} != horizon/dt = {n}")
        except ValueError as exc:
            errors.append(f"od {od.id}: {exc}")
        grids.add((d.dt, d.horizon))
    if len(grids) > 1:
        errors.append("network: OD demand profiles use different time grids")
    if not network.ods:
        errors.append("network: no OD pairs")

    if not errors:
        used = {l for p in network.paths for l in p.links}
        unused = [l.id for l in network.links if l.id not in used]
        if unused:
            warnings.warn(f"links not on any path: {unused}", stacklevel=2)
    return errors


def paper_network(gamma: float = 0.15, d0: float = 1300.0, d1: float = 300.0,
                  dt: float = 5.0, horizon: float = 600.0,
                  demand_end: float | None = 300.0,
                  jam_density: float | None = 140.0) -> Network:
    """Six-link, two-OD test network with two routes for OD 0.

    Node ids are inferred from the path lists: links 0 and 1 leave the two
    sources and meet at node 2, links 2 (400 m) and 3 run in parallel from
    node 2 to node 3, then link 4 and the 1000 veh/hr link 5 lead to sink 5.
    ``demand_end=None`` keeps the demand constant over the horizon.
    """
    rows = [  # id, from, to, length, capacity
        (0, 0, 2, 200.0, 2000.0),
        (1, 1, 2, 200.0, 2000.0),
        (2, 2, 3, 400.0, 2000.0),
        (3, 2, 3, 200.0, 2000.0),
        (4, 3, 4, 200.0, 2000.0),
        (5, 4, 5, 200.0, 1000.0),
    ]
    links = [Link(i, a, b, length, cap, 70.0, jam_density, gamma)
             for i, a, b, length, cap in rows]
    paths = [Path(1, (0, 3, 4, 5), 0), Path(2, (0, 2, 4, 5), 0), Path(3, (1, 3, 4, 5), 1)]

    def profile(rate):
        if demand_end is None:
            return DemandProfile.constant(rate, dt, horizon)
        return DemandProfile.from_breakpoints([(0.0, rate), (demand_end, 0.0)], dt, horizon)

    ods = [ODPair(0, 0, 5, (1, 2), profile(d0)), ODPair(1, 1, 5, (3,), profile(d1))]
    return Network(links, ods, paths)
