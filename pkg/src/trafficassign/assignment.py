"""Demand assignments, path costs, feasibility, and projection onto the feasible set.

Assignments and costs are arrays of shape ``(n_paths, n_steps)`` with paths in
network order. The feasible set is a product of scaled simplices, one per
(OD, timestep), so every operation here works block by block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Network

FEASIBILITY_TOL = 1e-6  # veh/hr


@dataclass(frozen=True)
class DemandAssignment:
    values: np.ndarray  # veh/hr, (path, step)
    dt: float

    @property
    def horizon(self) -> float:
        return self.values.shape[1] * self.dt


@dataclass(frozen=True)
class PathCosts:
    values: np.ndarray  # seconds, (path, step)
    dt: float


def _check_shape(h: np.ndarray, network: Network) -> None:
    expected = (network.n_paths, network.n_steps)
    if h.shape != expected:
        raise ValueError(f"assignment shape {h.shape} does not match network {expected}")


def feasibility_violation(h, network: Network) -> float:
    """Largest violation of nonnegativity or demand conservation, veh/hr."""
    h = np.asarray(h, dtype=float)
    _check_shape(h, network)
    worst = max(0.0, float(-h.min())) if h.size else 0.0
    demand = network.demand_matrix()
    for w, idx in enumerate(network.od_path_indices()):
        worst = max(worst, float(np.abs(h[idx].sum(axis=0) - demand[w]).max()))
    return worst


def is_feasible(h, network: Network, tol: float = FEASIBILITY_TOL) -> tuple[bool, float]:
    """Return ``(feasible, max_violation)``."""
    v = feasibility_violation(h, network)
    return v <= tol, v


def project_simplex(v: np.ndarray, total: float) -> np.ndarray:
    """Euclidean projection of each row of ``v`` onto ``{y >= 0, sum(y) = total}``.

    Sort-based method: find the largest ``rho`` with
    ``u_rho > (cumsum(u)_rho - total) / rho`` for ``u`` sorted descending,
    then shift by that threshold and clip.
    ``total`` may be a scalar or one value per row.
    """
    v = np.atleast_2d(np.asarray(v, dtype=float))
    total = np.broadcast_to(np.asarray(total, dtype=float), (v.shape[0],))
    n = v.shape[1]
    if n == 1:
        return total[:, None].copy()
    u = -np.sort(-v, axis=1)
    css = np.cumsum(u, axis=1) - total[:, None]
    ind = np.arange(1, n + 1)
    cond = u - css / ind > 0
    cond[:, 0] = True  # always holds exactly; rounding can lose it when total is tiny
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(v.shape[0]), rho] / (rho + 1)
    out = np.maximum(v - theta[:, None], 0.0)
    out[total <= 0] = 0.0  # degenerate simplex {0}
    return out


def project(point, network: Network) -> np.ndarray:
    """Nearest feasible assignment to ``point`` in the Euclidean norm."""
    x = np.asarray(point, dtype=float)
    _check_shape(x, network)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot project a point with non-finite entries")
    out = np.empty_like(x)
    demand = network.demand_matrix()
    for w, idx in enumerate(network.od_path_indices()):
        # rows of the block are timesteps, columns are the OD's paths
        out[idx] = project_simplex(x[idx].T, demand[w]).T
    return out
