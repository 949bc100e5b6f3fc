"""Distance-to-equilibrium measures over time."""

from __future__ import annotations

import numpy as np

from .models import StateTrajectory
from .network import Network


def min_path_cost(c, network: Network, od: int) -> np.ndarray:
    """Cheapest path cost of OD position ``od`` at every step."""
    idx = network.od_path_indices()[od]
    return np.asarray(c, dtype=float)[idx].min(axis=0)


def wardrop_distance_flow(h, c, network: Network) -> np.ndarray:
    """Per-step complementarity excess ``sum_w sum_p h_p (c_p - pi_w)``.

    Zero exactly when every used path is a cheapest path of its OD.
    Units: veh/hr times seconds.
    """
    h = np.asarray(h, dtype=float)
    c = np.asarray(c, dtype=float)
    total = np.zeros(h.shape[1])
    for w, idx in enumerate(network.od_path_indices()):
        pi = c[idx].min(axis=0)
        total += np.sum(h[idx] * (c[idx] - pi), axis=0)
    return total


def wardrop_distance_state(traj: StateTrajectory, reference: StateTrajectory) -> np.ndarray:
    """Per-step sum over links of the Euclidean norm of the per-path state difference.

    Uses the state at the start of each step, like the link travel times.
    """
    if traj.x.shape != reference.x.shape or traj.dt != reference.dt:
        raise ValueError(f"trajectory grids differ: {traj.x.shape}/{traj.dt} "
                         f"vs {reference.x.shape}/{reference.dt}")
    diff = reference.x[..., :-1] - traj.x[..., :-1]
    return np.sqrt(np.sum(diff * diff, axis=1)).sum(axis=0)


def time_integral(series, dt: float) -> float:
    """Left Riemann sum of a per-step series."""
    return float(np.sum(series) * dt)
