"""Independent reference implementations used only by the tests."""

from itertools import combinations

import numpy as np


def project_by_enumeration(v, total):
    """Euclidean projection onto {y >= 0, sum y = total} by trying every support.

    For a fixed support S the constrained minimizer is the shift
    y_S = v_S + (total - sum v_S) / |S|; the projection is the nonnegative
    candidate closest to v.
    """
    v = np.asarray(v, dtype=float)
    n = len(v)
    if total <= 0:
        return np.zeros(n)
    best, best_dist = None, np.inf
    for size in range(1, n + 1):
        for support in combinations(range(n), size):
            idx = list(support)
            y = np.zeros(n)
            y[idx] = v[idx] + (total - v[idx].sum()) / size
            if y.min() < -1e-12:
                continue
            dist = np.sum((y - v) ** 2)
            if dist < best_dist:
                best, best_dist = y, dist
    return best


def random_feasible(network, rng, concentration=1.0):
    """Random point of the feasible set: Dirichlet split of every OD demand."""
    demand = network.demand_matrix()
    h = np.zeros((network.n_paths, network.n_steps))
    for w, idx in enumerate(network.od_path_indices()):
        split = rng.dirichlet(np.full(len(idx), concentration), size=network.n_steps).T
        h[idx] = split * demand[w]
    return h


def fd_jacobian(F, h, step=1.0):
    """Forward-difference Jacobian of a vector map over a flattened assignment."""
    h = np.asarray(h, dtype=float)
    base = F(h).ravel()
    flat = h.ravel()
    J = np.empty((base.size, flat.size))
    for j in range(flat.size):
        e = flat.copy()
        e[j] += step
        J[:, j] = (F(e.reshape(h.shape)).ravel() - base) / step
    return J


def eq21_residual(h1, gamma, d0=1300.0, d1=300.0, cap=2000.0):
    """Equal-cost condition between the two OD-0 routes, relative to cap**4."""
    return (cap**4 + gamma * (2 * (d0 - h1) ** 4 - (d1 + h1) ** 4)) / cap**4


def first_equalization(c, dt, tol=2.0):
    """Time of the first step where |c1 - c2| < tol, or None."""
    hit = np.flatnonzero(np.abs(c[0] - c[1]) < tol)
    return None if hit.size == 0 else float(hit[0] * dt)


def eq21_root(gamma, d0=1300.0, d1=300.0, cap=2000.0):
    """Interior h1 balancing the two OD-0 routes, by bisection (residual decreases in h1).

    Returns ``d0`` when the residual is still positive there (corner solution).
    """
    lo, hi = 0.0, d0
    if eq21_residual(hi, gamma, d0, d1, cap) > 0:
        return d0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if eq21_residual(mid, gamma, d0, d1, cap) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
