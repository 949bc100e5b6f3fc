"""Fixed-point equilibrium solvers: Frank-Wolfe, MSA, and the extra-projection method.

Every solver alternates between the model (costs from an assignment) and an
update rule, stopping when the relative gap falls to ``eps``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .assignment import project
from .cost import ModelManager
from .models import ModelConfigError
from .network import Network

TIE_RTOL = 1e-9
STALL_WINDOW = 50
STALL_TOL = 1e-12
LINE_SEARCH_ITERS = 40

METHODS = ("fw", "msa", "epm", "msa_then_epm")


@dataclass(frozen=True)
class SolverConfig:
    method: str = "msa_then_epm"
    eps: float = 1e-4
    max_iters: int = 1000
    tau0: float = 10.0
    sigma: float = 0.5
    mu: float = 0.1
    msa_warmup_iters: int = 50

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown solver {self.method!r}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.tau0 > 0:
            raise ValueError("tau0 must be positive")
        if not (0 < self.sigma < 1 and 0 < self.mu < 1):
            raise ValueError("sigma and mu must lie in (0, 1)")


@dataclass
class Iteration:
    k: int
    relative_gap: float
    step: float  # FW alpha, MSA 1/k, EPM tau
    wall_time: float  # seconds since solve start


@dataclass
class SolverReport:
    iterations: list[Iteration]
    final_assignment: np.ndarray
    final_costs: np.ndarray
    converged: bool
    termination_reason: str  # gap_met | max_iters | stalled
    n_evaluations: int = 0
    wall_time: float = 0.0
    method: str = ""

    @property
    def gap(self) -> float:
        return self.iterations[-1].relative_gap


def all_or_nothing(c, network: Network, rtol: float = TIE_RTOL) -> np.ndarray:
    """Send each OD's demand to its cheapest path(s), splitting ties evenly."""
    c = np.asarray(c, dtype=float)
    y = np.zeros_like(c)
    demand = network.demand_matrix()
    for w, idx in enumerate(network.od_path_indices()):
        block = c[idx]
        cmin = block.min(axis=0)
        ties = block <= cmin + rtol * np.abs(cmin)
        y[idx] = ties * (demand[w] / ties.sum(axis=0))
    return y


def inner(a, b, dt: float = 1.0) -> float:
    """Inner product over (path, timestep), each cell weighted by ``dt``."""
    return float(np.sum(np.asarray(a) * np.asarray(b)) * dt)


def relative_gap(c, h, y) -> float:
    """``|<c, y - h>| / <y, c>``; zero when there is no demand."""
    den = inner(y, c)
    if den == 0:
        return 0.0
    return abs(inner(c, np.asarray(y) - np.asarray(h))) / den


def free_flow_costs(network: Network) -> np.ndarray:
    return np.repeat(network.free_flow_path_times()[:, None], network.n_steps, axis=1)


def initial_assignment(network: Network) -> np.ndarray:
    return all_or_nothing(free_flow_costs(network), network)


def beckmann_objective(h, manager: ModelManager) -> float:
    """Sum over links and steps of the integral of BPR time up to the link flow."""
    f = manager.delta @ np.asarray(h, dtype=float)
    total = 0.0
    for l, link in enumerate(manager.network.links):
        t0, g, cap = link.free_flow_travel_time, link.bpr_gamma, link.capacity
        total += float(np.sum(t0 * (f[l] + g * f[l] ** 5 / (5 * cap ** 4))))
    return total


class _Log:
    def __init__(self):
        self.start = time.perf_counter()
        self.iterations: list[Iteration] = []

    def add(self, gap: float, step: float) -> None:
        self.iterations.append(Iteration(len(self.iterations) + 1, gap, step,
                                         time.perf_counter() - self.start))

    def stalled(self) -> bool:
        if len(self.iterations) <= STALL_WINDOW:
            return False
        recent = [it.relative_gap for it in self.iterations[-STALL_WINDOW - 1:]]
        return max(recent) - min(recent) <= STALL_TOL

    def report(self, h, c, reason, manager, method) -> SolverReport:
        return SolverReport(self.iterations, h, c, reason == "gap_met", reason,
                            manager.n_evaluations, time.perf_counter() - self.start, method)


def _line_search(manager: ModelManager, h, d) -> float:
    """Exact Beckmann line search by bisection on its derivative along ``d``."""
    def slope(a):
        return float(np.sum(manager(h + a * d) * d))

    if slope(1.0) <= 0:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(LINE_SEARCH_ITERS):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def fw_solve(manager: ModelManager, eps: float = 1e-4, max_iters: int = 1000,
             initial=None) -> SolverReport:
    """Frank-Wolfe with exact line search; requires the static model."""
    if not manager.is_static:
        raise ModelConfigError("FW requires static model")
    net = manager.network
    h = initial_assignment(net) if initial is None else np.array(initial, dtype=float)
    log = _Log()
    step = 0.0
    for _ in range(max_iters):
        c = manager(h)
        y = all_or_nothing(c, net)
        log.add(relative_gap(c, h, y), step)
        if log.iterations[-1].relative_gap <= eps:
            return log.report(h, c, "gap_met", manager, "fw")
        if log.stalled():
            return log.report(h, c, "stalled", manager, "fw")
        d = y - h
        step = _line_search(manager, h, d)
        h = h + step * d
    c = manager(h)
    gap = relative_gap(c, h, all_or_nothing(c, net))
    log.add(gap, step)
    return log.report(h, c, "gap_met" if gap <= eps else "max_iters", manager, "fw")


def msa_solve(manager: ModelManager, eps: float = 1e-4, max_iters: int = 1000,
              initial=None, _log: _Log | None = None) -> SolverReport:
    """Method of successive averages, ``h <- (1 - 1/k) h + (1/k) y``."""
    net = manager.network
    h = initial_assignment(net) if initial is None else np.array(initial, dtype=float)
    log = _log or _Log()
    step = 0.0
    for k in range(1, max_iters + 1):
        c = manager(h)
        y = all_or_nothing(c, net)
        log.add(relative_gap(c, h, y), step)
        if log.iterations[-1].relative_gap <= eps:
            return log.report(h, c, "gap_met", manager, "msa")
        if log.stalled():
            return log.report(h, c, "stalled", manager, "msa")
        step = 1.0 / k
        h = (1.0 - step) * h + step * y
    c = manager(h)
    gap = relative_gap(c, h, all_or_nothing(c, net))
    log.add(gap, step)
    return log.report(h, c, "gap_met" if gap <= eps else "max_iters", manager, "msa")


def epm_solve(manager: ModelManager, eps: float = 1e-4, max_iters: int = 1000,
              tau0: float = 10.0, sigma: float = 0.5, mu: float = 0.1,
              initial=None, _log: _Log | None = None) -> SolverReport:
    """Extra-projection (extragradient) method with gap-monitored step shrinking.

    ``tau`` shrinks by ``sigma`` whenever an iteration fails to reduce the gap
    and the gap moved by more than ``mu`` relative to its previous value.
    """
    net = manager.network
    h = initial_assignment(net) if initial is None else np.array(initial, dtype=float)
    log = _log or _Log()
    tau = tau0
    c = manager(h)
    gap = relative_gap(c, h, all_or_nothing(c, net))
    for _ in range(max_iters):
        log.add(gap, tau)
        if gap <= eps:
            return log.report(h, c, "gap_met", manager, "epm")
        if log.stalled():
            return log.report(h, c, "stalled", manager, "epm")
        z = project(h - tau * c, net)
        h_next = project(h - tau * manager(z), net)
        c_next = manager(h_next)
        gap_next = relative_gap(c_next, h_next, all_or_nothing(c_next, net))
        if gap_next >= gap and gap > 0 and abs(gap_next - gap) / gap > mu:
            tau *= sigma
        h, c, gap = h_next, c_next, gap_next
    log.add(gap, tau)
    return log.report(h, c, "gap_met" if gap <= eps else "max_iters", manager, "epm")


def solve(manager: ModelManager, config: SolverConfig = SolverConfig(), initial=None) -> SolverReport:
    """Run the configured method; ``msa_then_epm`` warm-starts EPM from MSA."""
    if config.method == "fw":
        return fw_solve(manager, config.eps, config.max_iters, initial)
    if config.method == "msa":
        return msa_solve(manager, config.eps, config.max_iters, initial)
    if config.method == "epm":
        return epm_solve(manager, config.eps, config.max_iters, config.tau0,
                         config.sigma, config.mu, initial)
    log = _Log()
    warm = msa_solve(manager, config.eps, min(config.msa_warmup_iters, config.max_iters),
                     initial, _log=log)
    if warm.converged:
        warm.method = "msa_then_epm"
        return warm
    # the warm-up's final record is re-logged by EPM's first iteration
    log.iterations.pop()
    remaining = max(config.max_iters - len(log.iterations), 1)
    report = epm_solve(manager, config.eps, remaining, config.tau0, config.sigma,
                       config.mu, warm.final_assignment, _log=log)
    report.method = "msa_then_epm"
    return report
