"""Feasibility certificates and the static optimal distribution solver.

The static problem is ``min sum_k P_k(lam_k)  s.t.  B lam + p = 0``.  With
Legendre-type costs its optimal flows are ``lam = grad P^{-1}(B^T zeta)`` where
the prices ``zeta`` solve ``Z(zeta) = B grad P^{-1}(B^T zeta) + p = 0``.  The
solver runs a damped Newton iteration on ``Z``; the Jacobian is the state
Laplacian ``L(zeta)`` and the Newton step is ``-Xi(zeta) Z``.

Dual sign convention: ``dual_objective`` is the minimisation objective
``sum_k P*_k((B^T zeta)_k) + p^T zeta``.  At the optimum it equals minus the
primal optimum, so ``StaticSolution.dual_gap = |primal + dual|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .control import project_mean, residual_z, xi_from_weights
from .costs import CostVector
from .network import Cut, Network, cuts, infinite_edges_connected

BALANCE_TOL = 1e-10


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class InfiniteCapacityError(ValueError):
    """The min-infinity-norm flow value needs every capacity finite."""


def supply_vector(p, n: int | None = None) -> np.ndarray:
    """Validate a balanced node supply vector."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or (n is not None and p.shape[0] != n):
        raise ValueError(f"supply must be a vector of length {n}, got shape {p.shape}")
    total = math.fsum(p)
    if abs(total) > BALANCE_TOL * max(1.0, float(np.abs(p).sum())):
        raise ValueError(f"supply is not balanced: sum = {total:.3e}")
    return p


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    epsilon: float
    worst_cut: Cut | None
    worst_margin: float
    margins: dict  # node_set -> capacity - |inflow|


def default_epsilon(net: Network) -> float:
    finite = [c for c in net.capacities if math.isfinite(c)]
    return 1e-6 * (max(finite) if finite else 1.0)


def cut_inflow(cut: Cut, p) -> float:
    return math.fsum(float(p[i]) for i in cut.node_set)


def check_cut_feasibility(net: Network, p, epsilon: float | None = None) -> FeasibilityReport:
    """Check ``|sum_{i in S} p_i| <= capacity(Q(S)) - epsilon`` for every cut."""
    p = supply_vector(p, net.node_count)
    eps = default_epsilon(net) if epsilon is None else float(epsilon)
    margins = {}
    worst, worst_margin = None, math.inf
    for cut in cuts(net):
        margin = cut.capacity - abs(cut_inflow(cut, p))
        margins[cut.node_set] = margin
        if worst is None or margin < worst_margin:
            worst, worst_margin = cut, margin
    return FeasibilityReport(worst_margin >= eps, eps, worst, worst_margin, margins)


def min_infnorm_flow_value(net: Network, p) -> float:
    """Optimal value of ``min ||Lambda^{-1} lam||_inf  s.t.  B lam = -p``.

    Computed from the cut side of the LP duality: the largest ratio of cut
    inflow to cut capacity.
    """
    if any(math.isinf(c) for c in net.capacities):
        raise InfiniteCapacityError("every capacity must be finite; substitute a large finite surrogate")
    p = supply_vector(p, net.node_count)
    return max(abs(cut_inflow(cut, p)) / cut.capacity for cut in cuts(net))


def check_spanning_tree_infinite(net: Network) -> bool:
    """True iff every cut has infinite capacity (an unbounded spanning tree exists)."""
    return infinite_edges_connected(net)


@dataclass(frozen=True)
class StaticSolution:
    flow: np.ndarray
    prices: np.ndarray
    kkt_residual: float
    dual_gap: float
    primal_value: float
    dual_value: float
    iterations: int


def dual_objective(net: Network, costs, p, zeta) -> float:
    costs = costs if isinstance(costs, CostVector) else CostVector(costs)
    zeta = np.asarray(zeta, dtype=float)
    return costs.conjugate(net.incidence.T @ zeta) + float(np.dot(p, zeta))


def kkt_residual(net: Network, costs, p, flow, zeta) -> float:
    costs = costs if isinstance(costs, CostVector) else CostVector(costs)
    B = net.incidence
    stationarity = np.abs(costs.gradient(flow) - B.T @ zeta).max()
    balance = np.abs(B @ flow + p).max()
    return float(max(stationarity, balance))


def _newton(net, costs, p, zeta, tol, max_iter):
    B = net.incidence
    zeta = project_mean(zeta)
    Z = residual_z(net, costs, zeta, p)
    merit = 0.5 * float(Z @ Z)
    for it in range(max_iter):
        if np.abs(Z).max() <= tol:
            return zeta, Z, it, True
        with np.errstate(over="ignore"):
            h = costs.conjugate_second(B.T @ zeta)
        if not np.all(np.isfinite(h) & (h > 0)):
            # Laplacian weights degenerate: prices have run off (typically infeasible supply)
            return zeta, Z, it, False
        step = -xi_from_weights(net, h) @ Z
        alpha = 1.0
        for _ in range(60):
            trial = project_mean(zeta + alpha * step)
            Zt = residual_z(net, costs, trial, p)
            mt = 0.5 * float(Zt @ Zt)
            # Armijo on 0.5 ||Z||^2; the Newton step's directional derivative is -||Z||^2
            if mt <= (1.0 - 2e-4 * alpha) * merit:
                break
            alpha *= 0.5
        else:
            return zeta, Z, it, False
        zeta, Z, merit = trial, Zt, mt
    return zeta, Z, max_iter, bool(np.abs(Z).max() <= tol)


def solve_static(net: Network, costs, p, tol: float = 1e-9, max_iter: int = 100, zeta0=None) -> StaticSolution:
    """Optimal flows and normalised prices (mean zero) for supply ``p``."""
    costs = costs if isinstance(costs, CostVector) else CostVector(costs)
    p = supply_vector(p, net.node_count)
    start = np.zeros(net.node_count) if zeta0 is None else np.asarray(zeta0, dtype=float)
    zeta, Z, iters, ok = _newton(net, costs, p, start, tol, max_iter)
    if not ok:
        # continuation in the supply magnitude
        zeta = np.zeros(net.node_count)
        for scale in np.linspace(0.1, 1.0, 10):
            zeta, Z, more, ok = _newton(net, costs, scale * p, zeta, tol, max_iter)
            iters += more
        if not ok:
            raise ConvergenceError("static solver did not converge", float(np.abs(Z).max()))
    flow = costs.gradient_inverse(net.incidence.T @ zeta)
    primal = costs.value(flow)
    dual = dual_objective(net, costs, p, zeta)
    return StaticSolution(
        flow=flow,
        prices=zeta,
        kkt_residual=kkt_residual(net, costs, p, flow, zeta),
        dual_gap=abs(primal + dual),
        primal_value=primal,
        dual_value=dual,
        iterations=iters,
    )
