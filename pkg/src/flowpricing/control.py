"""Feed-forward and feedback pricing controllers.

The controllers act on node prices ``zeta``.  Edge prices ``B^T zeta`` are
mapped to flows by the cost gradient inverses, and the edge weights of the
state-dependent Laplacian are the conjugate second derivatives at those edge
prices.  The key operator is

    Xi(zeta) = X(zeta)^T H(zeta)^{-1} B^T (B B^T)^+

with ``H`` the diagonal of conjugate second derivatives and ``X`` the
spanning-tree matrix built from ``H``.  It inverts ``L(zeta) = B H B^T`` on
balanced vectors: ``L Xi y = y`` whenever ``sum(y) == 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .costs import CostVector
from .dirichlet import build_x
from .exosystem import HarmonicExo
from .network import Network


@dataclass(frozen=True)
class ControllerConfig:
    gain: float = 10.0
    mean_pin: float = 0.0

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError(f"controller gain must be positive, got {self.gain}")


def _costs(costs) -> CostVector:
    return costs if isinstance(costs, CostVector) else CostVector(costs)


def edge_weights(net: Network, costs, zeta) -> np.ndarray:
    """Conjugate second derivatives at the edge prices ``B^T zeta``."""
    return _costs(costs).conjugate_second(net.incidence.T @ np.asarray(zeta, dtype=float))


def state_laplacian(net: Network, costs, zeta) -> np.ndarray:
    B = net.incidence
    return (B * edge_weights(net, costs, zeta)) @ B.T


def residual_z(net: Network, costs, zeta, p) -> np.ndarray:
    """``B grad P^{-1}(B^T zeta) + p``; zero exactly on optimal prices."""
    B = net.incidence
    return B @ _costs(costs).gradient_inverse(B.T @ np.asarray(zeta, dtype=float)) + np.asarray(p, dtype=float)


def xi_from_weights(net: Network, h) -> np.ndarray:
    X = build_x(net, h).entries
    return (X.T / h) @ net.preimage_map


def xi_matrix(net: Network, costs, zeta) -> np.ndarray:
    return xi_from_weights(net, edge_weights(net, costs, zeta))


def project_mean(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v - v.mean()


def feedforward_output(net: Network, costs, zeta) -> np.ndarray:
    return _costs(costs).gradient_inverse(net.incidence.T @ np.asarray(zeta, dtype=float))


def feedforward_rhs(net: Network, costs, exo: HarmonicExo, zeta, w, project: bool = True) -> np.ndarray:
    """Price derivative keeping ``zeta`` optimal as the supply moves.

    ``-Xi(zeta) pdot`` solves ``L(zeta) zeta_dot = -pdot``.  Its mean is not
    zero in general, so by default the result is projected onto balanced
    vectors.  The projection does not change ``L zeta_dot`` or the flows.
    """
    rate = -xi_matrix(net, costs, zeta) @ exo.output_derivative(w)
    return project_mean(rate) if project else rate


def feedback_output(net: Network, costs, zeta, x) -> np.ndarray:
    return feedforward_output(net, costs, zeta) - net.incidence.T @ np.asarray(x, dtype=float)


def feedback_rhs(net: Network, costs, exo: HarmonicExo, cfg: ControllerConfig, zeta, x, w) -> np.ndarray:
    """``-Q Xi(zeta) (pdot + x + k Z(zeta, p))``."""
    costs = _costs(costs)
    zeta = np.asarray(zeta, dtype=float)
    B = net.incidence
    edge_prices = B.T @ zeta
    h = costs.conjugate_second(edge_prices)
    Z = B @ costs.gradient_inverse(edge_prices) + exo.output(w)
    drive = exo.output_derivative(w) + np.asarray(x, dtype=float) + cfg.gain * Z
    return -project_mean(xi_from_weights(net, h) @ drive)
