"""Analytic solution of ``(B H B^T) z = B v`` through spanning-tree weights.

For a positive diagonal ``H = diag(h)`` the matrix ``X`` (edges by nodes) has

    X[k, i] = (1 / hbar) * sum of h(T) over spanning trees T that contain
              edge k and in which node i lies on the tail side of k

where ``h(T)`` is the product of the tree's edge weights and ``hbar`` is the
sum of all tree weights.  Then ``z = X^T H^{-1} v`` solves the system.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np

from .network import TREE_COUNT_LIMIT, Network, SpanningTree, spanning_trees, tree_components

KAHAN_THRESHOLD = 1000

# edges (1,0), (2,1), (0,2): the three-inventory example orientation
TRIANGLE_EDGES = ((1, 0), (2, 1), (0, 2))


@dataclass(frozen=True)
class XMatrix:
    entries: np.ndarray
    tree_weight_sum: float


@dataclass(frozen=True)
class TreeStructure:
    """Topology-only data reused for every weight vector."""

    trees: tuple[SpanningTree, ...]
    membership: np.ndarray  # (trees, m) bool: edge in tree
    tail_side: np.ndarray  # (trees, m, n) float: edge in tree and node on its tail side


_structures: "weakref.WeakKeyDictionary[Network, TreeStructure]" = weakref.WeakKeyDictionary()


def tree_structure(net: Network, limit: int = TREE_COUNT_LIMIT) -> TreeStructure:
    cached = _structures.get(net)
    if cached is not None:
        return cached
    trees = tuple(spanning_trees(net, limit=limit))
    m, n = net.edge_count, net.node_count
    membership = np.zeros((len(trees), m), dtype=bool)
    tail_side = np.zeros((len(trees), m, n))
    for t, tree in enumerate(trees):
        for k in tree.edge_indices:
            membership[t, k] = True
            for i in tree_components(net, tree, k):
                tail_side[t, k, i] = 1.0
    structure = TreeStructure(trees, membership, tail_side)
    _structures[net] = structure
    return structure


def tree_weight(tree: SpanningTree, h) -> float:
    h = np.asarray(h, dtype=float)
    return float(np.prod(h[sorted(tree.edge_indices)]))


def _check_weights(h, m) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape != (m,):
        raise ValueError(f"expected {m} edge weights, got shape {h.shape}")
    if np.any(h <= 0):
        raise ValueError("edge weights must be strictly positive")
    return h


def _kahan_sum(weights: np.ndarray, terms: np.ndarray) -> np.ndarray:
    total = np.zeros(terms.shape[1:])
    comp = np.zeros_like(total)
    for w, term in zip(weights, terms):
        y = w * term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def triangle_x(h) -> XMatrix:
    """Closed form of ``X`` for the triangle with orientation ``TRIANGLE_EDGES``."""
    h1, h2, h3 = (float(x) for x in h)
    hbar = h1 * h2 + h2 * h3 + h1 * h3
    X = np.array(
        [
            [0.0, h1 * h3 + h1 * h2, h1 * h2],
            [h2 * h3, 0.0, h2 * h3 + h1 * h2],
            [h2 * h3 + h1 * h3, h1 * h3, 0.0],
        ]
    )
    return XMatrix(X / hbar, hbar)


def build_x(net: Network, h, fast_path: bool = True, limit: int = TREE_COUNT_LIMIT) -> XMatrix:
    h = _check_weights(h, net.edge_count)
    if fast_path and net.node_count == 3 and net.edges == TRIANGLE_EDGES:
        return triangle_x(h)
    st = tree_structure(net, limit=limit)
    weights = np.prod(np.where(st.membership, h, 1.0), axis=1)
    if len(weights) > KAHAN_THRESHOLD:
        hbar = float(_kahan_sum(weights, np.ones((len(weights), 1)))[0])
        total = _kahan_sum(weights, st.tail_side)
    else:
        hbar = float(weights.sum())
        total = np.einsum("t,tki->ki", weights, st.tail_side)
    return XMatrix(total / hbar, hbar)


def solve_dirichlet(net: Network, h, v, fast_path: bool = True) -> np.ndarray:
    """Return ``z = X^T H^{-1} v``, a solution of ``(B diag(h) B^T) z = B v``."""
    h = _check_weights(h, net.edge_count)
    v = np.asarray(v, dtype=float)
    X = build_x(net, h, fast_path=fast_path).entries
    return X.T @ (v / h)
