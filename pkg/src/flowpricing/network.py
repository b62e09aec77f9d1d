"""Oriented graphs: incidence matrix, cuts, spanning trees and Laplacian spectra.

Nodes are indexed ``0..n-1`` and edges ``0..m-1`` in the library API.  An edge
``(tail, head)`` carries a ``+1`` at its tail and ``-1`` at its head in the
incidence matrix.  Unbounded capacities are ``math.inf`` so that cut capacities
saturate exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

INF = math.inf

CUT_NODE_LIMIT = 16
TREE_COUNT_LIMIT = 10**6
PINV_CUTOFF = 1e-9


class NetworkError(ValueError):
    """Invalid network definition."""


class EnumerationLimitError(RuntimeError):
    """Raised when an exhaustive enumeration would exceed its configured cap."""


@dataclass(frozen=True)
class Cut:
    node_set: frozenset[int]
    positive_edges: tuple[int, ...]
    negative_edges: tuple[int, ...]
    capacity: float

    @property
    def edges(self) -> tuple[int, ...]:
        return tuple(sorted(self.positive_edges + self.negative_edges))


@dataclass(frozen=True)
class SpanningTree:
    edge_indices: frozenset[int]

    def __iter__(self):
        return iter(sorted(self.edge_indices))

    def __len__(self) -> int:
        return len(self.edge_indices)


@dataclass(frozen=True, eq=False)
class Network:
    """Connected oriented graph with per-edge capacities in ``(0, inf]``."""

    node_count: int
    edges: tuple[tuple[int, int], ...]
    capacities: tuple[float, ...] = field(default=())

    def __post_init__(self):
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        object.__setattr__(self, "edges", edges)
        caps = self.capacities if len(self.capacities) else (INF,) * len(edges)
        object.__setattr__(self, "capacities", tuple(float(c) for c in caps))
        n, m = self.node_count, len(edges)
        if n < 2:
            raise NetworkError(f"need at least 2 nodes, got {n}")
        if m < 1:
            raise NetworkError("need at least 1 edge")
        if len(self.capacities) != m:
            raise NetworkError(f"{len(self.capacities)} capacities for {m} edges")
        for k, (a, b) in enumerate(edges):
            if not (0 <= a < n and 0 <= b < n):
                raise NetworkError(f"edge {k} = {(a, b)} references a node outside 0..{n - 1}")
            if a == b:
                raise NetworkError(f"edge {k} is a self-loop on node {a}")
        for k, c in enumerate(self.capacities):
            if not c > 0:
                raise NetworkError(f"capacity of edge {k} must be positive, got {c}")
        if not _connected(n, edges):
            raise NetworkError("underlying undirected graph is not connected")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def incidence(self) -> np.ndarray:
        B = np.zeros((self.node_count, self.edge_count))
        for k, (a, b) in enumerate(self.edges):
            B[a, k] = 1.0
            B[b, k] = -1.0
        B.flags.writeable = False
        return B

    @cached_property
    def laplacian(self) -> np.ndarray:
        L = self.incidence @ self.incidence.T
        L.flags.writeable = False
        return L

    @cached_property
    def laplacian_pinv(self) -> np.ndarray:
        P = symmetric_pinv(self.laplacian)
        P.flags.writeable = False
        return P

    @cached_property
    def preimage_map(self) -> np.ndarray:
        """``B^T (B B^T)^+``: maps a balanced node vector to a flow producing it."""
        M = self.incidence.T @ self.laplacian_pinv
        M.flags.writeable = False
        return M

    def __repr__(self) -> str:
        return f"Network(n={self.node_count}, edges={list(self.edges)}, capacities={list(self.capacities)})"


def _connected(n: int, edges: Sequence[tuple[int, int]]) -> bool:
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    components = n
    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            components -= 1
    return components == 1


def incidence(net: Network) -> np.ndarray:
    """Node-by-edge incidence matrix (a fresh, writable copy)."""
    return np.array(net.incidence)


def symmetric_pinv(A: np.ndarray, cutoff: float = PINV_CUTOFF) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric matrix via eigendecomposition."""
    vals, vecs = np.linalg.eigh(A)
    inv = np.zeros_like(vals)
    keep = np.abs(vals) > cutoff
    inv[keep] = 1.0 / vals[keep]
    return (vecs * inv) @ vecs.T


def laplacian_pinv(net: Network) -> np.ndarray:
    return np.array(net.laplacian_pinv)


def algebraic_connectivity(net: Network) -> float:
    """Second-smallest eigenvalue of ``B B^T``."""
    return float(np.linalg.eigvalsh(net.laplacian)[1])


def cut_of(net: Network, node_set) -> Cut:
    S = frozenset(int(i) for i in node_set)
    pos, neg = [], []
    for k, (a, b) in enumerate(net.edges):
        if a in S and b not in S:
            pos.append(k)
        elif b in S and a not in S:
            neg.append(k)
    capacity = math.fsum(net.capacities[k] for k in pos + neg) if pos or neg else 0.0
    return Cut(S, tuple(pos), tuple(neg), capacity)


def cuts(net: Network, limit: int = CUT_NODE_LIMIT) -> list[Cut]:
    """All ``2**n - 2`` cuts induced by nonempty proper node subsets."""
    n = net.node_count
    if n > limit:
        raise EnumerationLimitError(f"cut enumeration over {n} nodes exceeds the limit of {limit}")
    out = []
    for mask in range(1, 2**n - 1):
        out.append(cut_of(net, (i for i in range(n) if mask >> i & 1)))
    return out


def matrix_tree_count(net: Network) -> int:
    """Number of spanning trees from the determinant of a reduced Laplacian."""
    L = net.laplacian[1:, 1:]
    sign, logdet = np.linalg.slogdet(L)
    return int(round(math.exp(logdet))) if sign > 0 else 0


def spanning_trees(net: Network, limit: int = TREE_COUNT_LIMIT) -> list[SpanningTree]:
    """Exhaustive spanning-tree list by include/exclude recursion over the edges.

    Including an edge contracts its endpoints (union-find); excluding deletes
    it, and a branch is abandoned as soon as the remaining edges can no longer
    connect the graph.
    """
    expected = matrix_tree_count(net)
    if expected > limit:
        raise EnumerationLimitError(f"graph has {expected} spanning trees, limit is {limit}")
    n, edges = net.node_count, net.edges
    m = len(edges)
    out: list[SpanningTree] = []

    def find(parent, i):
        while parent[i] != i:
            i = parent[i]
        return i

    def recurse(k, parent, chosen):
        if len(chosen) == n - 1:
            out.append(SpanningTree(frozenset(chosen)))
            return
        if m - k < n - 1 - len(chosen):
            return
        a, b = edges[k]
        ra, rb = find(parent, a), find(parent, b)
        if ra != rb:
            merged = list(parent)
            merged[ra] = rb
            recurse(k + 1, merged, chosen + [k])
        if _connected(n, [edges[j] for j in chosen] + list(edges[k + 1:])):
            recurse(k + 1, parent, chosen)

    recurse(0, list(range(n)), [])
    return out


def tree_components(net: Network, tree: SpanningTree, edge: int) -> frozenset[int]:
    """Nodes on the tail side of ``edge`` once it is removed from ``tree``.

    ``edge`` must belong to ``tree``.
    """
    if edge not in tree.edge_indices:
        raise ValueError(f"edge {edge} is not in the tree")
    adj: dict[int, list[int]] = {i: [] for i in range(net.node_count)}
    for k in tree.edge_indices:
        if k == edge:
            continue
        a, b = net.edges[k]
        adj[a].append(b)
        adj[b].append(a)
    start = net.edges[edge][0]
    seen = {start}
    stack = [start]
    while stack:
        i = stack.pop()
        for j in adj[i]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return frozenset(seen)


def infinite_edges_connected(net: Network) -> bool:
    inf_edges = [e for e, c in zip(net.edges, net.capacities) if math.isinf(c)]
    return _connected(net.node_count, inf_edges)


def complete_graph(n: int, capacity: float = INF) -> Network:
    edges = tuple(itertools.combinations(range(n), 2))
    return Network(n, edges, (capacity,) * len(edges))
