"""Legendre-type edge costs.

Each family provides the cost, its gradient, the gradient inverse (which is
the gradient of the convex conjugate), the conjugate itself and the conjugate
second derivative.  The last one is the edge weight of the state-dependent
Laplacian.  Everything is vectorised over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class CostDomainError(ValueError):
    """Flow outside the open domain ``(-capacity, capacity)``."""


class LegendreCost:
    capacity: float = math.inf

    def value(self, lam):
        raise NotImplementedError

    def gradient(self, lam):
        raise NotImplementedError

    def gradient_inverse(self, z):
        raise NotImplementedError

    def conjugate(self, z):
        raise NotImplementedError

    def conjugate_second(self, z):
        raise NotImplementedError

    def _check_domain(self, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(np.abs(lam) >= self.capacity):
            raise CostDomainError(f"flow {lam} outside the open domain (-{self.capacity}, {self.capacity})")
        return lam


@dataclass(frozen=True)
class QuadraticCost(LegendreCost):
    """``q/2 (lam - r)^2`` with unbounded capacity."""

    q: float
    r: float = 0.0

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError(f"curvature q must be positive, got {self.q}")

    @property
    def capacity(self) -> float:
        return math.inf

    def value(self, lam):
        lam = np.asarray(lam, dtype=float)
        return 0.5 * self.q * (lam - self.r) ** 2

    def gradient(self, lam):
        return self.q * (np.asarray(lam, dtype=float) - self.r)

    def gradient_inverse(self, z):
        return np.asarray(z, dtype=float) / self.q + self.r

    def conjugate(self, z):
        z = np.asarray(z, dtype=float)
        return z * z / (2 * self.q) + self.r * z

    def conjugate_second(self, z):
        return np.full_like(np.asarray(z, dtype=float), 1.0 / self.q)


@dataclass(frozen=True)
class LogCosBarrier(LegendreCost):
    """``-c a log cos(lam / a)`` with ``a = 2 capacity / pi``.

    The gradient ``c tan(lam / a)`` blows up at ``+-capacity``.
    """

    c: float
    capacity: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"scale c must be positive, got {self.c}")
        if not (self.capacity > 0 and math.isfinite(self.capacity)):
            raise ValueError(f"barrier capacity must be finite and positive, got {self.capacity}")

    @property
    def a(self) -> float:
        return 2.0 * self.capacity / math.pi

    def value(self, lam):
        lam = self._check_domain(lam)
        return -self.c * self.a * np.log(np.cos(lam / self.a))

    def gradient(self, lam):
        lam = self._check_domain(lam)
        return self.c * np.tan(lam / self.a)

    def gradient_inverse(self, z):
        return self.a * np.arctan(np.asarray(z, dtype=float) / self.c)

    def conjugate(self, z):
        z = np.asarray(z, dtype=float)
        u = z / self.c
        return z * self.a * np.arctan(u) - 0.5 * self.a * self.c * np.log1p(u * u)

    def conjugate_second(self, z):
        z = np.asarray(z, dtype=float)
        return self.a * self.c / (self.c**2 + z * z)


def cost_from_spec(spec: dict, capacity: float = math.inf) -> LegendreCost:
    """Build a cost from a ``{"kind": ..., ...}`` mapping."""
    kind = spec.get("kind")
    if kind == "quadratic":
        if math.isfinite(capacity):
            raise ValueError("quadratic cost requires an unbounded edge capacity")
        return QuadraticCost(q=float(spec["q"]), r=float(spec.get("r", 0.0)))
    if kind == "logcos":
        cap = float(spec.get("capacity", capacity))
        if math.isfinite(capacity) and cap != capacity:
            raise ValueError(f"logcos capacity {cap} disagrees with edge capacity {capacity}")
        return LogCosBarrier(c=float(spec["c"]), capacity=cap)
    raise ValueError(f"unknown cost kind {kind!r} (expected 'quadratic' or 'logcos')")


class CostVector:
    """Edgewise evaluation of a list of costs, one per edge."""

    def __init__(self, costs):
        self.costs = tuple(costs)

    def __len__(self) -> int:
        return len(self.costs)

    def __iter__(self):
        return iter(self.costs)

    def __getitem__(self, k):
        return self.costs[k]

    @property
    def capacities(self) -> np.ndarray:
        return np.array([c.capacity for c in self.costs])

    def _map(self, method, arr):
        arr = np.asarray(arr, dtype=float)
        return np.array([float(getattr(c, method)(x)) for c, x in zip(self.costs, arr)])

    def value(self, lam) -> float:
        return math.fsum(self._map("value", lam))

    def gradient(self, lam) -> np.ndarray:
        return self._map("gradient", lam)

    def gradient_inverse(self, z) -> np.ndarray:
        return self._map("gradient_inverse", z)

    def conjugate(self, z) -> float:
        return math.fsum(self._map("conjugate", z))

    def conjugate_second(self, z) -> np.ndarray:
        return self._map("conjugate_second", z)
