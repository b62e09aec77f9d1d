import math

import hypothesis
import numpy as np
import pytest

from flowpricing.costs import LogCosBarrier, QuadraticCost
from flowpricing.exosystem import HarmonicExo, Reset
from flowpricing.network import Network

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.load_profile("default")

INF = math.inf

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def triangle_network(capacities=(INF, INF, 4.0)):
    return Network(3, ((1, 0), (2, 1), (0, 2)), capacities)


def triangle_costs():
    return [QuadraticCost(0.2, 2.0), QuadraticCost(10.0, 0.0), LogCosBarrier(0.1, 4.0)]


def triangle_exo(net, resets=((3.0, (4.0, 6.0, 2.0)),)):
    return HarmonicExo(
        [2.0, 4.0, 4.0], [2.0, 4.0, 8.0], [0.0, 2.0, 3.14], net.incidence, tuple(Reset(t, ph) for t, ph in resets)
    )


@pytest.fixture
def triangle():
    return triangle_network()


@pytest.fixture
def costs3():
    return triangle_costs()


@pytest.fixture
def exo3(triangle):
    return triangle_exo(triangle)


def random_connected(rng, n, extra_prob=None, capacities=None):
    """Random spanning tree plus random extra edges, random orientations."""
    order = rng.permutation(n)
    pairs = set()
    for idx in range(1, n):
        a, b = int(order[idx]), int(order[rng.integers(idx)])
        pairs.add((min(a, b), max(a, b)))
    p = rng.uniform(0.0, 0.7) if extra_prob is None else extra_prob
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) not in pairs and rng.random() < p:
                pairs.add((a, b))
    edges = []
    for a, b in sorted(pairs):
        edges.append((a, b) if rng.random() < 0.5 else (b, a))
    caps = capacities(len(edges)) if capacities is not None else (INF,) * len(edges)
    return Network(n, tuple(edges), tuple(caps))
