import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from flowpricing.costs import CostDomainError, LogCosBarrier, QuadraticCost, cost_from_spec

FAMILIES = [
    QuadraticCost(0.2, 2.0),
    QuadraticCost(10.0, 0.0),
    QuadraticCost(1.3, -0.7),
    LogCosBarrier(0.1, 4.0),
    LogCosBarrier(2.5, 0.3),
]


def _flows(cost, rng, size=1000):
    bound = cost.capacity if math.isfinite(cost.capacity) else 50.0
    return rng.uniform(-0.999 * bound, 0.999 * bound, size)


def test_quadratic_minimum():
    assert QuadraticCost(0.2, 2.0).value(2.0) == 0.0
    assert QuadraticCost(0.7, 2.0).gradient_inverse(0.0) == 2.0


def test_logcos_values():
    cost = LogCosBarrier(0.1, 4.0)
    assert cost.value(0.0) == 0.0
    expected = -0.1 * (8 / math.pi) * math.log(math.cos(math.pi / 4))
    assert cost.value(2.0) == pytest.approx(expected, rel=1e-14)
    # cost is the integral of its gradient from 0
    integral, _ = quad(lambda s: float(cost.gradient(s)), 0.0, 2.0, epsabs=1e-13)
    assert cost.value(2.0) == pytest.approx(integral, rel=1e-10)


def test_logcos_gradient_inverse_closed_form():
    cost = LogCosBarrier(0.1, 4.0)
    z = np.linspace(-5, 5, 41)
    np.testing.assert_allclose(cost.gradient_inverse(z), (8 / math.pi) * np.arctan(z / 0.1), rtol=1e-15)
    assert cost.gradient_inverse(1e300) <= 4.0 and cost.gradient_inverse(-1e300) >= -4.0
    assert cost.gradient_inverse(1e6) == pytest.approx(4.0, abs=1e-5)
    assert abs(cost.gradient_inverse(1e6)) < 4.0


def test_domain_error():
    cost = LogCosBarrier(0.1, 4.0)
    with pytest.raises(CostDomainError):
        cost.value(4.0)
    with pytest.raises(CostDomainError):
        cost.gradient(-4.5)


@pytest.mark.parametrize("cost", FAMILIES, ids=repr)
def test_round_trip(cost):
    lam = _flows(cost, np.random.default_rng(1))
    assert np.abs(cost.gradient_inverse(cost.gradient(lam)) - lam).max() <= 1e-9


@pytest.mark.parametrize("cost", FAMILIES, ids=repr)
def test_conjugate_second_matches_finite_differences(cost):
    z = np.random.default_rng(2).uniform(-50, 50, 1000) * (getattr(cost, "c", 1.0))
    step = 1e-5 * np.maximum(1.0, np.abs(z))
    fd = (cost.gradient_inverse(z + step) - cost.gradient_inverse(z - step)) / (2 * step)
    rel = np.abs(fd - cost.conjugate_second(z)) / np.abs(cost.conjugate_second(z))
    assert rel.max() <= 1e-5
    assert np.all(cost.conjugate_second(z) > 0)


@pytest.mark.parametrize("cost", FAMILIES, ids=repr)
def test_conjugate_is_legendre_transform(cost):
    z = np.random.default_rng(3).uniform(-3, 3, 50)
    lam = cost.gradient_inverse(z)
    np.testing.assert_allclose(cost.conjugate(z), z * lam - cost.value(lam), rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("cost", [c for c in FAMILIES if math.isfinite(c.capacity)], ids=repr)
def test_barrier_blow_up(cost):
    ell = np.arange(1, 41)
    grads = np.abs(cost.gradient(cost.capacity * (1 - 2.0**-ell)))
    assert np.all(np.diff(grads) > 0)
    assert grads.max() > 1e6


@pytest.mark.parametrize("cost", FAMILIES, ids=repr)
def test_strictly_convex(cost):
    bound = cost.capacity if math.isfinite(cost.capacity) else 100.0
    grid = np.linspace(-0.999 * bound, 0.999 * bound, 2001)
    assert np.all(np.diff(cost.gradient(grid)) > 0)


def test_cost_from_spec():
    assert cost_from_spec({"kind": "quadratic", "q": 2, "r": 1}) == QuadraticCost(2.0, 1.0)
    assert cost_from_spec({"kind": "logcos", "c": 0.1}, 4.0) == LogCosBarrier(0.1, 4.0)
    with pytest.raises(ValueError):
        cost_from_spec({"kind": "quadratic", "q": 1}, 3.0)
    with pytest.raises(ValueError):
        cost_from_spec({"kind": "cubic"})


finite = st.floats(-1e3, 1e3, allow_nan=False)
quadratics = st.builds(QuadraticCost, st.floats(0.05, 20), st.floats(-5, 5))
barriers = st.builds(LogCosBarrier, st.floats(0.01, 5), st.floats(0.1, 20))


@given(st.one_of(quadratics, barriers), finite)
def test_gradient_inverse_is_monotone_bijection(cost, z):
    lam = cost.gradient_inverse(z)
    assert abs(lam) < cost.capacity
    assert cost.gradient_inverse(z + 1.0) > lam
    assert float(cost.gradient(lam)) == pytest.approx(z, rel=1e-8, abs=1e-8 * (1 + abs(z)))


@given(st.one_of(quadratics, barriers), finite, finite)
def test_fenchel_young(cost, z, u):
    # P*(z) >= z lam - P(lam) for any admissible lam, equality at lam = grad P*(z)
    lam = float(cost.gradient_inverse(u))
    assert cost.conjugate(z) >= z * lam - cost.value(lam) - 1e-9 * (1 + abs(z * lam))
