import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from flowpricing.exosystem import HarmonicExo, Reset
from flowpricing.sim import step_rk4

from conftest import triangle_exo, triangle_network


def test_derivative_examples():
    exo = HarmonicExo([1.0], [2.0], [0.0], [[1.0], [-1.0]])
    np.testing.assert_array_equal(exo.derivative(np.zeros(2)), 0)
    np.testing.assert_array_equal(exo.derivative([0.0, 1.0]), [2.0, 0.0])
    w = np.random.default_rng(0).normal(size=2)
    # d/dt (s^2 + c^2) = 2 s sdot + 2 c cdot = 0
    assert abs(2 * w @ exo.derivative(w)) < 1e-15


def test_initial_output_example():
    net = triangle_network()
    exo = triangle_exo(net)
    expected = net.incidence @ np.array([2 * np.sin(0.0), 4 * np.sin(2.0), 4 * np.sin(3.14)])
    np.testing.assert_allclose(exo.output(exo.initial_state()), expected, atol=1e-15)


def test_zero_amplitudes():
    net = triangle_network()
    exo = HarmonicExo(np.zeros(3), [2.0, 4.0, 8.0], [0.0, 2.0, 3.14], net.incidence)
    assert np.all(exo.output(exo.initial_state()) == 0)


def test_output_balanced_for_random_states():
    exo = triangle_exo(triangle_network())
    for w in np.random.default_rng(1).normal(size=(1000, 6)) * 3:
        assert abs(exo.output(w).sum()) <= 1e-13


def test_unbalanced_mixing_rejected():
    with pytest.raises(ValueError, match="balanced"):
        HarmonicExo([1.0], [1.0], [0.0], [[1.0], [0.0]])


def test_output_derivative_single_channel():
    exo = HarmonicExo([1.0], [1.0], [0.0], [[1.0], [-1.0]])
    np.testing.assert_allclose(exo.output_derivative(exo.initial_state()), [1.0, -1.0])
    assert np.all(exo.output_derivative(np.zeros(2)) == 0)


def test_output_derivative_finite_difference():
    exo = triangle_exo(triangle_network(), resets=())
    step = 1e-6
    fd = (exo.output(exo.phasor(1 + step)) - exo.output(exo.phasor(1 - step))) / (2 * step)
    np.testing.assert_allclose(exo.output_derivative(exo.phasor(1.0)), fd, atol=1e-6)


def test_reset_windows():
    exo = triangle_exo(triangle_network())
    w = exo.phasor(1.0)
    same, applied = exo.apply_resets(w, 0.5, 1.0)
    assert not applied and np.all(same == w)
    w3, applied = exo.apply_resets(w, 2.999, 3.0)
    assert len(applied) == 1
    phi = np.array([2.0, 4.0, 8.0])
    rho = np.array([4.0, 6.0, 2.0])
    np.testing.assert_allclose(w3, np.concatenate([np.sin(3 * phi + rho), np.cos(3 * phi + rho)]))
    _, again = exo.apply_resets(w3, 3.0, 3.001)
    assert not again


def test_unsorted_resets_rejected():
    with pytest.raises(ValueError):
        HarmonicExo([1.0], [1.0], [0.0], [[1.0], [-1.0]], (Reset(2.0, (0.0,)), Reset(1.0, (0.0,))))


def test_integrated_output_matches_closed_form():
    net = triangle_network()
    exo = triangle_exo(net)
    dt, w = 1e-3, exo.initial_state()
    bound = np.sum(exo.amplitudes * np.abs(exo.mixing).max(axis=0))
    norms0 = w[:3] ** 2 + w[3:] ** 2
    worst = 0.0
    for i in range(1, 10001):
        w = step_rk4(exo.derivative, w, dt)
        w, _ = exo.apply_resets(w, (i - 1) * dt, i * dt)
        if i % 50 == 0:
            p = exo.output(w)
            worst = max(worst, np.abs(p - exo.closed_form_output(i * dt)).max())
            assert abs(p.sum()) <= 1e-13
            assert np.abs(p).max() <= bound
    assert worst <= 1e-6
    assert np.abs(w[:3] ** 2 + w[3:] ** 2 - norms0).max() <= 1e-6



@given(st.floats(0, 20), arrays(float, 3, elements=st.floats(-10, 10)))
def test_phasor_balanced_and_bounded(t, phases):
    net = triangle_network()
    exo = HarmonicExo([2.0, 4.0, 4.0], [2.0, 4.0, 8.0], phases, net.incidence)
    w = exo.phasor(t)
    np.testing.assert_allclose(w[:3] ** 2 + w[3:] ** 2, 1.0, rtol=1e-14)
    p = exo.output(w)
    assert abs(p.sum()) <= 1e-13 and np.abs(p).max() <= 8.0 + 1e-12
    np.testing.assert_allclose(p, exo.closed_form_output(t), atol=1e-12)
