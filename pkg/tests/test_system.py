import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from hamobs.errors import DimensionError, InsufficientHistoryError
from hamobs.estimator import pure_state
from hamobs.system import (
    ControlField,
    MeasurementModel,
    OutputHistory,
    QuantumSystem,
    Tone,
    dipole_from_theta,
    field_value,
    level_pairs,
    measured_output,
    pair_label,
    populations,
    steps_in,
    theta_from_dipole,
    true_rhs,
)


def two_level(theta=1.0):
    return QuantumSystem(np.diag([0.5, -0.5]), dipole_from_theta([theta], 2), (0,))


def test_level_pairs_and_labels():
    assert level_pairs(3) == [(0, 1), (0, 2), (1, 2)]
    assert [pair_label(l, k) for l, k in level_pairs(3)] == ["12", "13", "23"]
    assert pair_label(0, 10) == "1_11"


def test_theta_dipole_roundtrip():
    mu = dipole_from_theta([1.3, 1.0, -1.5], 3)
    assert mu[0, 1] == mu[1, 0] == 1.3 and mu[1, 2] == -1.5
    assert np.array_equal(theta_from_dipole(mu), [1.3, 1.0, -1.5])
    with pytest.raises(DimensionError):
        dipole_from_theta([1.0, 2.0], 3)


def test_system_validation():
    mu = dipole_from_theta([1.0], 2)
    with pytest.raises(ValueError):
        QuantumSystem(np.array([[0, 1], [0, 0]]), mu, (0,))
    with pytest.raises(ValueError):
        QuantumSystem(np.eye(2), np.array([[1, 1], [1, 0]]), (0,))
    with pytest.raises(ValueError):
        QuantumSystem(np.eye(2), np.array([[0, 1j], [-1j, 0]]), (0,))
    with pytest.raises(ValueError):
        QuantumSystem(np.eye(2), mu, (2,))
    with pytest.raises(DimensionError):
        QuantumSystem(np.eye(3), mu, (0,))


def test_system_properties():
    s = QuantumSystem.from_spectrum([0.0, 1.0, 3.0], [1.3, 1.0, -1.5])
    assert s.dim == 3 and s.is_diagonal
    assert s.measured == (0, 1, 2)
    assert np.array_equal(s.omega, [0, 1, 3])
    assert np.array_equal(s.transition_frequencies(), [1, 3, 2])
    assert np.array_equal(s.theta, [1.3, 1.0, -1.5])
    assert np.array_equal(two_level().measured_mask, [1, 0])


def test_from_spectrum_with_basis_change():
    u = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    s = QuantumSystem.from_spectrum([0.0, 2.0], [1.0], basis_change=u)
    assert not s.is_diagonal
    assert np.allclose(s.omega, [0, 2])


def test_control_field_values():
    f = ControlField((Tone(1.0, 1.0, "sin"), Tone(0.5, 2.0, "cos")))
    t = 0.7
    assert field_value(f, t) == pytest.approx(np.sin(t) + 0.5 * np.cos(2 * t), abs=1e-15)
    biased = ControlField((Tone(1.0, 1.0, "sin"),), amplitude_bias=0.03, noise_sigma=0.07)
    assert field_value(biased, t, w=1.0) == pytest.approx(1.03 * np.sin(t) + 0.07)
    assert field_value(biased.nominal(), t, w=1.0) == pytest.approx(np.sin(t))
    assert biased.max_frequency == 1.0


def test_control_field_rejects():
    with pytest.raises(ValueError):
        Tone(1.0, 1.0, "square")
    with pytest.raises(ValueError):
        ControlField((), noise_sigma=-1)
    with pytest.raises(ValueError):
        ControlField((), noise_hold=0.0)


def test_true_rhs_matches_commutator():
    s = two_level()
    f = ControlField((Tone(1.0, 1.0, "sin"),))
    rho = pure_state([0.6, 0.8j])
    t = 0.3
    k = s.hamiltonian + np.sin(t) * s.dipole
    assert np.allclose(true_rhs(rho, t, s, f), -1j * (k @ rho - rho @ k))
    with pytest.raises(DimensionError):
        true_rhs(np.eye(3), t, s, f)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(2, 5), seed=st.integers(0, 2 ** 32 - 1), t=st.floats(0, 100))
def test_true_rhs_preserves_trace_and_hermiticity(n, seed, t):
    rng = np.random.default_rng(seed)
    s = QuantumSystem.from_spectrum(rng.normal(size=n), rng.normal(size=n * (n - 1) // 2))
    f = ControlField((Tone(0.3, 1.0, "cos"),))
    rho = pure_state(random_state(rng, n))
    d = true_rhs(rho, t, s, f)
    assert abs(np.trace(d)) < 1e-12
    assert np.allclose(d, d.conj().T, atol=1e-12)
    # purity is conserved to first order
    assert abs(np.trace(rho @ d + d @ rho)) < 1e-12


def test_populations():
    assert np.allclose(populations(pure_state([0.6, 0.8])), [0.36, 0.64])


def test_output_history_delay():
    hist = OutputHistory(step=0.1, capacity=4)
    for j in range(4):
        hist.push(np.array([j, -j], dtype=float))
    assert np.array_equal(hist.delayed(0.0), [3, -3])
    assert np.array_equal(hist.delayed(0.3), [0, 0])
    with pytest.raises(InsufficientHistoryError):
        hist.delayed(0.4)
    with pytest.raises(ValueError):
        hist.delayed(0.15)


def test_measured_output_bias_noise():
    hist = OutputHistory(step=0.1, capacity=2)
    hist.push(np.array([0.25, 0.75]))
    model = MeasurementModel(bias=0.06, noise_sigma=0.07)
    assert np.allclose(measured_output(hist, model), [0.31, 0.81])
    assert np.allclose(measured_output(hist, model, noise=[1.0, -1.0]), [0.38, 0.74])


def test_measurement_model_rejects():
    with pytest.raises(ValueError):
        MeasurementModel(delay=-1)
    with pytest.raises(ValueError):
        MeasurementModel(sample_period=0)
    assert MeasurementModel().is_continuous
    assert not MeasurementModel(delay=0.3).is_continuous


def test_steps_in():
    assert steps_in(0.3, 0.001) == 300
    with pytest.raises(ValueError):
        steps_in(0.3, 0.007)
