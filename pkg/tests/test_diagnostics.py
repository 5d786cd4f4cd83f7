import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from hamobs.diagnostics import (
    check_identifiability,
    convergence_metrics,
    dissipation_term,
    effective_hamiltonian,
    eigenbasis_dipole,
    lyapunov_2level,
    lyapunov_N,
    lyapunov_rate_residual,
    rabi_analysis,
    two_level_rate,
    windowed_means,
)
from hamobs.errors import DimensionError
from hamobs.estimator import EstimatorState, GainConfig, full_estimator_rhs, pure_state
from hamobs.scenario import FOUR_LEVEL_H, FOUR_LEVEL_MU
from hamobs.system import ControlField, QuantumSystem, Tone, dipole_from_theta, true_rhs

MU3 = dipole_from_theta([1.3, 1.0, -1.5], 3)


def test_lyapunov_2level_examples():
    assert lyapunov_2level(0.3, 0.3, 1.0, 1.0, 0.1) == 0
    assert lyapunov_2level(0.4, 0.3, 1.0, 0.5, 0.1) == pytest.approx(1.255)
    with pytest.raises(ValueError):
        lyapunov_2level(0, 0, 0, 0, 0.0)


def test_lyapunov_N_examples():
    xi = pure_state(np.ones(3) / np.sqrt(3))
    th = np.array([1.3, 1.0, -1.5])
    assert lyapunov_N(xi, xi, th, th, 0.5) == 0
    assert lyapunov_N(xi, xi, th, th + [0.1, 0, 0], 0.5) == pytest.approx(0.04)
    with pytest.raises(DimensionError):
        lyapunov_N(xi, xi, th[:2], th[:2], 0.5)
    with pytest.raises(ValueError):
        lyapunov_N(xi, xi, th, th, [0.5, 0.0, 1.0])


def test_lyapunov_nonnegative_random():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        y, yh = rng.uniform(0, 1, 2)
        th, thh = rng.normal(size=2)
        assert lyapunov_2level(y, yh, th, thh, rng.uniform(0.01, 2)) >= 0
    for _ in range(2_000):
        n = int(rng.integers(2, 5))
        npairs = n * (n - 1) // 2
        xi, xih = (pure_state(random_state(rng, n)) for _ in range(2))
        v = lyapunov_N(xi, xih, rng.normal(size=npairs), rng.normal(size=npairs), rng.uniform(0.01, 2, npairs))
        assert v >= 0


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), t=st.floats(0, 50), th=st.floats(-3, 3), Gamma=st.floats(0.01, 3))
def test_two_level_rate_matches_chain_rule(seed, t, th, Gamma):
    rng = np.random.default_rng(seed)
    system = QuantumSystem(np.diag([0.5, -0.5]), dipole_from_theta([1.0], 2), (0,))
    field = ControlField((Tone(1.0, 1.0, "sin"),))
    rho, rho_hat = (pure_state(random_state(rng, 2)) for _ in range(2))
    u = np.sin(t)
    gamma = 0.1
    drho = true_rhs(rho, t, system, field)
    drh, dth = full_estimator_rhs(EstimatorState(rho_hat, [th]), np.diag(rho).real, u, system.hamiltonian,
                                  GainConfig(Gamma, gamma), measured=(0,))
    e = (rho[0, 0] - rho_hat[0, 0]).real
    chain = e * (drho[0, 0] - drh[0, 0]).real + (th - 1.0) * dth[0] / gamma
    assert two_level_rate(1.0, u, rho, rho_hat, Gamma) == pytest.approx(chain, abs=1e-12)


def test_dissipation_term_sign():
    rng = np.random.default_rng(0)
    assert np.all(dissipation_term(rng.normal(size=1000), rng.uniform(0, 1, 1000), 0.7) <= 0)


def test_rate_residual():
    t = np.linspace(0, 1, 11)
    assert lyapunov_rate_residual(t, np.ones(11), np.zeros(11)) == 0
    assert lyapunov_rate_residual(t, t ** 2, 2 * t) == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        lyapunov_rate_residual(t[:2], t[:2], t[:2])
    # halving the spacing quarters the residual of a smooth signal
    coarse = lyapunov_rate_residual(t, np.sin(3 * t), 3 * np.cos(3 * t))
    fine_t = np.linspace(0, 1, 21)
    fine = lyapunov_rate_residual(fine_t, np.sin(3 * fine_t), 3 * np.cos(3 * fine_t))
    assert coarse / fine == pytest.approx(4, rel=0.05)


def test_windowed_means():
    t = np.arange(10.0)
    assert np.allclose(windowed_means(t, t, 3.0), [1, 4, 7])
    with pytest.raises(ValueError):
        windowed_means(t, t, 0.0)


def test_rabi_two_level():
    rep = rabi_analysis([1.0], [1.0])
    assert np.allclose(rep.Omega, [-0.5, 0.5])
    assert rep.min_gap == pytest.approx(1) and rep.max_gap == pytest.approx(1)
    assert not rep.degenerate


def test_rabi_three_level_nondegenerate():
    rep = rabi_analysis([0.1] * 3, [1.3, 1.0, -1.5], Gamma=0.05, gamma=[1.0] * 3)
    assert np.all(np.diff(rep.Omega) > 0)
    assert rep.min_gap > 0.01 and not rep.degenerate
    assert np.allclose(rep.Omega, np.linalg.eigvalsh(effective_hamiltonian([0.1] * 3, [1.3, 1.0, -1.5]).real))
    assert rep.gain_margin["Gamma"] == pytest.approx(0.05 / rep.min_gap)


def test_rabi_zero_coupling_degenerate():
    rep = rabi_analysis([0.1] * 3, [0.0] * 3)
    assert np.all(rep.Omega == 0) and rep.degenerate


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(0.1, 10))
def test_rabi_scales_linearly(seed, c):
    rng = np.random.default_rng(seed)
    amps, th = rng.uniform(0.01, 1, 6), rng.normal(size=6)
    a, b = rabi_analysis(amps, th), rabi_analysis(c * amps, th)
    assert np.allclose(b.Omega, c * a.Omega, atol=1e-10)
    assert b.min_gap == pytest.approx(c * a.min_gap, abs=1e-10)


def test_effective_hamiltonian_rejects():
    with pytest.raises(DimensionError):
        effective_hamiltonian([1.0, 1.0], [1.0, 1.0])


def test_identifiability_examples():
    rep = check_identifiability([0, 1, 3], MU3)
    assert (rep.a2_ok, rep.a3_ok, rep.a1_connected) == (True, True, True)
    assert rep.min_transition_gap == pytest.approx(1)
    assert not check_identifiability([0, 1, 2], MU3).a2_ok
    bad = MU3.copy()
    bad[0, 0] = 0.1
    assert not check_identifiability([0, 1, 3], bad).a3_ok
    cut = dipole_from_theta([1.0, 0.0, 0.0], 3)
    assert not check_identifiability([0, 1, 3], cut).a1_connected
    assert not check_identifiability([0, 0], dipole_from_theta([1.0], 2)).a2_ok
    assert check_identifiability([0, 1], dipole_from_theta([1.0], 2)).min_transition_gap == math.inf
    with pytest.raises(DimensionError):
        check_identifiability([0, 1], MU3)


@settings(max_examples=100, deadline=None)
@given(omega=st.lists(st.integers(-20, 20), min_size=2, max_size=6), seed=st.integers(0, 2 ** 32 - 1))
def test_a2_permutation_symmetric(omega, seed):
    n = len(omega)
    mu = dipole_from_theta(np.ones(n * (n - 1) // 2), n)
    perm = np.random.default_rng(seed).permutation(n)
    a = check_identifiability(np.array(omega, float), mu)
    b = check_identifiability(np.array(omega, float)[perm], mu)
    assert a.a2_ok == b.a2_ok


def test_four_level_identifiability():
    system = QuantumSystem(np.array(FOUR_LEVEL_H), np.array(FOUR_LEVEL_MU, float), (0, 1, 2, 3))
    rep = check_identifiability(system.omega, system.dipole.real)
    assert (rep.a2_ok, rep.a3_ok, rep.a1_connected) == (True, True, True)
    mu_e = eigenbasis_dipole(system.hamiltonian, system.dipole)
    assert np.allclose(mu_e, mu_e.conj().T)


def test_convergence_exact():
    t = np.linspace(0, 10, 101)
    m = convergence_metrics(t, np.ones((101, 1)), [1.0])
    assert m.max_final_error == 0 and m.max_error == 0 and m.time_to_tolerance == 0


def test_convergence_decay():
    t = np.linspace(0, 50, 5001)
    th = 1 + 0.5 * np.exp(-0.2 * t)[:, None]
    m = convergence_metrics(t, th, [1.0], tol=0.05)
    assert m.time_to_tolerance == pytest.approx(np.log(10) / 0.2, abs=0.02)
    assert m.decay_rate == pytest.approx(0.2, rel=0.05)
    assert m.as_dict()["tolerance"] == 0.05


def test_convergence_not_reached():
    t = np.linspace(0, 10, 101)
    m = convergence_metrics(t, (1 + t)[:, None], [1.0])
    assert m.time_to_tolerance is None
    assert m.decay_rate < 0
