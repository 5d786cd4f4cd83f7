import importlib
import math

import numpy as np
import pytest

from hamobs.diagnostics import lyapunov_rate_residual
from hamobs.errors import BlowupError
from hamobs.integrate import (
    HeldNoise,
    IntegrationConfig,
    default_step,
    default_stride,
    integrate,
    resolve_step,
    rk4_step,
    validate_step,
)
from hamobs.scenario import builtin, scenario_from_dict, scenario_to_dict, set_path

# the package re-exports the integrate() function under the submodule's name
integ = importlib.import_module("hamobs.integrate")


def variant(name, **paths):
    d = scenario_to_dict(builtin(name))
    for path, value in paths.items():
        d = set_path(d, path.replace("__", "."), value)
    return scenario_from_dict(d)


def short_fig1(**paths):
    base = {"integration__horizon": 4 * math.pi, "integration__step": 2 * math.pi / 400,
            "integration__record_stride": 1}
    base.update(paths)
    return variant("fig1-2level", **base)


def test_rk4_decay_example():
    (y,) = rk4_step((np.array(1.0),), lambda t, s: (-s[0],), 0.0, 0.1)
    assert float(y) == pytest.approx(0.9048375, abs=1e-7)


def test_rk4_time_dependent():
    # dy/dt = t^3 is integrated exactly
    (y,) = rk4_step((0.0,), lambda t, s: (t ** 3,), 1.0, 0.5)
    assert y == pytest.approx((1.5 ** 4 - 1) / 4, abs=1e-14)


def test_rk4_blowup():
    with pytest.raises(BlowupError) as info:
        rk4_step((1.0,), lambda t, s: (np.inf,), 2.0, 0.1)
    assert info.value.time == 2.0


def test_integration_config_rejects():
    for kwargs in ({"horizon": 0}, {"horizon": 1, "step": -1}, {"horizon": 1, "record_stride": 0}):
        with pytest.raises(ValueError):
            IntegrationConfig(**kwargs)


def test_default_step():
    h = default_step(50 * math.pi, 1.0)
    assert h <= 2 * math.pi / 100
    assert (50 * math.pi / h) == pytest.approx(round(50 * math.pi / h), abs=1e-9)
    assert default_step(100.0, 1.0, 10.0) <= 2 * math.pi / 1000
    validate_step(2 * math.pi / 50, 1.0)
    with pytest.raises(ValueError):
        validate_step(0.2, 1.0)
    assert default_stride(10) == 1
    assert default_stride(integ.MAX_ROWS * 3) == 4


def test_resolve_step_builtins():
    h, n, _ = resolve_step(builtin("fig6-noisy-meas"))
    assert h == 0.001 and n == round(50 * math.pi / 0.001)
    h, n, stride = resolve_step(builtin("fig1-2level"))
    assert n == 100_000 and stride == 2


def test_held_noise_is_chunk_independent():
    whole = HeldNoise(np.random.default_rng(3), 3, 2).block(0, 40)
    parts = HeldNoise(np.random.default_rng(3), 3, 2)
    pieces = np.vstack([parts.block(0, 10), parts.block(10, 7), parts.block(17, 23)])
    assert np.array_equal(whole, pieces)
    # constant within a hold interval
    assert np.array_equal(whole[0], whole[2]) and not np.array_equal(whole[2], whole[3])
    assert np.array_equal(HeldNoise(None, 1, 2, active=False).block(0, 5), np.zeros((5, 2)))


def test_integrator_is_chunk_independent(monkeypatch):
    s = variant("fig7-noisy-control", integration__horizon=10.0, integration__step=2 * math.pi / 2000,
                integration__record_stride=7)
    a = integrate(s)
    monkeypatch.setattr(integ, "CHUNK", 37)
    b = integrate(s)
    assert np.array_equal(a.table(), b.table())


def test_exact_estimate_stays_exact():
    psi = scenario_to_dict(builtin("fig1-2level"))["initial_state"]
    traj = integrate(short_fig1(estimator__theta_hat0=[1.0], estimator__psi_hat0=psi))
    assert np.all(traj.theta_hat == 1.0)
    assert np.max(np.abs(traj.y - traj.y_hat)) <= 1e-12
    assert np.max(np.abs(traj.V)) <= 1e-24


def test_no_field_keeps_populations():
    traj = integrate(short_fig1(control__tones=[]))
    assert np.max(np.abs(traj.populations - traj.populations[0])) <= 1e-12


def test_delay_and_bias():
    s = short_fig1(measurement__delay=0.3, measurement__bias=0.06, measurement__sample_period=0.3 / 96,
                   integration__step=0.3 / 96)
    traj = integrate(s)
    lag = 96
    assert np.allclose(traj.y[lag:], traj.populations[:-lag] + 0.06, atol=1e-15)
    assert np.allclose(traj.y[:lag], traj.populations[0] + 0.06, atol=1e-15)


def test_sampled_readout_is_held():
    h = 2 * math.pi / 400
    traj = integrate(short_fig1(measurement__sample_period=5 * h))
    assert np.array_equal(traj.y[0:5], np.repeat(traj.y[:1], 5, axis=0))
    assert np.array_equal(traj.y[5], traj.populations[5])


def test_measurement_noise_statistics():
    s = short_fig1(measurement__noise_sigma=0.07, integration__horizon=40 * math.pi)
    traj = integrate(s)
    resid = (traj.y - traj.populations)[:, 0]
    assert np.std(resid) == pytest.approx(0.07, rel=0.05)
    assert abs(np.mean(resid)) < 0.01


def test_structure_preserved_short_run():
    traj = integrate(short_fig1())
    c = traj.conservation
    assert c["trace_drift_hat"] <= 1e-12 and c["hermiticity_hat"] <= 1e-12
    assert c["purity_dev_hat"] <= 1e-6
    assert np.max(np.abs(traj.purity_hat - 1)) <= 1e-6


def test_dvdt_matches_finite_difference():
    traj = integrate(short_fig1())
    fine = lyapunov_rate_residual(traj.times, traj.V, traj.dVdt)
    coarse = lyapunov_rate_residual(traj.times[::2], traj.V[::2], traj.dVdt[::2])
    # centered differences are second order in the spacing
    assert 3.5 <= coarse / fine <= 4.5


def test_columns():
    traj = integrate(short_fig1())
    assert traj.columns == ["t", "y_1", "y_2", "yhat_1", "yhat_2", "thetahat_12", "V", "e", "purity_hat",
                            "trace_drift", "dVdt"]
    assert traj.table().shape == (len(traj), len(traj.columns))
    assert traj.times[-1] == pytest.approx(4 * math.pi)


def test_stride_subsamples():
    a = integrate(short_fig1())
    b = integrate(short_fig1(integration__record_stride=10))
    assert np.array_equal(a.table()[::10], b.table())


def test_blowup_returns_partial_trajectory():
    s = short_fig1(estimator__Gamma=1e6)
    with pytest.raises(BlowupError) as info:
        integrate(s)
    traj = info.value.trajectory
    assert traj.partial and 0 < len(traj) and np.all(np.isfinite(traj.table()))


def test_averaged_and_unnormalized_modes_run():
    traj = integrate(variant("detuned-2level", integration__horizon=200.0))
    assert np.all(np.isfinite(traj.theta_hat))
    traj = integrate(short_fig1(estimator__mode="unnormalized"))
    assert np.all(np.isfinite(traj.theta_hat))


def test_theory_mode_lyapunov_decreases():
    traj = integrate(variant("theory-dynA2", integration__horizon=50.0))
    assert np.all(traj.dVdt <= 1e-12)
    assert np.all(np.diff(traj.V) <= 1e-12)
