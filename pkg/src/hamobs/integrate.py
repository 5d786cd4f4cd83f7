"""Fixed-step RK4 integration of the plant and estimator in lockstep.

The hot loop is compiled with numba and advances in chunks so noise
sequences can be drawn from numpy generators between chunks.  Recording is
strided; conservation maxima are tracked over every step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import BlowupError, DimensionError
from .estimator import (
    _PAULIS,
    GainConfig,
    _re_trace_prod,
    averaged_rhs_into,
    detuning_shift,
    full_rhs_into,
    pair_index_arrays,
    pure_state,
    resonant_drive,
    second_averaged_rhs,
    second_averaged_rhs_into,
    unnormalized_rhs_into,
)
from .linalg import pauli
from .system import control_value, level_pairs, noise_stream, pair_label, plant_rhs_into, steps_in

log = logging.getLogger(__name__)

MAX_ROWS = 100_000
CHUNK = 1 << 16
_MODE_CODES = {"full": 0, "averaged": 1, "unnormalized": 2}
# stats slots filled by the compiled loop
_STATS = ("trace_drift_hat", "purity_dev_hat", "hermiticity_hat", "trace_drift", "purity_dev", "hermiticity",
          "population_excursion")


@dataclass(frozen=True)
class IntegrationConfig:
    """Fixed step ``h``, horizon ``T`` and recording stride.

    ``step=None`` picks the default from the scenario time scales;
    ``record_stride=None`` keeps at most ``MAX_ROWS`` rows.
    """

    horizon: float
    step: float | None = None
    record_stride: int | None = None
    renormalize: bool = True

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if self.step is not None and not self.step > 0:
            raise ValueError("step must be > 0")
        if self.record_stride is not None and self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


def default_step(horizon: float, omega_max: float, rabi_max: float | None = None) -> float:
    """``2 pi / (100 omega_max)``, tightened by the Rabi scale when given,
    then shrunk so the horizon is a whole number of steps."""
    scales = [s for s in (omega_max, rabi_max) if s]
    h_max = 2 * np.pi / (100 * max(scales)) if scales else horizon / 1000
    return horizon / math.ceil(horizon / h_max - 1e-9)


def validate_step(step: float, omega_max: float) -> None:
    if omega_max > 0 and step > 2 * np.pi / omega_max / 50 * (1 + 1e-12):
        raise ValueError(f"step {step!r} does not resolve the fastest tone (need <= {2 * np.pi / omega_max / 50!r})")


def step_count(horizon: float, step: float) -> int:
    return max(1, int(round(horizon / step)))


def default_stride(n_steps: int) -> int:
    return max(1, math.ceil((n_steps + 1) / MAX_ROWS))


@dataclass(eq=False)
class Trajectory:
    """Recorded channels of one run plus final states and conservation maxima."""

    times: np.ndarray
    y: np.ndarray
    y_hat: np.ndarray
    theta_hat: np.ndarray
    V: np.ndarray
    e: np.ndarray
    purity_hat: np.ndarray
    trace_drift: np.ndarray
    dVdt: np.ndarray
    pair_labels: list[str]
    final_rho: np.ndarray | None = None
    final_estimate: np.ndarray | None = None
    conservation: dict = field(default_factory=dict)
    populations: np.ndarray | None = None
    step: float = 0.0
    partial: bool = False

    def __len__(self) -> int:
        return self.times.size

    @property
    def columns(self) -> list[str]:
        n = self.y.shape[1]
        return (["t"] + [f"y_{j + 1}" for j in range(n)] + [f"yhat_{j + 1}" for j in range(n)]
                + [f"thetahat_{lab}" for lab in self.pair_labels]
                + ["V", "e", "purity_hat", "trace_drift", "dVdt"])

    def table(self) -> np.ndarray:
        return np.column_stack([self.times, self.y, self.y_hat, self.theta_hat, self.V, self.e,
                                self.purity_hat, self.trace_drift, self.dVdt])


def rk4_step(state, rhs, t: float, h: float):
    """One classical RK4 step for a state given as a tuple of arrays/floats.

    ``rhs(t, state)`` returns a tuple of the same structure.
    """
    def axpy(a, xs, ys):
        return tuple(x + a * y for x, y in zip(xs, ys))

    k1 = rhs(t, state)
    k2 = rhs(t + h / 2, axpy(h / 2, state, k1))
    k3 = rhs(t + h / 2, axpy(h / 2, state, k2))
    k4 = rhs(t + h, axpy(h, state, k3))
    for stage, k in enumerate((k1, k2, k3, k4)):
        if not all(np.all(np.isfinite(part)) for part in k):
            raise BlowupError(t + (0, h / 2, h / 2, h)[stage])
    return tuple(x + h / 6 * (a + 2 * b + 2 * c + d) for x, a, b, c, d in zip(state, k1, k2, k3, k4))


# --- compiled loop ----------------------------------------------------------


@njit(cache=True)
def _estimator_rhs(mode, de, dth, kbuf, err, es, ths, ham, pl, pk, y, mask, ue, Gamma, gamma,
                   avg_amps, coup, shift):
    if mode == 0:
        full_rhs_into(de, dth, kbuf, err, es, ths, ham, pl, pk, y, mask, ue, Gamma, gamma)
    elif mode == 1:
        averaged_rhs_into(de, dth, kbuf, err, es, ths, pl, pk, avg_amps, coup, shift, y, mask, Gamma, gamma)
    else:
        unnormalized_rhs_into(de, dth, kbuf, err, es, ths, ham, pl, pk, y, mask, ue, Gamma, gamma)


@njit(cache=True)
def _estimate_pops(mode, out, es):
    for j in range(out.shape[0]):
        if mode == 2:
            out[j] = (es[j, 0] * np.conj(es[j, 0])).real
        else:
            out[j] = es[j, j].real


@njit(cache=True)
def _stage_y(out, rho, bias, sig, w):
    for j in range(out.shape[0]):
        out[j] = rho[j, j].real + bias + sig * w[j]


@njit(cache=True)
def _hermitize(m, renorm):
    """Symmetrize in place, return (|tr - 1|, max|m - m^H|) before the fix."""
    n = m.shape[0]
    herm = 0.0
    for a in range(n):
        for b in range(a, n):
            d = abs(m[a, b] - np.conj(m[b, a]))
            if d > herm:
                herm = d
            if renorm:
                v = 0.5 * (m[a, b] + np.conj(m[b, a]))
                m[a, b] = v
                m[b, a] = np.conj(v)
    tr = 0.0
    for a in range(n):
        tr += m[a, a].real
    if tr == 0.0:
        return np.inf, herm
    if renorm:
        for a in range(n):
            for b in range(n):
                m[a, b] = m[a, b] / tr
    return abs(tr - 1.0), herm


@njit(cache=True)
def _purity(m):
    n = m.shape[0]
    s = 0.0
    for a in range(n):
        for b in range(n):
            s += (m[a, b] * m[b, a]).real
    return s


@njit(cache=True)
def _run_chunk(i0, i1, n, h, mode, continuous, rho, es, th,
               ham, mu, amps_p, amps_e, freqs, waves, ctrl_sigma, wc,
               pl, pk, mask, Gamma, gamma, avg_amps, coup, shift,
               meas_bias, meas_sigma, wm, lag, sample_every, ring, state_i, yhold,
               renorm, stride, rows, stats, carry):
    """Process grid indices ``i0 .. i1``: record, then step unless at ``n``.

    Returns ``(status, last_index)``; status 1 means a non-finite state.
    ``state_i`` holds ``[ring_pos, row_count]`` and ``carry`` the trace
    drift of the previous step, so chunks chain seamlessly.
    """
    dim = rho.shape[0]
    npar = th.shape[0]
    biased = False
    for q in range(amps_p.shape[0]):
        if amps_p[q] != amps_e[q]:
            biased = True
    kr = np.empty((4, dim, dim), dtype=np.complex128)
    ke = np.empty((4,) + es.shape, dtype=np.complex128)
    kt = np.empty((4, npar))
    rs = np.empty_like(rho)
    ess = np.empty_like(es)
    ths = np.empty_like(th)
    kbuf = np.empty((dim, dim), dtype=np.complex128)
    kbuf2 = np.empty((dim, dim), dtype=np.complex128)
    err = np.empty(dim)
    y = np.empty(dim)
    yh = np.empty(dim)
    ring_size = ring.shape[0]
    tcoef = np.array([0.0, 0.5, 0.5, 1.0])
    for i in range(i0, i1 + 1):
        if i > n:
            break
        c = i - i0
        t = i * h
        # measurement held over this step
        pos = state_i[0]
        if not continuous:
            if i > 0:
                pos = (pos + 1) % ring_size
                state_i[0] = pos
                for j in range(dim):
                    ring[pos, j] = rho[j, j].real
            if i % sample_every == 0:
                src = (pos - lag) % ring_size
                for j in range(dim):
                    yhold[j] = ring[src, j] + meas_bias + meas_sigma * wm[c, j]
        for s in range(4):
            ts = t + tcoef[s] * h
            if s == 0:
                rs[:, :] = rho
                ess[...] = es
                ths[:] = th
            else:
                a = tcoef[s] * h
                for p in range(dim):
                    for q in range(dim):
                        rs[p, q] = rho[p, q] + a * kr[s - 1, p, q]
                for p in range(es.shape[0]):
                    for q in range(es.shape[1]):
                        ess[p, q] = es[p, q] + a * ke[s - 1, p, q]
                for p in range(npar):
                    ths[p] = th[p] + a * kt[s - 1, p]
            ue = control_value(amps_e, freqs, waves, ts)
            if biased:
                up = control_value(amps_p, freqs, waves, ts) + ctrl_sigma * wc[c]
            else:
                up = ue + ctrl_sigma * wc[c]
            plant_rhs_into(kr[s], kbuf, rs, ham, mu, up)
            if continuous:
                _stage_y(y, rs, meas_bias, meas_sigma, wm[c])
            else:
                y[:] = yhold
            _estimator_rhs(mode, ke[s], kt[s], kbuf2, err, ess, ths, ham, pl, pk, y, mask, ue,
                           Gamma, gamma, avg_amps, coup, shift)
            if s == 0 and (i % stride == 0 or i == n):
                r = state_i[1]
                _estimate_pops(mode, yh, es)
                col = 0
                rows[r, col] = t
                col += 1
                for j in range(dim):
                    rows[r, col + j] = rho[j, j].real
                    rows[r, col + dim + j] = y[j]
                    rows[r, col + 2 * dim + j] = yh[j]
                col += 3 * dim
                for p in range(npar):
                    rows[r, col + p] = th[p]
                col += npar
                # stage derivatives of populations and estimates for dV/dt
                for j in range(dim):
                    rows[r, col + j] = kr[0, j, j].real
                    if mode == 2:
                        rows[r, col + dim + j] = 2.0 * (np.conj(es[j, 0]) * ke[0, j, 0]).real
                    else:
                        rows[r, col + dim + j] = ke[0, j, j].real
                col += 2 * dim
                for p in range(npar):
                    rows[r, col + p] = kt[0, p]
                col += npar
                if mode == 2:
                    nrm = 0.0
                    for j in range(dim):
                        nrm += yh[j]
                    rows[r, col] = 1.0
                    rows[r, col + 1] = nrm - 1.0
                else:
                    rows[r, col] = _purity(es)
                    rows[r, col + 1] = carry[0]
                state_i[1] = r + 1
            if i == n:
                return 0, i
        f = h / 6.0
        for p in range(dim):
            for q in range(dim):
                rho[p, q] += f * (kr[0, p, q] + 2 * kr[1, p, q] + 2 * kr[2, p, q] + kr[3, p, q])
        for p in range(es.shape[0]):
            for q in range(es.shape[1]):
                es[p, q] += f * (ke[0, p, q] + 2 * ke[1, p, q] + 2 * ke[2, p, q] + ke[3, p, q])
        for p in range(npar):
            th[p] += f * (kt[0, p] + 2 * kt[1, p] + 2 * kt[2, p] + kt[3, p])
        tot = 0.0
        for p in range(dim):
            for q in range(dim):
                tot += abs(rho[p, q])
        for p in range(es.shape[0]):
            for q in range(es.shape[1]):
                tot += abs(es[p, q])
        for p in range(npar):
            tot += abs(th[p])
        if not np.isfinite(tot):
            return 1, i + 1
        d, hm = _hermitize(rho, True)
        if not np.isfinite(d):
            return 1, i + 1
        stats[3] = max(stats[3], d)
        stats[5] = max(stats[5], hm)
        stats[4] = max(stats[4], abs(_purity(rho) - 1.0))
        for j in range(dim):
            v = rho[j, j].real
            stats[6] = max(stats[6], -v, v - 1.0)
        if mode != 2:
            d, hm = _hermitize(es, renorm)
            if not np.isfinite(d):
                return 1, i + 1
            carry[0] = d
            stats[0] = max(stats[0], d)
            stats[2] = max(stats[2], hm)
            stats[1] = max(stats[1], abs(_purity(es) - 1.0))
        else:
            nrm = 0.0
            for j in range(dim):
                nrm += (es[j, 0] * np.conj(es[j, 0])).real
            stats[0] = max(stats[0], abs(nrm - 1.0))
    return 0, i1


# --- drivers ----------------------------------------------------------------


class HeldNoise:
    """Standard normal draws of width ``width``, one per ``hold`` grid steps.

    Blocks must be requested in order; the draw sequence depends only on the
    seed and ``hold``, not on the chunking.
    """

    def __init__(self, rng: np.random.Generator, hold: int, width: int, active: bool = True):
        self.rng = rng
        self.hold = hold
        self.width = width
        self.active = active
        self._next = 0
        self._last = np.zeros(width)

    def block(self, i0: int, count: int) -> np.ndarray:
        if not self.active:
            return np.zeros((count, self.width))
        first, last = i0 // self.hold, (i0 + count - 1) // self.hold
        start = max(first, self._next)
        fresh = self.rng.standard_normal((last + 1 - start, self.width))
        values = np.vstack([self._last[None, :], fresh]) if first < start else fresh
        if fresh.shape[0]:
            self._last = fresh[-1].copy()
        self._next = last + 1
        return values[np.arange(i0, i0 + count) // self.hold - first]


def lyapunov_columns(pops, yhat, th, theta, gamma, dpops, dyhat, dth, mask):
    """``V`` and its chain-rule rate from recorded populations and derivatives.

    Two levels with one measured channel use ``e^2/2 + (theta - theta_hat)^2 / (2 gamma)``;
    everything else uses ``sum_n (yhat_n - p_n)^2 / 2 + sum 2 (theta_hat - theta)^2 / gamma``.
    """
    d = yhat - pops
    dd = dyhat - dpops
    dtheta = th - theta
    if pops.shape[1] == 2 and mask.sum() == 1:
        j = int(np.flatnonzero(mask)[0])
        V = 0.5 * d[:, j] ** 2 + dtheta[:, 0] ** 2 / (2 * gamma[0])
        rate = d[:, j] * dd[:, j] + dtheta[:, 0] * dth[:, 0] / gamma[0]
    else:
        V = 0.5 * np.sum(d ** 2, axis=1) + np.sum(2 * dtheta ** 2 / gamma, axis=1)
        rate = np.sum(d * dd, axis=1) + np.sum(4 * dtheta * dth / gamma, axis=1)
    return V, rate


def innovation_column(y, yhat, mask):
    e = (y - yhat)[:, mask > 0]
    if e.shape[1] == 1:
        return e[:, 0]
    return np.linalg.norm(e, axis=1)


def resolve_step(scenario) -> tuple[float, int, int]:
    """(step, number of steps, stride) for a scenario."""
    cfg = scenario.integration
    omega_max = scenario.control.max_frequency
    if cfg.step is None:
        rabi = None
        if scenario.estimator.mode == "averaged":
            from .diagnostics import rabi_analysis

            amps, _, _ = resonant_drive(scenario.system, scenario.control.nominal())
            rabi = rabi_analysis(amps, scenario.estimator.theta_hat0).max_gap
        h = default_step(cfg.horizon, omega_max, rabi)
    else:
        h = cfg.step
    validate_step(h, omega_max)
    n = step_count(cfg.horizon, h)
    stride = cfg.record_stride or default_stride(n)
    return h, n, stride


def _estimator_gains(scenario) -> GainConfig:
    est = scenario.estimator
    system = scenario.system
    npairs = len(system.pairs)
    gamma = np.broadcast_to(np.asarray(est.gamma, dtype=float), (npairs,)).copy()
    if est.mode != "averaged":
        return GainConfig(est.Gamma, gamma)
    amps, phases, detuning = resonant_drive(system, scenario.control.nominal())
    if est.detuning is not None:
        detuning = np.broadcast_to(np.asarray(est.detuning, dtype=float), (npairs,)).copy()
    return GainConfig(est.Gamma, gamma, amps, phases, detuning)


def integrate(scenario) -> Trajectory:
    """Run the plant and estimator of ``scenario`` over its horizon."""
    if scenario.estimator.mode == "second_averaged":
        return integrate_theory(scenario)
    system = scenario.system
    est_cfg = scenario.estimator
    mode = _MODE_CODES[est_cfg.mode]
    dim = system.dim
    if mode == 1 and not system.is_diagonal:
        raise DimensionError("averaged mode needs a Hamiltonian diagonal in the measured basis")
    if mode == 2 and dim != 2:
        raise DimensionError("the unnormalized observer is defined for two levels")
    h, n, stride = resolve_step(scenario)
    gains = _estimator_gains(scenario)
    if gains.amplitudes is not None:
        for msg in gains.regime_warnings(est_cfg.theta_hat0, system.transition_frequencies()):
            log.warning("gain regime: %s", msg)
    meas = scenario.measurement
    continuous = meas.is_continuous
    lag = steps_in(meas.delay, h, "delay")
    sample_every = 1 if meas.sample_period is None else steps_in(meas.sample_period, h, "sample_period")

    rho = pure_state(scenario.psi0).astype(np.complex128)
    psi_hat = np.asarray(est_cfg.psi_hat0, dtype=complex)
    es = psi_hat.reshape(-1, 1).copy() if mode == 2 else pure_state(psi_hat)
    th = np.array(est_cfg.theta_hat0, dtype=float)
    if th.shape != (len(system.pairs),):
        raise DimensionError(f"theta_hat0 needs {len(system.pairs)} entries")
    amps_p, freqs, waves = scenario.control.arrays()
    amps_e, _, _ = scenario.control.nominal().arrays()
    pl, pk = pair_index_arrays(dim)
    npairs = pl.size
    avg_amps = gains.amplitudes if gains.amplitudes is not None else np.zeros(npairs)
    coup = np.exp(1j * (gains.phases if gains.phases is not None else np.zeros(npairs)))
    shift = detuning_shift(gains.detuning if gains.detuning is not None else np.zeros(npairs), dim)
    mask = system.measured_mask

    ring = np.empty((lag + 1, dim))
    ring[:] = np.diag(rho).real
    state_i = np.zeros(2, dtype=np.int64)
    yhold = np.zeros(dim)
    nrows = n // stride + 2
    width = 1 + 5 * dim + 2 * npairs + 2
    rows = np.zeros((nrows, width))
    stats = np.zeros(len(_STATS))
    carry = np.zeros(1)
    hold = 1 if scenario.control.noise_hold is None else steps_in(scenario.control.noise_hold, h, "noise_hold")
    ctrl_noise = HeldNoise(noise_stream(scenario.control.seed), hold, 1, scenario.control.noise_sigma > 0)
    meas_noise = HeldNoise(noise_stream(meas.seed), sample_every, dim, meas.noise_sigma > 0)

    i0 = 0
    while True:
        i1 = min(i0 + CHUNK - 1, n)
        count = i1 - i0 + 1
        wc = ctrl_noise.block(i0, count)[:, 0]
        wm = meas_noise.block(i0, count)
        status, last = _run_chunk(i0, i1, n, h, mode, continuous, rho, es, th,
                                  system.hamiltonian, system.dipole, amps_p, amps_e, freqs, waves,
                                  float(scenario.control.noise_sigma), wc,
                                  pl, pk, mask, float(gains.Gamma), gains.gamma, avg_amps, coup, shift,
                                  float(meas.bias), float(meas.noise_sigma), wm, lag, sample_every, ring,
                                  state_i, yhold, scenario.integration.renormalize, stride, rows, stats, carry)
        if status or i1 == n:
            break
        i0 = i1 + 1

    rows = rows[: state_i[1]]
    traj = _assemble(rows, dim, npairs, system, gains, mask, h)
    traj.final_rho = rho.copy()
    traj.final_estimate = es.copy()
    traj.conservation = {k: float(v) for k, v in zip(_STATS, stats)}
    if status:
        traj.partial = True
        raise _blowup(last * h, traj)
    return traj


def _blowup(time: float, traj: Trajectory) -> BlowupError:
    err = BlowupError(time)
    err.trajectory = traj
    return err


def _assemble(rows, dim, npairs, system, gains, mask, h) -> Trajectory:
    c = 1
    t = rows[:, 0]
    pops = rows[:, c:c + dim]
    y = rows[:, c + dim:c + 2 * dim]
    yhat = rows[:, c + 2 * dim:c + 3 * dim]
    c += 3 * dim
    th = rows[:, c:c + npairs]
    c += npairs
    dpops = rows[:, c:c + dim]
    dyhat = rows[:, c + dim:c + 2 * dim]
    c += 2 * dim
    dth = rows[:, c:c + npairs]
    c += npairs
    V, rate = lyapunov_columns(pops, yhat, th, system.theta, gains.gamma, dpops, dyhat, dth, mask)
    return Trajectory(
        times=t, y=y, y_hat=yhat, theta_hat=th, V=V, e=innovation_column(y, yhat, mask),
        purity_hat=rows[:, c], trace_drift=rows[:, c + 1], dVdt=rate,
        pair_labels=[pair_label(l, k) for l, k in level_pairs(dim)], populations=pops, step=h,
    )


# --- theory mode --------------------------------------------------------------

_SY, _SZ = pauli("y"), pauli("z")


def _tr(a):
    return np.trace(a).real


def second_averaged_lyapunov(zeta_hat, theta_hat, zeta, theta, gamma) -> float:
    ay = _tr(_SY @ (zeta_hat - zeta))
    az = _tr(_SZ @ (zeta_hat - zeta))
    return 0.5 * ay ** 2 + 0.5 * az ** 2 + 4.0 / gamma * (theta_hat - theta) ** 2


def second_averaged_rate(zeta_hat, theta_hat, zeta, theta, amplitude, Gamma, gamma) -> float:
    """Chain-rule ``dV/dt`` along the second-averaged flow."""
    dz, dth = second_averaged_rhs(zeta_hat, theta_hat, zeta, theta, amplitude, Gamma, gamma)
    ay = _tr(_SY @ (zeta_hat - zeta))
    az = _tr(_SZ @ (zeta_hat - zeta))
    return ay * _tr(_SY @ dz) + az * _tr(_SZ @ dz) + 8.0 / gamma * (theta_hat - theta) * dth


@njit(cache=True)
def _theory_v_rate(zh, th, dz, dth, z, theta, gamma):
    sy, sz = _PAULIS[1], _PAULIS[2]
    ay = _re_trace_prod(sy, zh) - _re_trace_prod(sy, z)
    az = _re_trace_prod(sz, zh) - _re_trace_prod(sz, z)
    v = 0.5 * ay * ay + 0.5 * az * az + 4.0 / gamma * (th - theta) ** 2
    rate = ay * _re_trace_prod(sy, dz) + az * _re_trace_prod(sz, dz) + 8.0 / gamma * (th - theta) * dth
    return v, rate


@njit(cache=True)
def _theory_loop(zh, th, z, theta, amp, Gamma, gamma, h, n, stride, renorm, rows, stats):
    """RK4 on the second-averaged system; rows hold t, zh_11, zh_22, th, V, dV/dt, purity, drift.

    Returns ``(status, last_index, row_count)``.
    """
    kz = np.empty((4, 2, 2), dtype=np.complex128)
    kt = np.empty(4)
    zs = np.empty((2, 2), dtype=np.complex128)
    tcoef = np.array([0.0, 0.5, 0.5, 1.0])
    r = 0
    drift = 0.0
    for i in range(n + 1):
        for st in range(4):
            if st == 0:
                zs[:, :] = zh
                ts = th
            else:
                zs[:, :] = zh + tcoef[st] * h * kz[st - 1]
                ts = th + tcoef[st] * h * kt[st - 1]
            kt[st] = second_averaged_rhs_into(kz[st], zs, ts, z, theta, amp, Gamma, gamma)
            if st == 0 and (i % stride == 0 or i == n):
                v, rate = _theory_v_rate(zh, th, kz[0], kt[0], z, theta, gamma)
                rows[r, 0] = i * h
                rows[r, 1] = zh[0, 0].real
                rows[r, 2] = zh[1, 1].real
                rows[r, 3] = th
                rows[r, 4] = v
                rows[r, 5] = rate
                rows[r, 6] = _purity(zh)
                rows[r, 7] = drift
                r += 1
            if i == n:
                return 0, i, r
        zh += h / 6.0 * (kz[0] + 2 * kz[1] + 2 * kz[2] + kz[3])
        th += h / 6.0 * (kt[0] + 2 * kt[1] + 2 * kt[2] + kt[3])
        if not (np.all(np.isfinite(zh.real)) and np.all(np.isfinite(zh.imag)) and np.isfinite(th)):
            return 1, i + 1, r
        drift, hm = _hermitize(zh, renorm)
        if not np.isfinite(drift):
            return 1, i + 1, r
        stats[0] = max(stats[0], drift)
        stats[2] = max(stats[2], hm)
        stats[1] = max(stats[1], abs(_purity(zh) - 1.0))
    return 0, n, r


def integrate_theory(scenario) -> Trajectory:
    """Integrate the second-averaged system; the plant state ``zeta`` is constant."""
    system = scenario.system
    if system.dim != 2:
        raise DimensionError("second-averaged mode is two-level only")
    est = scenario.estimator
    if not est.theory:
        raise ValueError("second_averaged mode needs the theory-verification flag")
    cfg = scenario.integration
    theta = float(system.theta[0])
    amplitude = est.amplitude if est.amplitude is not None else scenario.control.tones[0].amplitude
    Gamma, gamma = float(est.Gamma), float(np.atleast_1d(est.gamma)[0])
    h = cfg.step if cfg.step is not None else default_step(cfg.horizon, 0.0, abs(amplitude * theta))
    n = step_count(cfg.horizon, h)
    stride = cfg.record_stride or default_stride(n)
    zeta = pure_state(scenario.psi0)
    zh = pure_state(est.psi_hat0)
    rows = np.zeros((n // stride + 2, 8))
    stats = np.zeros(len(_STATS))
    status, last, count = _theory_loop(zh, float(est.theta_hat0[0]), zeta, theta, float(amplitude), Gamma, gamma,
                                       h, n, stride, cfg.renormalize, rows, stats)
    rows = rows[:count]
    y = np.tile(np.diag(zeta).real, (count, 1))
    yhat = rows[:, 1:3]
    traj = Trajectory(
        times=rows[:, 0], y=y, y_hat=yhat, theta_hat=rows[:, 3:4], V=rows[:, 4], e=y[:, 0] - yhat[:, 0],
        purity_hat=rows[:, 6], trace_drift=rows[:, 7], dVdt=rows[:, 5], pair_labels=["12"],
        final_rho=zeta, final_estimate=zh, conservation={k: float(v) for k, v in zip(_STATS, stats)},
        populations=y.copy(), step=h,
    )
    if status:
        traj.partial = True
        raise _blowup(last * h, traj)
    return traj
