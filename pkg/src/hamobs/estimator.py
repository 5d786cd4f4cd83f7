"""Observer-based estimators of the dipole couplings.

Four flavours share the same innovation structure, a gradient-like
parameter law driven by ``e_j = y_j - yhat_j`` on the measured channels:

``full``
    Normalized observer in the laboratory frame, driven by the known
    field ``u(t)``.  Keeps ``rho_hat`` on the pure-state manifold.
``averaged``
    The rotating-wave version in the interaction frame.  It needs only the
    tone amplitudes, their phases and (optionally) detunings, never the
    Bohr frequencies themselves.
``unnormalized``
    Wavefunction observer whose norm is not conserved (two levels only).
``second_averaged``
    The doubly averaged two-level system.  It needs the true coupling, so
    it only exists to check the Lyapunov argument numerically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DimensionError
from .linalg import HERMITIAN_TOL, is_hermitian, pauli
from .system import ControlField, QuantumSystem, level_pairs, neg_i_commutator_into

log = logging.getLogger(__name__)

MODES = ("full", "averaged", "second_averaged", "unnormalized")


def pure_state(psi) -> np.ndarray:
    """``psi psi^H`` for a normalized wavefunction."""
    psi = np.asarray(psi, dtype=complex).ravel()
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"wavefunction norm is {norm!r}, expected 1")
    return np.outer(psi, psi.conj())


def check_density(rho: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    if not is_hermitian(rho, tol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError("density matrix does not have unit trace")


@dataclass(frozen=True, eq=False)
class GainConfig:
    """Injection gain, parameter gains and the resonant drive seen per pair.

    ``amplitudes``, ``phases`` and ``detuning`` are indexed like the level
    pairs and are only used by the averaged estimator.  ``phases`` is the
    effective phase of the rotating-frame coupling (0 for a cosine tone on a
    transition with ``omega_l > omega_k``).
    """

    Gamma: float
    gamma: np.ndarray
    amplitudes: np.ndarray | None = None
    phases: np.ndarray | None = None
    detuning: np.ndarray | None = None

    def __post_init__(self):
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        if gamma.size == 1 and self.amplitudes is not None:
            gamma = np.full(np.size(self.amplitudes), gamma[0])
        object.__setattr__(self, "gamma", gamma)
        if self.Gamma <= 0 or np.any(gamma <= 0):
            raise ValueError("gains must be strictly positive")
        for name in ("amplitudes", "phases", "detuning"):
            value = getattr(self, name)
            if value is not None:
                value = np.atleast_1d(np.asarray(value, dtype=float))
                if value.shape != gamma.shape:
                    raise DimensionError(f"{name} has shape {value.shape}, expected {gamma.shape}")
                object.__setattr__(self, name, value)

    def regime_warnings(self, theta_hat, transition_freqs, eps: float = 0.1) -> list[str]:
        """Violations of ``Gamma <= eps A theta``, ``A theta <= eps omega``,
        ``gamma <= eps theta`` per pair.  Advisory only."""
        if self.amplitudes is None:
            return []
        out = []
        for p, (a, th, w, g) in enumerate(zip(self.amplitudes, np.abs(theta_hat), transition_freqs, self.gamma)):
            rabi = a * th
            if rabi == 0:
                continue
            if self.Gamma > eps * rabi:
                out.append(f"pair {p}: Gamma={self.Gamma:g} > eps*A*theta={eps * rabi:g}")
            if rabi > eps * w:
                out.append(f"pair {p}: A*theta={rabi:g} > eps*omega={eps * w:g}")
            if g > eps * th:
                out.append(f"pair {p}: gamma={g:g} > eps*theta={eps * th:g}")
        return out


@dataclass(eq=False)
class EstimatorState:
    rho_hat: np.ndarray
    theta_hat: np.ndarray
    mode: str = "full"
    psi_tilde: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.theta_hat = np.atleast_1d(np.asarray(self.theta_hat, dtype=float))
        self.rho_hat = np.asarray(self.rho_hat, dtype=complex)


def resonant_drive(system: QuantumSystem, control: ControlField, rel_tol: float = 0.25,
                   require_diagonal: bool = True):
    """Map each level pair to the tone driving it.

    Returns per-pair ``(amplitudes, phases, detuning)`` for the averaged
    estimator, from the nominal field and the known diagonal Hamiltonian.
    A pair with no tone within ``rel_tol`` of its Bohr frequency gets zero
    amplitude.  ``detuning = omega_l - omega_k - s * nu`` with ``s`` the
    sign of the transition and ``nu`` the tone frequency.  With
    ``require_diagonal=False`` pairs refer to the ascending eigenvalues.
    """
    if require_diagonal and not system.is_diagonal:
        raise ValueError("the averaged estimator needs H diagonal in the measured basis")
    omega = system.omega
    pairs = system.pairs
    amps = np.zeros(len(pairs))
    phases = np.zeros(len(pairs))
    detuning = np.zeros(len(pairs))
    if not control.tones:
        return amps, phases, detuning
    for p, (l, k) in enumerate(pairs):
        w = omega[l] - omega[k]
        dist = [abs(abs(w) - abs(t.frequency)) for t in control.tones]
        best = int(np.argmin(dist))
        tone = control.tones[best]
        if dist[best] > rel_tol * max(abs(w), 1e-300):
            continue
        s = 1.0 if w >= 0 else -1.0
        tone_phase = 0.0 if tone.waveform == "cos" else np.pi / 2
        amps[p] = tone.amplitude
        phases[p] = s * tone_phase
        detuning[p] = w - s * abs(tone.frequency)
    return amps, phases, detuning


def detuning_shift(detuning, dim: int) -> np.ndarray:
    """Diagonal of ``sum_lk (delta_lk / 2) sigma_z^{lk}``."""
    d = np.zeros(dim)
    for delta, (l, k) in zip(np.asarray(detuning, dtype=float), level_pairs(dim)):
        d[l] += delta / 2
        d[k] -= delta / 2
    return d


def pair_index_arrays(dim: int) -> tuple[np.ndarray, np.ndarray]:
    pairs = level_pairs(dim)
    return (np.array([p[0] for p in pairs], dtype=np.int64), np.array([p[1] for p in pairs], dtype=np.int64))


# --- compiled kernels -------------------------------------------------------


@njit(cache=True)
def _innovation_into(err, y, mask, rh):
    s = 0.0
    for j in range(rh.shape[0]):
        yh = rh[j, j].real
        err[j] = mask[j] * (y[j] - yh)
        s += err[j] * yh
    return s


@njit(cache=True)
def _add_injection(drh, rh, err, s, Gamma):
    n = rh.shape[0]
    for a in range(n):
        for b in range(n):
            drh[a, b] += Gamma * (err[a] + err[b] - 2.0 * s) * rh[a, b]


@njit(cache=True)
def full_rhs_into(drh, dth, kbuf, err, rh, th, ham, pl, pk, y, mask, u, Gamma, gamma):
    n = rh.shape[0]
    for a in range(n):
        for b in range(n):
            kbuf[a, b] = ham[a, b]
    for p in range(th.shape[0]):
        kbuf[pl[p], pk[p]] += u * th[p]
        kbuf[pk[p], pl[p]] += u * th[p]
    neg_i_commutator_into(drh, kbuf, rh)
    s = _innovation_into(err, y, mask, rh)
    _add_injection(drh, rh, err, s, Gamma)
    for p in range(th.shape[0]):
        l, k = pl[p], pk[p]
        d = rh[k, l] - rh[l, k]
        dth[p] = (-1j * gamma[p] * u * d * (err[l] - err[k])).real


@njit(cache=True)
def averaged_rhs_into(dxi, dth, kbuf, err, xi, th, pl, pk, amps, coup, shift, y, mask, Gamma, gamma):
    n = xi.shape[0]
    for a in range(n):
        for b in range(n):
            kbuf[a, b] = 0j
        kbuf[a, a] = shift[a]
    for p in range(th.shape[0]):
        c = 0.5 * amps[p] * th[p]
        kbuf[pl[p], pk[p]] += c * coup[p]
        kbuf[pk[p], pl[p]] += c * np.conj(coup[p])
    neg_i_commutator_into(dxi, kbuf, xi)
    s = _innovation_into(err, y, mask, xi)
    _add_injection(dxi, xi, err, s, Gamma)
    for p in range(th.shape[0]):
        l, k = pl[p], pk[p]
        d = coup[p] * xi[k, l] - np.conj(coup[p]) * xi[l, k]
        dth[p] = (-0.5j * gamma[p] * amps[p] * d * (err[l] - err[k])).real


@njit(cache=True)
def unnormalized_rhs_into(dpsi, dth, kbuf, err, psi, th, ham, pl, pk, y, mask, u, Gamma, gamma):
    n = psi.shape[0]
    for a in range(n):
        for b in range(n):
            kbuf[a, b] = ham[a, b]
    for p in range(th.shape[0]):
        kbuf[pl[p], pk[p]] += u * th[p]
        kbuf[pk[p], pl[p]] += u * th[p]
    for j in range(n):
        err[j] = mask[j] * (y[j] - (psi[j, 0] * np.conj(psi[j, 0])).real)
    for a in range(n):
        s = 0j
        for c in range(n):
            s += kbuf[a, c] * psi[c, 0]
        dpsi[a, 0] = -1j * s + Gamma * err[a] * psi[a, 0]
    for p in range(th.shape[0]):
        l, k = pl[p], pk[p]
        d = psi[k, 0] * np.conj(psi[l, 0]) - psi[l, 0] * np.conj(psi[k, 0])
        dth[p] = (-1j * gamma[p] * u * d * (err[l] - err[k])).real


# --- public operations -------------------------------------------------------


def _mask(measured, dim):
    if measured is None:
        return np.ones(dim)
    mask = np.zeros(dim)
    mask[list(measured)] = 1.0
    return mask


def _check_inputs(rho, y, theta, dim_pairs):
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(y)) and np.all(np.isfinite(theta))):
        raise ValueError("non-finite input")
    if theta.shape != (dim_pairs,):
        raise DimensionError(f"expected {dim_pairs} couplings, got {theta.shape}")


def full_estimator_rhs(est: EstimatorState, y, u: float, hamiltonian, gains: GainConfig, measured=None):
    """Time derivatives ``(d rho_hat/dt, d theta_hat/dt)`` of the full estimator.

    ``y`` holds one population per level; only ``measured`` levels (all by
    default) feed the innovation.
    """
    rh = np.asarray(est.rho_hat, dtype=complex)
    ham = np.asarray(hamiltonian, dtype=complex)
    n = rh.shape[0]
    y = np.asarray(y, dtype=float)
    if ham.shape != rh.shape or y.shape != (n,):
        raise DimensionError("rho_hat, hamiltonian and y dimensions disagree")
    _check_inputs(rh, y, est.theta_hat, n * (n - 1) // 2)
    pl, pk = pair_index_arrays(n)
    drh = np.empty_like(rh)
    dth = np.empty(pl.size)
    full_rhs_into(drh, dth, np.empty_like(rh), np.empty(n), rh, est.theta_hat, ham, pl, pk,
                  y, _mask(measured, n), float(u), float(gains.Gamma), gains.gamma * np.ones(pl.size))
    return drh, dth


def averaged_estimator_rhs(est: EstimatorState, y, gains: GainConfig, measured=None):
    """Rotating-wave estimator derivatives ``(d xi_hat/dt, d theta_hat/dt)``.

    ``est.rho_hat`` holds the interaction-frame state ``xi_hat``.  The raw
    measured populations are used directly because they are invariant under
    the change of frame.
    """
    xi = np.asarray(est.rho_hat, dtype=complex)
    n = xi.shape[0]
    y = np.asarray(y, dtype=float)
    if y.shape != (n,):
        raise DimensionError("xi_hat and y dimensions disagree")
    npairs = n * (n - 1) // 2
    _check_inputs(xi, y, est.theta_hat, npairs)
    if gains.amplitudes is None:
        raise ValueError("averaged estimator needs per-pair amplitudes")
    pl, pk = pair_index_arrays(n)
    phases = np.zeros(npairs) if gains.phases is None else gains.phases
    detuning = np.zeros(npairs) if gains.detuning is None else gains.detuning
    dxi = np.empty_like(xi)
    dth = np.empty(npairs)
    averaged_rhs_into(dxi, dth, np.empty_like(xi), np.empty(n), xi, est.theta_hat, pl, pk,
                      gains.amplitudes * np.ones(npairs), np.exp(1j * phases), detuning_shift(detuning, n),
                      y, _mask(measured, n), float(gains.Gamma), gains.gamma * np.ones(npairs))
    return dxi, dth


def unnormalized_observer_rhs(psi_tilde, y, u: float, theta, Gamma: float, hamiltonian,
                              gamma: float = 0.0, measured=(0,)):
    """Derivative of the wavefunction observer ``-i(H + theta u mu) psi + Gamma e P psi``.

    Two levels only.  With ``gamma > 0`` the second return value is the
    matching parameter law; with the default ``gamma=0`` it is zero.
    """
    psi = np.asarray(psi_tilde, dtype=complex).reshape(-1, 1)
    n = psi.shape[0]
    if n != 2:
        raise DimensionError("the unnormalized observer is defined for two levels")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape == (1,):
        y = np.array([y[0], 1.0 - y[0]])
    pl, pk = pair_index_arrays(n)
    dpsi = np.empty_like(psi)
    dth = np.empty(1)
    unnormalized_rhs_into(dpsi, dth, np.empty((n, n), complex), np.empty(n), psi, theta,
                          np.asarray(hamiltonian, dtype=complex), pl, pk, y, _mask(measured, n),
                          float(u), float(Gamma), np.array([float(gamma)]))
    return dpsi.ravel(), dth


_PAULIS = np.stack([pauli("x"), pauli("y"), pauli("z")])


@njit(cache=True)
def _re_trace_prod(s, m):
    """Re tr(s m) for 2x2 matrices."""
    return (s[0, 0] * m[0, 0] + s[0, 1] * m[1, 0] + s[1, 0] * m[0, 1] + s[1, 1] * m[1, 1]).real


@njit(cache=True)
def second_averaged_rhs_into(dz, zh, th, z, theta, amp, Gamma, gamma):
    """Fill ``dz`` with d zeta_hat/dt and return d theta_hat/dt."""
    sx, sy, sz = _PAULIS[0], _PAULIS[1], _PAULIS[2]
    diff = z - zh
    c = -0.5j * amp * (th - theta)
    for a in range(2):
        for b in range(2):
            acc = 0j
            for k in range(2):
                acc += sx[a, k] * zh[k, b] - zh[a, k] * sx[k, b]
            dz[a, b] = c * acc
    for q in (1, 2):
        s = _PAULIS[q]
        w = Gamma / 8 * _re_trace_prod(s, diff)
        tsz = _re_trace_prod(s, zh)
        for a in range(2):
            for b in range(2):
                acc = 0j
                for k in range(2):
                    acc += s[a, k] * zh[k, b] + zh[a, k] * s[k, b]
                dz[a, b] += w * (acc - 2 * tsz * zh[a, b])
    return gamma * amp / 8 * (_re_trace_prod(sy, zh) * _re_trace_prod(sz, diff)
                              - _re_trace_prod(sz, zh) * _re_trace_prod(sy, diff))


def second_averaged_rhs(zeta_hat, theta_hat: float, zeta, theta: float, amplitude: float,
                        Gamma: float, gamma: float):
    """Doubly averaged two-level estimator; ``zeta`` is constant.

    Requires the true ``theta``: a theory-verification tool, not an
    online estimator.
    """
    zh = np.ascontiguousarray(zeta_hat, dtype=complex)
    z = np.ascontiguousarray(zeta, dtype=complex)
    if zh.shape != (2, 2) or z.shape != (2, 2):
        raise DimensionError("second-averaged system is two-level only")
    dz = np.empty_like(zh)
    dth = second_averaged_rhs_into(dz, zh, float(theta_hat), z, float(theta), float(amplitude), float(Gamma),
                                   float(gamma))
    return dz, float(dth)


def interaction_frame_unitary(omega, t: float) -> np.ndarray:
    return np.exp(1j * np.asarray(omega, dtype=float) * t)


def to_interaction_frame(rho, omega, t: float) -> np.ndarray:
    """``exp(iHt) rho exp(-iHt)`` for ``H = diag(omega)``."""
    d = interaction_frame_unitary(omega, t)
    return d[:, None] * np.asarray(rho) * d.conj()[None, :]


def from_interaction_frame(xi, omega, t: float) -> np.ndarray:
    d = interaction_frame_unitary(omega, t)
    return d.conj()[:, None] * np.asarray(xi) * d[None, :]
