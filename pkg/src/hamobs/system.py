"""The simulated plant: a closed N-level system driven by a resonant field.

The true state evolves as ``drho/dt = -i[H + u(t) mu, rho]`` and the
laboratory observes the populations ``y_j = tr(P_j rho)`` of the basis in
which ``H`` and ``mu`` are written, possibly delayed, biased and noisy.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .errors import DimensionError, InsufficientHistoryError
from .linalg import HERMITIAN_TOL, hermitian_eigendecompose, is_hermitian

WAVEFORMS = ("cos", "sin")


def level_pairs(dim: int) -> list[tuple[int, int]]:
    """0-based ``(l, k)`` with ``l < k`` in row-major upper-triangle order."""
    return [(l, k) for l in range(dim) for k in range(l + 1, dim)]


def pair_label(l: int, k: int) -> str:
    return f"{l + 1}{k + 1}" if max(l, k) < 9 else f"{l + 1}_{k + 1}"


def theta_from_dipole(mu: np.ndarray) -> np.ndarray:
    mu = np.asarray(mu)
    return np.array([mu[l, k].real for l, k in level_pairs(mu.shape[0])])


def dipole_from_theta(theta, dim: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    pairs = level_pairs(dim)
    if theta.shape != (len(pairs),):
        raise DimensionError(f"expected {len(pairs)} couplings for dim={dim}, got {theta.shape}")
    mu = np.zeros((dim, dim), dtype=complex)
    for value, (l, k) in zip(theta, pairs):
        mu[l, k] = mu[k, l] = value
    return mu


@dataclass(frozen=True, eq=False)
class QuantumSystem:
    """Free Hamiltonian, true dipole and measured channels.

    ``hamiltonian`` and ``dipole`` are written in the measurement basis; the
    dipole is real symmetric with zero diagonal and its upper-triangle
    entries are the couplings ``theta``.  ``measured`` lists the 0-based
    levels whose populations are observed.
    """

    hamiltonian: np.ndarray
    dipole: np.ndarray
    measured: tuple[int, ...]

    def __post_init__(self):
        h = np.asarray(self.hamiltonian, dtype=complex)
        mu = np.asarray(self.dipole, dtype=complex)
        n = h.shape[0]
        if h.shape != (n, n) or mu.shape != (n, n):
            raise DimensionError(f"hamiltonian {h.shape} and dipole {mu.shape} must be square and equal")
        if n < 2:
            raise DimensionError("need at least two levels")
        if not is_hermitian(h, HERMITIAN_TOL * max(1.0, np.abs(h).max())):
            raise ValueError("hamiltonian is not Hermitian")
        if np.abs(mu.imag).max() > 0 or np.abs(mu - mu.T).max() > 0:
            raise ValueError("dipole must be real symmetric")
        if np.abs(np.diag(mu)).max() > 0:
            raise ValueError("dipole must have zero diagonal")
        measured = tuple(sorted(set(int(j) for j in self.measured)))
        if not measured or measured[0] < 0 or measured[-1] >= n:
            raise ValueError(f"measured channels {self.measured} invalid for dim={n}")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "dipole", mu)
        object.__setattr__(self, "measured", measured)

    @classmethod
    def from_spectrum(cls, omega, theta, basis_change=None, measured=None) -> QuantumSystem:
        """Build from eigenvalues ``omega`` and couplings ``theta`` (pair order).

        With ``basis_change`` U the Hamiltonian is ``U diag(omega) U^H``.
        """
        omega = np.asarray(omega, dtype=float)
        h = np.diag(omega).astype(complex)
        if basis_change is not None:
            u = np.asarray(basis_change, dtype=complex)
            h = u @ h @ u.conj().T
            h = (h + h.conj().T) / 2
        n = omega.size
        return cls(h, dipole_from_theta(theta, n), tuple(range(n)) if measured is None else measured)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return level_pairs(self.dim)

    @property
    def theta(self) -> np.ndarray:
        return theta_from_dipole(self.dipole)

    @property
    def measured_mask(self) -> np.ndarray:
        mask = np.zeros(self.dim)
        mask[list(self.measured)] = 1.0
        return mask

    @property
    def is_diagonal(self) -> bool:
        h = self.hamiltonian
        return bool(np.abs(h - np.diag(np.diag(h))).max() == 0.0)

    @property
    def omega(self) -> np.ndarray:
        """Free-Hamiltonian energies: the diagonal if ``H`` is diagonal, else
        the ascending eigenvalues."""
        if self.is_diagonal:
            return np.diag(self.hamiltonian).real.copy()
        return hermitian_eigendecompose(self.hamiltonian).eigenvalues

    def transition_frequencies(self) -> np.ndarray:
        """``|lambda_l - lambda_k|`` over level pairs of the eigenvalues."""
        lam = self.omega
        return np.array([abs(lam[l] - lam[k]) for l, k in self.pairs])


@dataclass(frozen=True)
class Tone:
    amplitude: float
    frequency: float
    waveform: str = "cos"

    def __post_init__(self):
        if self.waveform not in WAVEFORMS:
            raise ValueError(f"waveform must be one of {WAVEFORMS}, got {self.waveform!r}")


@dataclass(frozen=True)
class ControlField:
    """Sum of tones ``(A + bias) * waveform(freq * t)`` plus ``noise_sigma * w``.

    ``w`` is a standard normal draw from the stream seeded by ``seed``, held
    for ``noise_hold`` (a multiple of the integrator step) or for one step
    when ``noise_hold`` is None.
    """

    tones: tuple[Tone, ...]
    amplitude_bias: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0
    noise_hold: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "tones", tuple(self.tones))
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.noise_hold is not None and self.noise_hold <= 0:
            raise ValueError("noise_hold must be > 0")

    def nominal(self) -> ControlField:
        """The field the experimenter believes is applied: no bias, no noise."""
        return replace(self, amplitude_bias=0.0, noise_sigma=0.0)

    @property
    def max_frequency(self) -> float:
        return max((abs(t.frequency) for t in self.tones), default=0.0)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        amps = np.array([t.amplitude + self.amplitude_bias for t in self.tones], dtype=float)
        freqs = np.array([t.frequency for t in self.tones], dtype=float)
        waves = np.array([WAVEFORMS.index(t.waveform) for t in self.tones], dtype=np.int64)
        return amps, freqs, waves


@dataclass(frozen=True)
class MeasurementModel:
    """Delayed, biased, noisy population readout.

    ``sample_period=None`` means continuous readout (the estimator sees the
    plant output at every Runge-Kutta stage); otherwise samples are taken
    every ``sample_period`` and held.  ``delay`` and ``sample_period`` must
    be integer multiples of the integrator step.
    """

    delay: float = 0.0
    bias: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0
    sample_period: float | None = None

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError("delay must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.sample_period is not None and self.sample_period <= 0:
            raise ValueError("sample_period must be > 0")

    @property
    def is_continuous(self) -> bool:
        return self.sample_period is None and self.delay == 0.0


# --- compiled kernels -------------------------------------------------------


@njit(cache=True)
def control_value(amps, freqs, waves, t):
    u = 0.0
    for i in range(amps.shape[0]):
        if waves[i] == 0:
            u += amps[i] * np.cos(freqs[i] * t)
        else:
            u += amps[i] * np.sin(freqs[i] * t)
    return u


@njit(cache=True)
def neg_i_commutator_into(out, k, rho):
    """out = -i (k rho - rho k)."""
    n = rho.shape[0]
    for a in range(n):
        for b in range(n):
            s = 0j
            for c in range(n):
                s += k[a, c] * rho[c, b] - rho[a, c] * k[c, b]
            out[a, b] = -1j * s


@njit(cache=True)
def plant_rhs_into(out, scratch, rho, ham, mu, u):
    n = rho.shape[0]
    for a in range(n):
        for b in range(n):
            scratch[a, b] = ham[a, b] + u * mu[a, b]
    neg_i_commutator_into(out, scratch, rho)


@njit(cache=True)
def populations_into(out, rho):
    for j in range(rho.shape[0]):
        out[j] = rho[j, j].real


# --- public operations -------------------------------------------------------


def true_rhs(rho: np.ndarray, t: float, system: QuantumSystem, field: ControlField, w: float = 0.0) -> np.ndarray:
    """``-i[H + u(t) mu, rho]`` with ``u`` the applied (possibly noisy) field."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != system.hamiltonian.shape:
        raise DimensionError(f"rho {rho.shape} does not match system dim {system.dim}")
    out = np.empty_like(rho)
    plant_rhs_into(out, np.empty_like(rho), rho, system.hamiltonian, system.dipole, field_value(field, t, w))
    return out


def populations(rho: np.ndarray) -> np.ndarray:
    return np.diag(np.asarray(rho)).real.copy()


def field_value(field: ControlField, t: float, w: float = 0.0) -> float:
    """Field at time ``t``; ``w`` is the standard normal draw for this step."""
    amps, freqs, waves = field.arrays()
    return control_value(amps, freqs, waves, float(t)) + field.noise_sigma * w


def noise_stream(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


@dataclass
class OutputHistory:
    """Ring buffer of clean population vectors on the integrator grid."""

    step: float
    capacity: int
    _buf: deque = field(init=False, repr=False)

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        self._buf = deque(maxlen=self.capacity)

    def push(self, pops: np.ndarray) -> None:
        self._buf.append(np.array(pops, dtype=float))

    def __len__(self) -> int:
        return len(self._buf)

    def delayed(self, delay: float) -> np.ndarray:
        lag = steps_in(delay, self.step, "delay")
        if lag >= len(self._buf):
            raise InsufficientHistoryError()
        return self._buf[-1 - lag].copy()


def steps_in(duration: float, step: float, name: str = "duration") -> int:
    """Number of integrator steps in ``duration``; it must be a whole number."""
    ratio = duration / step
    n = int(round(ratio))
    if abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ValueError(f"{name}={duration!r} is not a multiple of the step {step!r}")
    return n


def measured_output(history: OutputHistory, model: MeasurementModel, noise=None) -> np.ndarray:
    """Readout per ``model``: delayed populations + bias + sigma * noise."""
    y = history.delayed(model.delay) + model.bias
    if model.noise_sigma and noise is not None:
        y = y + model.noise_sigma * np.asarray(noise, dtype=float)
    return y
