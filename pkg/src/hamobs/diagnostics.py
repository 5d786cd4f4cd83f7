"""Lyapunov monitors, convergence metrics, Rabi spectra and identifiability checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .linalg import commutator, generalized_pauli, hermitian_eigendecompose, projector
from .system import dipole_from_theta, level_pairs

# Default tolerances, gathered in one place.
TOLERANCES = {
    "identifiability": 1e-9,
    "degenerate_rabi": 1e-6,
    "convergence": 0.05,
}


def lyapunov_2level(y: float, y_hat: float, theta: float, theta_hat: float, gamma: float) -> float:
    """``(y - yhat)^2 / 2 + (theta - theta_hat)^2 / (2 gamma)``."""
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    return 0.5 * (y - y_hat) ** 2 + (theta - theta_hat) ** 2 / (2 * gamma)


def lyapunov_N(xi, xi_hat, theta, theta_hat, gamma) -> float:
    """``sum_n tr(P_n (xi_hat - xi))^2 / 2 + sum_lk 2 (theta_hat - theta)^2 / gamma``."""
    xi, xi_hat = np.asarray(xi), np.asarray(xi_hat)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    theta_hat = np.atleast_1d(np.asarray(theta_hat, dtype=float))
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), theta.shape)
    n = xi.shape[0]
    if xi.shape != xi_hat.shape or theta.shape != theta_hat.shape or theta.size != n * (n - 1) // 2:
        raise DimensionError("inconsistent state or parameter dimensions")
    if np.any(gamma <= 0):
        raise ValueError("gamma must be > 0")
    d = np.diag(xi_hat - xi).real
    return float(0.5 * np.sum(d ** 2) + np.sum(2 * (theta_hat - theta) ** 2 / gamma))


def two_level_rate(theta: float, u: float, rho, rho_hat, Gamma: float) -> float:
    """Closed-form ``dV/dt`` of the two-level Lyapunov function, first level measured.

    ``i theta u tr(P[mu, rho_hat - rho]) e - 2 Gamma e^2 yhat (1 - yhat)`` with
    ``mu = sigma_x`` and ``P = |1><1|``.
    """
    rho, rho_hat = np.asarray(rho), np.asarray(rho_hat)
    p = projector(1, 2)
    mu = generalized_pauli(1, 2, "x", 2)
    y, yh = rho[0, 0].real, rho_hat[0, 0].real
    e = y - yh
    drift = (1j * theta * u * np.trace(p @ commutator(mu, rho_hat - rho)) * e).real
    return float(drift + dissipation_term(e, yh, Gamma))


def dissipation_term(e, y_hat, Gamma: float):
    """``-2 Gamma e^2 yhat (1 - yhat)``; non-positive whenever ``yhat`` is in [0, 1]."""
    e, y_hat = np.asarray(e, dtype=float), np.asarray(y_hat, dtype=float)
    return -2.0 * Gamma * e ** 2 * y_hat * (1.0 - y_hat)


def lyapunov_rate_residual(times, V, dVdt) -> float:
    """Max gap between the analytic rate and the centered difference of ``V``."""
    t = np.asarray(times, dtype=float)
    V = np.asarray(V, dtype=float)
    dVdt = np.asarray(dVdt, dtype=float)
    if t.size < 3:
        raise ValueError("window too short: need at least 3 samples")
    fd = (V[2:] - V[:-2]) / (t[2:] - t[:-2])
    return float(np.max(np.abs(dVdt[1:-1] - fd)))


def windowed_means(times, values, window: float) -> np.ndarray:
    """Means of ``values`` over consecutive full windows of length ``window``."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if window <= 0:
        raise ValueError("window must be > 0")
    nwin = int(math.floor((t[-1] - t[0]) / window + 1e-9))
    idx = np.minimum(((t - t[0]) / window + 1e-9).astype(int), nwin)
    return np.array([v[idx == w].mean() for w in range(nwin) if np.any(idx == w)])


@dataclass(frozen=True)
class RabiReport:
    """Spectrum of ``H_eff = sum (A_lk theta_lk / 2) sigma_x^{lk}``."""

    Omega: np.ndarray
    min_gap: float
    max_gap: float
    degenerate: bool
    gain_margin: dict = field(default_factory=dict)


def effective_hamiltonian(amplitudes, theta) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    amps = np.broadcast_to(np.asarray(amplitudes, dtype=float), theta.shape)
    dim = int(round((1 + math.sqrt(1 + 8 * theta.size)) / 2))
    if dim * (dim - 1) // 2 != theta.size:
        raise DimensionError(f"{theta.size} couplings do not fill an upper triangle")
    return dipole_from_theta(amps * theta / 2, dim)


def rabi_analysis(amplitudes, theta, Gamma: float | None = None, gamma=None) -> RabiReport:
    """Rabi frequencies, their minimal and maximal gaps, and gain margins.

    ``gain_margin`` holds ``Gamma / min_gap`` and ``max(gamma) / min_gap``
    when the gains are given; small ratios mean the slow-gain regime holds.
    """
    omega = hermitian_eigendecompose(effective_hamiltonian(amplitudes, theta)).eigenvalues
    gaps = np.abs(omega[:, None] - omega[None, :])[np.triu_indices(omega.size, 1)]
    min_gap, max_gap = float(gaps.min()), float(gaps.max())
    scale = float(np.max(np.abs(omega)))
    degenerate = bool(scale == 0.0 or min_gap < TOLERANCES["degenerate_rabi"] * scale)
    margin = {}
    if Gamma is not None:
        margin["Gamma"] = Gamma / min_gap if min_gap > 0 else math.inf
    if gamma is not None:
        g = float(np.max(gamma))
        margin["gamma"] = g / min_gap if min_gap > 0 else math.inf
    return RabiReport(omega, min_gap, max_gap, degenerate, margin)


@dataclass(frozen=True)
class IdentifiabilityReport:
    a2_ok: bool
    a3_ok: bool
    a1_connected: bool
    min_transition_gap: float


def _connected(adj: np.ndarray) -> bool:
    n = adj.shape[0]
    seen = {0}
    stack = [0]
    while stack:
        a = stack.pop()
        for b in np.flatnonzero(adj[a]):
            if b not in seen:
                seen.add(int(b))
                stack.append(int(b))
    return len(seen) == n


def check_identifiability(omega, mu, tol: float | None = None) -> IdentifiabilityReport:
    """Evaluate the non-degenerate-transition, zero-diagonal and
    coupling-connectivity conditions.

    A zero transition (two equal energies) also fails the transition test.
    The connectivity test is the graph surrogate for controllability.
    """
    tol = TOLERANCES["identifiability"] if tol is None else tol
    omega = np.asarray(omega, dtype=float)
    mu = np.asarray(mu)
    n = omega.size
    if mu.shape != (n, n):
        raise DimensionError(f"mu {mu.shape} does not match {n} levels")
    trans = np.array([abs(omega[l] - omega[k]) for l, k in level_pairs(n)])
    if trans.size > 1:
        diffs = np.abs(trans[:, None] - trans[None, :])[np.triu_indices(trans.size, 1)]
        gap = float(diffs.min())
    else:
        gap = math.inf
    a2 = bool(gap > tol and trans.min() > tol)
    a3 = bool(np.max(np.abs(np.diag(mu))) <= tol)
    adj = np.abs(mu) > tol
    np.fill_diagonal(adj, False)
    return IdentifiabilityReport(a2, a3, _connected(adj), gap)


def eigenbasis_dipole(hamiltonian, mu) -> np.ndarray:
    """``mu`` expressed in the eigenbasis of ``hamiltonian``."""
    e = hermitian_eigendecompose(hamiltonian).vectors
    return e @ np.asarray(mu) @ e.conj().T


@dataclass(frozen=True)
class ConvergenceMetrics:
    final_error: np.ndarray
    max_final_error: float
    max_error: float
    time_to_tolerance: float | None
    decay_rate: float | None
    tolerance: float

    def as_dict(self) -> dict:
        return {
            "final_error": [float(x) for x in self.final_error],
            "max_final_error": self.max_final_error,
            "max_error": self.max_error,
            "time_to_tolerance": self.time_to_tolerance,
            "decay_rate": self.decay_rate,
            "tolerance": self.tolerance,
        }


def envelope_decay_rate(times, err, window: float) -> float | None:
    """Least-squares slope of ``log`` of the per-window peak of ``err``, negated."""
    t = np.asarray(times, dtype=float)
    err = np.asarray(err, dtype=float)
    if t.size < 2 or window <= 0:
        return None
    idx = ((t - t[0]) / window).astype(int)
    centers, peaks = [], []
    for w in np.unique(idx):
        sel = idx == w
        if sel.sum() < 1:
            continue
        centers.append(t[sel].mean())
        peaks.append(err[sel].max())
    peaks = np.array(peaks)
    centers = np.array(centers)
    good = peaks > 0
    if good.sum() < 2:
        return None
    slope = np.polyfit(centers[good], np.log(peaks[good]), 1)[0]
    return float(-slope)


def convergence_metrics(times, theta_hat, truth, tol: float | None = None,
                        window: float | None = None) -> ConvergenceMetrics:
    """Final, maximal and time-to-tolerance errors of the coupling estimates.

    ``time_to_tolerance`` is the first recorded time after which the largest
    coupling error stays below ``tol``; ``None`` means it was never reached.
    """
    tol = TOLERANCES["convergence"] if tol is None else tol
    t = np.asarray(times, dtype=float)
    th = np.asarray(theta_hat, dtype=float).reshape(t.size, -1)
    err = np.abs(th - np.asarray(truth, dtype=float)[None, :])
    worst = err.max(axis=1)
    bad = np.flatnonzero(worst >= tol)
    if bad.size == 0:
        ttt = float(t[0])
    elif bad[-1] == t.size - 1:
        ttt = None
    else:
        ttt = float(t[bad[-1] + 1])
    if window is None:
        window = (t[-1] - t[0]) / 20 if t.size > 1 else 0.0
    return ConvergenceMetrics(
        final_error=err[-1], max_final_error=float(err[-1].max()), max_error=float(worst.max()),
        time_to_tolerance=ttt, decay_rate=envelope_decay_rate(t, worst, window), tolerance=tol,
    )
