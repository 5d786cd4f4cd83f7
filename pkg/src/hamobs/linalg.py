"""Small dense complex linear algebra for Hermitian and density matrices.

Everything here works on plain ``numpy`` arrays of dtype ``complex128``.
Matrices are at most 16x16 in practice, so the eigensolver is a cyclic
complex Jacobi iteration rather than a LAPACK call: it is short, it always
converges for Hermitian input, and it lets us fix the phase convention of
the eigenvectors so downstream Rabi-frame diagnostics are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

HERMITIAN_TOL = 1e-12
MAX_DIM = 16

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(axis: str) -> np.ndarray:
    """Return the 2x2 Pauli matrix for ``axis`` in {"x", "y", "z"}."""
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def generalized_pauli(l: int, k: int, axis: str, dim: int) -> np.ndarray:
    """Pauli-like operator of the ``l <-> k`` transition in a ``dim``-level system.

    Levels are labelled 1..dim as in the usual bra-ket notation, and ``l < k``.
    ``axis`` is one of "x", "y", "z" or "I"::

        x: |l><k| + |k><l|        y: -i|l><k| + i|k><l|
        z: |l><l| - |k><k|        I: |l><l| + |k><k|
    """
    if not 1 <= l < k <= dim:
        raise ValueError(f"need 1 <= l < k <= dim, got l={l}, k={k}, dim={dim}")
    a, b = l - 1, k - 1
    out = np.zeros((dim, dim), dtype=complex)
    if axis == "x":
        out[a, b] = out[b, a] = 1.0
    elif axis == "y":
        out[a, b] = -1j
        out[b, a] = 1j
    elif axis == "z":
        out[a, a], out[b, b] = 1.0, -1.0
    elif axis == "I":
        out[a, a] = out[b, b] = 1.0
    else:
        raise ValueError(f"unknown axis {axis!r}")
    return out


def projector(j: int, dim: int) -> np.ndarray:
    """``|j><j|`` with 1-based level label ``j``."""
    if not 1 <= j <= dim:
        raise ValueError(f"level {j} out of range for dim={dim}")
    out = np.zeros((dim, dim), dtype=complex)
    out[j - 1, j - 1] = 1.0
    return out


def _check_square(*mats: np.ndarray) -> int:
    n = None
    for m in mats:
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {m.shape}")
        if n is None:
            n = m.shape[0]
        elif m.shape[0] != n:
            raise DimensionError(f"dimension mismatch: {n} vs {m.shape[0]}")
    return n


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``[a, b] = ab - ba``."""
    _check_square(a, b)
    return a @ b - b @ a


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


@dataclass(frozen=True)
class EigenDecomposition:
    """``M = vectors^H @ diag(eigenvalues) @ vectors``.

    Row ``j`` of ``vectors`` is the conjugate of the normalized eigenvector
    for ``eigenvalues[j]``; eigenvalues are ascending and the first
    non-negligible component of each eigenvector is real and positive.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        e = self.vectors
        return e.conj().T @ np.diag(self.eigenvalues) @ e


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    apq = a[p, q]
    b = abs(apq)
    if b == 0.0:
        return
    phase = apq / b
    app, aqq = a[p, p].real, a[q, q].real
    tau = (aqq - app) / (2.0 * b)
    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    # G = diag(1, conj(phase)) on (p, q) followed by the real rotation
    # [[c, s], [-s, c]]; a <- G^H a G, v <- v G
    g_pp, g_pq = c, s
    g_qp, g_qq = -s * np.conj(phase), c * np.conj(phase)
    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = col_p * g_pp + col_q * g_qp
    a[:, q] = col_p * g_pq + col_q * g_qq
    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = np.conj(g_pp) * row_p + np.conj(g_qp) * row_q
    a[q, :] = np.conj(g_pq) * row_p + np.conj(g_qq) * row_q
    a[p, q] = a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real
    vp = v[:, p].copy()
    vq = v[:, q].copy()
    v[:, p] = vp * g_pp + vq * g_qp
    v[:, q] = vp * g_pq + vq * g_qq


def hermitian_eigendecompose(m: np.ndarray, max_sweeps: int = 100) -> EigenDecomposition:
    """Cyclic Jacobi eigendecomposition of a Hermitian matrix.

    Real symmetric input yields real eigenvectors.
    """
    m = np.asarray(m, dtype=complex)
    n = _check_square(m)
    if n > MAX_DIM:
        raise DimensionError(f"dimension {n} exceeds supported maximum {MAX_DIM}")
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    if not is_hermitian(m, HERMITIAN_TOL * scale):
        raise ValueError("matrix is not Hermitian")
    a = (m + m.conj().T) / 2
    v = np.eye(n, dtype=complex)
    eps = np.finfo(float).eps
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a[offdiag]) ** 2))
        if off <= eps * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) > eps * scale * 1e-3:
                    _jacobi_rotate(a, v, p, q)
    else:
        raise np.linalg.LinAlgError("Jacobi iteration did not converge")

    w = np.diag(a).real
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]
    for j in range(n):
        col = v[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-12)
        if big.size:
            z = col[big[0]]
            v[:, j] = col * (np.conj(z) / abs(z))
        v[:, j] /= np.linalg.norm(v[:, j])
    if np.all(np.abs(m.imag) == 0.0):
        v = v.real.astype(complex)
    return EigenDecomposition(eigenvalues=w, vectors=v.conj().T)


def unitary_conjugate(rho: np.ndarray, g: np.ndarray, t: float) -> np.ndarray:
    """``exp(iGt) rho exp(-iGt)`` for Hermitian ``G``."""
    _check_square(rho, g)
    dec = hermitian_eigendecompose(g)
    e = dec.vectors
    phases = np.exp(1j * dec.eigenvalues * t)
    u = e.conj().T @ (phases[:, None] * e)
    out = u @ rho @ u.conj().T
    tr_in, tr_out = np.trace(rho), np.trace(out)
    if abs(tr_out - tr_in) > HERMITIAN_TOL * max(1.0, abs(tr_in)):
        raise np.linalg.LinAlgError("unitary conjugation lost trace")
    return out


def expm_antihermitian(k: np.ndarray) -> np.ndarray:
    """Matrix exponential of an anti-Hermitian matrix (a unitary)."""
    k = np.asarray(k, dtype=complex)
    _check_square(k)
    if np.max(np.abs(k + k.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise ValueError("matrix is not anti-Hermitian")
    dec = hermitian_eigendecompose(-1j * k)
    e = dec.vectors
    return e.conj().T @ (np.exp(1j * dec.eigenvalues)[:, None] * e)
