import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_hermitian
from hamobs.errors import DimensionError
from hamobs.linalg import (
    commutator,
    expm_antihermitian,
    generalized_pauli,
    hermitian_eigendecompose,
    is_hermitian,
    pauli,
    projector,
    unitary_conjugate,
)
from hamobs.scenario import FOUR_LEVEL_GENERATOR, FOUR_LEVEL_H, FOUR_LEVEL_SPECTRUM, four_level_basis_change


def test_pauli_commutation():
    sx, sy, sz = pauli("x"), pauli("y"), pauli("z")
    assert np.allclose(commutator(sx, sy), 2j * sz)
    assert np.allclose(commutator(sy, sz), 2j * sx)
    assert np.allclose(commutator(sz, sx), 2j * sy)
    for s in (sx, sy, sz):
        assert np.allclose(s @ s, np.eye(2))


def test_pauli_bad_axis():
    with pytest.raises(ValueError):
        pauli("w")


def test_generalized_pauli_two_level_matches_pauli():
    for axis in "xyz":
        assert np.array_equal(generalized_pauli(1, 2, axis, 2), pauli(axis))


def test_generalized_pauli_entries():
    sx = generalized_pauli(1, 3, "x", 3)
    assert sx[0, 2] == sx[2, 0] == 1 and np.count_nonzero(sx) == 2
    sy = generalized_pauli(2, 3, "y", 3)
    assert sy[1, 2] == -1j and sy[2, 1] == 1j
    sz = generalized_pauli(1, 2, "z", 4)
    assert np.array_equal(np.diag(sz), [1, -1, 0, 0])
    assert np.array_equal(np.diag(generalized_pauli(2, 4, "I", 4)), [0, 1, 0, 1])


@pytest.mark.parametrize("args", [(2, 1, "x", 3), (1, 1, "x", 3), (1, 4, "x", 3), (0, 1, "x", 3), (1, 2, "q", 3)])
def test_generalized_pauli_rejects(args):
    with pytest.raises(ValueError):
        generalized_pauli(*args)


@pytest.mark.parametrize("dim", [2, 3, 4, 5])
def test_generalized_pauli_algebra_exhaustive(dim):
    # each transition closes an su(2): [sx, sy] = 2i sz, squares give the identity on the pair
    for l in range(1, dim + 1):
        for k in range(l + 1, dim + 1):
            sx, sy, sz, one = (generalized_pauli(l, k, a, dim) for a in "xyzI")
            assert np.allclose(commutator(sx, sy), 2j * sz)
            assert np.allclose(commutator(sy, sz), 2j * sx)
            assert np.allclose(commutator(sz, sx), 2j * sy)
            for s in (sx, sy, sz):
                assert is_hermitian(s)
                assert np.allclose(s @ s, one)
                assert np.trace(s) == 0


def test_projector():
    p = projector(2, 3)
    assert p[1, 1] == 1 and np.count_nonzero(p) == 1
    assert np.allclose(sum(projector(j, 3) for j in (1, 2, 3)), np.eye(3))
    with pytest.raises(ValueError):
        projector(4, 3)


def test_commutator_dimension_mismatch():
    with pytest.raises(DimensionError):
        commutator(np.eye(2), np.eye(3))


def test_eigendecompose_sigma_x():
    dec = hermitian_eigendecompose(pauli("x"))
    assert np.allclose(dec.eigenvalues, [-1, 1])
    assert np.allclose(dec.reconstruct(), pauli("x"))
    # real input gives real vectors with a positive leading entry
    assert np.all(dec.vectors.imag == 0)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 6), seed=st.integers(0, 2 ** 32 - 1))
def test_eigenvector_phase_convention(n, seed):
    dec = hermitian_eigendecompose(random_hermitian(np.random.default_rng(seed), n))
    for row in dec.vectors:
        v = row.conj()
        lead = v[np.flatnonzero(np.abs(v) > 1e-12)[0]]
        assert abs(lead.imag) < 1e-12 and lead.real > 0


def test_eigendecompose_rejects():
    with pytest.raises(ValueError):
        hermitian_eigendecompose(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(DimensionError):
        hermitian_eigendecompose(np.eye(17))
    with pytest.raises(DimensionError):
        hermitian_eigendecompose(np.ones((2, 3)))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 16), seed=st.integers(0, 2 ** 32 - 1))
def test_eigendecompose_matches_lapack(n, seed):
    m = random_hermitian(np.random.default_rng(seed), n)
    dec = hermitian_eigendecompose(m)
    assert np.allclose(dec.eigenvalues, np.linalg.eigvalsh(m), atol=1e-10)
    assert np.allclose(dec.reconstruct(), m, atol=1e-10)
    assert np.allclose(dec.vectors @ dec.vectors.conj().T, np.eye(n), atol=1e-10)


def test_eigendecompose_degenerate():
    m = np.diag([1.0, 1.0, 2.0]).astype(complex)
    dec = hermitian_eigendecompose(m)
    assert np.allclose(dec.eigenvalues, [1, 1, 2])
    assert np.allclose(dec.reconstruct(), m)


def test_four_level_spectrum():
    dec = hermitian_eigendecompose(np.array(FOUR_LEVEL_H, dtype=complex))
    # the printed entries carry four decimals
    assert np.allclose(dec.eigenvalues, FOUR_LEVEL_SPECTRUM, atol=1e-3)


def test_four_level_basis_change_reproduces_printed_h():
    p = four_level_basis_change()
    assert np.allclose(p @ p.conj().T, np.eye(4), atol=1e-12)
    h = p @ np.diag(FOUR_LEVEL_SPECTRUM) @ np.linalg.inv(p)
    assert np.max(np.abs(h - np.array(FOUR_LEVEL_H))) <= 1e-3


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 8), seed=st.integers(0, 2 ** 32 - 1))
def test_expm_matches_scipy(n, seed):
    k = 1j * random_hermitian(np.random.default_rng(seed), n)
    u = expm_antihermitian(k)
    assert np.allclose(u, scipy.linalg.expm(k), atol=1e-10)
    assert np.allclose(u @ u.conj().T, np.eye(n), atol=1e-10)


def test_expm_generator():
    k = np.array(FOUR_LEVEL_GENERATOR, dtype=complex)
    assert np.allclose(expm_antihermitian(k), scipy.linalg.expm(k), atol=1e-12)
    with pytest.raises(ValueError):
        expm_antihermitian(np.eye(2))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 6), t=st.floats(-10, 10), seed=st.integers(0, 2 ** 32 - 1))
def test_unitary_conjugate_matches_scipy(n, t, seed):
    rng = np.random.default_rng(seed)
    g = random_hermitian(rng, n)
    rho = random_hermitian(rng, n)
    u = scipy.linalg.expm(1j * g * t)
    out = unitary_conjugate(rho, g, t)
    assert np.allclose(out, u @ rho @ u.conj().T, atol=1e-9)
    assert abs(np.trace(out) - np.trace(rho)) < 1e-9
