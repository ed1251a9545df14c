import numpy as np
import pytest

from airdlr import numkit
from airdlr.errors import ContractViolation


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


def test_reconstruction_oracle():
    rng = np.random.default_rng(0)
    for n in range(1, 13):
        a = random_hermitian(rng, n)
        dec = numkit.hermitian_eig(a)
        assert np.linalg.norm(dec.reconstruct() - a) <= 1e-10 * max(
            np.linalg.norm(a), 1.0
        )


def test_eigenvalues_match_lapack():
    # The Jacobi route must agree with the independent LAPACK route.
    rng = np.random.default_rng(1)
    for n in (2, 3, 5, 8, 16):
        a = random_hermitian(rng, n)
        vals = numkit.hermitian_eig(a).eigenvalues
        assert np.allclose(vals, np.linalg.eigvalsh(a), atol=1e-10)


def test_eigenvalues_sorted_vectors_orthonormal():
    rng = np.random.default_rng(2)
    a = random_hermitian(rng, 7)
    dec = numkit.hermitian_eig(a)
    assert np.all(np.diff(dec.eigenvalues) >= -1e-12)
    gram = dec.eigenvectors.conj().T @ dec.eigenvectors
    assert np.allclose(gram, np.eye(7), atol=1e-10)


def test_deterministic_phase():
    rng = np.random.default_rng(3)
    a = random_hermitian(rng, 5)
    v1 = numkit.hermitian_eig(a).eigenvectors
    v2 = numkit.hermitian_eig(a.copy()).eigenvectors
    assert np.array_equal(v1, v2)
    for j in range(5):
        i = int(np.argmax(np.abs(v1[:, j])))
        assert abs(v1[i, j].imag) < 1e-12 and v1[i, j].real > 0


def test_diagonal_matrix_trivial():
    dec = numkit.hermitian_eig(np.diag([3.0, -1.0, 2.0]))
    assert np.allclose(dec.eigenvalues, [-1.0, 2.0, 3.0])


def test_psd_project_matches_eigen_clip():
    # Oracle: clip negatives through the independently tested Jacobi route.
    rng = np.random.default_rng(4)
    for n in (2, 4, 6):
        a = random_hermitian(rng, n)
        dec = numkit.hermitian_eig(a)
        clipped = (dec.eigenvectors * np.maximum(dec.eigenvalues, 0.0)) \
            @ dec.eigenvectors.conj().T
        proj = numkit.psd_project(a)
        assert np.linalg.norm(proj - clipped) < 1e-10
        assert np.linalg.eigvalsh(proj).min() >= numkit.PSD_EIG_FLOOR


def test_psd_project_fixed_point_on_psd_input():
    rng = np.random.default_rng(5)
    b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    a = b @ b.conj().T
    assert np.linalg.norm(numkit.psd_project(a) - a) < 1e-10


def test_rayleigh_quotient_within_eigenvalue_range():
    rng = np.random.default_rng(6)
    a = random_hermitian(rng, 6)
    dec = numkit.hermitian_eig(a)
    for _ in range(200):
        m = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        q = numkit.rayleigh_quotient(m, a)
        assert dec.eigenvalues[0] - 1e-10 <= q <= dec.eigenvalues[-1] + 1e-10


def test_principal_eigenvector():
    rng = np.random.default_rng(7)
    a = random_hermitian(rng, 5)
    v, lam = numkit.principal_eigenvector(a)
    assert abs(np.linalg.norm(v) - 1.0) < 1e-12
    assert np.linalg.norm(a @ v - lam * v) < 1e-8
    assert abs(lam - np.linalg.eigvalsh(a)[-1]) < 1e-10


def test_non_hermitian_rejected():
    with pytest.raises(ContractViolation):
        numkit.hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ContractViolation):
        numkit.hermitian_eig(np.ones((2, 3)))
    with pytest.raises(ContractViolation):
        numkit.hermitian_eig(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_rayleigh_quotient_contracts():
    a = np.eye(3)
    with pytest.raises(ContractViolation):
        numkit.rayleigh_quotient(np.zeros(3), a)
    with pytest.raises(ContractViolation):
        numkit.rayleigh_quotient(np.ones(2), a)
