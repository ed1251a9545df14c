"""Small dense complex linear-algebra kernel.

Hermitian eigendecomposition by cyclic complex Jacobi rotations, PSD
projection and Rayleigh quotients.  Matrices here are tiny (a few dozen
rows at most), so robustness and determinism win over speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

# Centralized numerical tolerances.
HERMITIAN_ATOL = 1e-12     # entry-wise Hermitian symmetry check
RECON_RTOL = 1e-10         # ||A - V L V^H||_F relative to ||A||_F
PSD_EIG_FLOOR = -1e-10     # smallest admissible eigenvalue of a "PSD" output
_JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class EigDecomposition:
    """Eigenvalues in ascending order; eigenvectors as unitary columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _check_hermitian(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {a.shape}")
    if not (np.all(np.isfinite(a.real)) and np.all(np.isfinite(a.imag))):
        raise ContractViolation("matrix has non-finite entries")
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a - a.conj().T).max() > HERMITIAN_ATOL * scale:
        raise ContractViolation("matrix is not Hermitian within tolerance")
    return a


def hermitian_eig(a) -> EigDecomposition:
    """Diagonalize a Hermitian matrix with cyclic Jacobi rotations.

    Returns ascending eigenvalues and orthonormal eigenvectors whose
    largest-magnitude entry is made real-positive so results are
    deterministic across runs.
    """
    a = _check_hermitian(a)
    n = a.shape[0]
    work = a.copy()
    vecs = np.eye(n, dtype=np.complex128)
    scale = max(np.linalg.norm(work), 1e-300)
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.abs(work - np.diag(np.diag(work))) ** 2))
        if off <= 1e-14 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                mag = abs(apq)
                if mag <= 1e-16 * scale:
                    continue
                phase = apq / mag
                theta = 0.5 * np.arctan2(2.0 * mag, (work[p, p] - work[q, q]).real)
                c, s = np.cos(theta), np.sin(theta)
                # Column update: A <- A U with U[p,p]=U[q,q]=c,
                # U[q,p]=s*conj(phase), U[p,q]=-s*phase.
                col_p = work[:, p].copy()
                work[:, p] = c * col_p + s * np.conj(phase) * work[:, q]
                work[:, q] = -s * phase * col_p + c * work[:, q]
                row_p = work[p, :].copy()
                work[p, :] = c * row_p + s * phase * work[q, :]
                work[q, :] = -s * np.conj(phase) * row_p + c * work[q, :]
                vcol_p = vecs[:, p].copy()
                vecs[:, p] = c * vcol_p + s * np.conj(phase) * vecs[:, q]
                vecs[:, q] = -s * phase * vcol_p + c * vecs[:, q]
    vals = np.real(np.diag(work))
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    vecs = vecs[:, order]
    # Fix each eigenvector's phase: largest-magnitude entry real-positive.
    for j in range(n):
        i = int(np.argmax(np.abs(vecs[:, j])))
        pivot = vecs[i, j]
        if abs(pivot) > 0:
            vecs[:, j] *= np.conj(pivot) / abs(pivot)
    return EigDecomposition(eigenvalues=vals, eigenvectors=vecs)


def psd_project(s) -> np.ndarray:
    """Frobenius-nearest PSD matrix: clip negative eigenvalues to zero.

    Uses LAPACK's Hermitian solver: this projection sits in solver hot
    loops and carries no eigenvector-ordering contract of its own.
    """
    s = _check_hermitian(s)
    vals, vecs = np.linalg.eigh(s)
    out = (vecs * np.maximum(vals, 0.0)) @ vecs.conj().T
    return 0.5 * (out + out.conj().T)


def rayleigh_quotient(m, a) -> float:
    """(m^H A m) / (m^H m) for Hermitian A; lies within A's eigenvalue range."""
    a = _check_hermitian(a)
    m = np.asarray(m, dtype=np.complex128).reshape(-1)
    if m.shape[0] != a.shape[0]:
        raise ContractViolation("vector/matrix dimension mismatch")
    denom = float(np.real(np.vdot(m, m)))
    if denom <= 0.0:
        raise ContractViolation("Rayleigh quotient of the zero vector")
    return float(np.real(np.vdot(m, a @ m)) / denom)


def principal_eigenvector(a) -> tuple[np.ndarray, float]:
    """Unit eigenvector of the largest eigenvalue, with that eigenvalue.

    LAPACK-backed (hot path); the phase convention matches hermitian_eig
    so either route yields the same vector.
    """
    a = _check_hermitian(a)
    vals, vecs = np.linalg.eigh(a)
    v = vecs[:, -1]
    i = int(np.argmax(np.abs(v)))
    if abs(v[i]) > 0:
        v = v * (np.conj(v[i]) / abs(v[i]))
    return v / np.linalg.norm(v), float(vals[-1])
