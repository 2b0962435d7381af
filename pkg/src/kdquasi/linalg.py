"""Dense complex linear algebra for small Hermitian problems.

Matrices are plain ``numpy`` ``complex128`` arrays of shape ``(d, d)`` in
C (row-major) order. The eigensolver is a cyclic complex Jacobi iteration,
which is accurate to machine precision for the dimensions used here
(d <= 32) and needs nothing beyond elementwise numpy arithmetic.
"""

from __future__ import annotations

import math

import numpy as np

from .config import DEFAULT_TOL, Tolerances


class DimensionError(ValueError):
    pass


class NotHermitianError(ValueError):
    pass


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite square complex128 array (copy if needed)."""
    m = np.array(a, dtype=np.complex128, order="C")
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimensionError(f"{name} must be a nonempty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return m


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def matmul(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    _check_same_dim(a, b)
    return a @ b


def dagger(a) -> np.ndarray:
    return np.ascontiguousarray(np.conj(np.asarray(a, dtype=np.complex128)).T)


def trace(a) -> complex:
    return complex(np.trace(np.asarray(a, dtype=np.complex128)))


def hermiticity_defect(a: np.ndarray) -> float:
    """Largest entrywise magnitude of ``a - a^dagger``."""
    return float(np.max(np.abs(a - a.conj().T)))


def check_hermitian(a: np.ndarray, tol: float = DEFAULT_TOL.hermitian) -> None:
    defect = hermiticity_defect(a)
    if defect > tol:
        i, j = np.unravel_index(np.argmax(np.abs(a - a.conj().T)), a.shape)
        raise NotHermitianError(
            f"matrix is not Hermitian: |a - a^dagger| = {defect:.3e} at entry ({i}, {j}) exceeds {tol:.1e}"
        )


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(off.real**2 + off.imag**2)))


def hermitian_eig(a, tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ``w`` ascending and the eigenvectors
    as the columns of the unitary ``v``, so that ``a = v @ diag(w) @ v^dagger``.

    Each rotation first removes the phase of the pivot ``a[p, q]`` with a
    diagonal unitary and then applies the real symmetric Jacobi rotation
    that annihilates the (now real) pivot.
    """
    a = as_matrix(a)
    check_hermitian(a, tol.hermitian)
    n = a.shape[0]
    # symmetrize so rounding in the input cannot leak into the iteration
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=np.complex128)
    threshold = tol.jacobi_off * max(1.0, float(np.linalg.norm(a)))

    for _ in range(tol.jacobi_max_sweeps):
        if _off_norm(a) < threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-300:
                    continue
                phase = apq / r  # e^{i theta}
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * r)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                cph = phase.conjugate()
                # A <- J^dagger A J with J = [[c, s], [-s e^{-i th}, c e^{-i th}]];
                # only columns p, q change outside the pivot block, rows follow by symmetry
                colp = a[:, p].copy()
                colq = a[:, q] * cph
                newp = c * colp - s * colq
                newq = s * colp + c * colq
                a[:, p] = newp
                a[:, q] = newq
                a[p, :] = newp.conj()
                a[q, :] = newq.conj()
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * r
                a[q, q] = aqq + t * r
                vp = v[:, p].copy()
                vq = v[:, q] * cph
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq

    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], np.ascontiguousarray(v[:, order])


def eigvalsh(a, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    return hermitian_eig(a, tol)[0]


def is_psd(a, tol: float = DEFAULT_TOL.psd, tolerances: Tolerances = DEFAULT_TOL) -> bool:
    """True iff the smallest eigenvalue of Hermitian ``a`` is at least ``-tol``."""
    w, _ = hermitian_eig(a, tolerances)
    return bool(w[0] >= -tol)


def hermitian_function(a, func, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum."""
    w, v = hermitian_eig(a, tol)
    return (v * func(w)) @ v.conj().T


def inv_sqrt_psd(a, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``a^{-1/2}`` for positive definite ``a``; eigenvalues are floored at ``tol.eig_floor``."""
    return hermitian_function(a, lambda w: 1.0 / np.sqrt(np.maximum(w, tol.eig_floor)), tol)


def expi_hermitian(h, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """The unitary ``exp(i h)`` for Hermitian ``h``."""
    return hermitian_function(h, lambda w: np.exp(1j * w), tol)
