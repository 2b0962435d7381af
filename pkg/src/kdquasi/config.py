"""Numerical tolerances shared by every validation and bound check."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    """Central record of all validation tolerances.

    Every validated type and every bound check reads its cutoff from one of
    these fields; callers override by passing a modified copy
    (``DEFAULT_TOL.with_bound(1e-8)`` or ``dataclasses.replace``).
    """

    hermitian: float = 1e-10
    psd: float = 1e-9
    trace: float = 1e-10
    completeness: float = 1e-9
    projective: float = 1e-9
    unit_sum: float = 1e-9
    modulus: float = 1e-9
    bound: float = 1e-9
    support: float = 1e-9
    # Jacobi sweep stops when the off-diagonal Frobenius norm drops below this
    # (scaled by max(1, ||A||_F)) or after max_sweeps.
    jacobi_off: float = 1e-13
    jacobi_max_sweeps: int = 100
    eig_floor: float = 1e-12

    def with_bound(self, tol: float) -> "Tolerances":
        if not tol > 0:
            raise ValueError(f"tolerance must be positive, got {tol}")
        return replace(self, bound=tol)


DEFAULT_TOL = Tolerances()
