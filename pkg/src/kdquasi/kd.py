"""Kirkwood-Dirac quasiprobabilities and the bounds they obey.

``q[x1, ..., xn] = tr(rho E_{x1} ... E_{xn})`` with the operator product
taken in the order the measurements are listed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from . import linalg
from .config import DEFAULT_TOL, Tolerances
from .quantum import DensityMatrix, Povm, ValidationError, matrix_to_json
from .report import BoundReport

DEFAULT_ALPHAS = (2.0, 3.0, 4.5)


class WitnessInconsistency(RuntimeError):
    """The entrywise and l1 nonclassicality tests disagree beyond tolerance."""


@dataclass(frozen=True, eq=False)
class KdDistribution:
    table: np.ndarray
    state_ref: str = ""
    measurement_refs: tuple[str, ...] = ()
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        t = np.array(self.table, dtype=np.complex128)
        if t.ndim < 2:
            raise ValidationError(f"KD table needs at least 2 indices, got shape {t.shape}")
        if not np.all(np.isfinite(t)):
            raise ValidationError("KD table contains NaN or Inf")
        total = complex(t.sum())
        if abs(total - 1.0) >= self.tol.unit_sum:
            raise ValidationError(f"KD table sums to {total}, not 1")
        biggest = float(np.max(np.abs(t)))
        if biggest > 1.0 + self.tol.modulus:
            raise ValidationError(f"KD entry modulus {biggest} exceeds 1")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "measurement_refs", tuple(self.measurement_refs))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.table.shape

    @property
    def n_measurements(self) -> int:
        return self.table.ndim

    @property
    def size(self) -> int:
        """Total number of outcome tuples."""
        return self.table.size

    @cached_property
    def moduli(self) -> np.ndarray:
        t = self.table
        return np.sqrt(t.real**2 + t.imag**2)

    @cached_property
    def marginals(self) -> "MarginalSet":
        return marginals(self)

    @property
    def l1(self) -> float:
        return float(self.moduli.sum())

    @property
    def l2(self) -> float:
        """Sum of squared moduli."""
        return float(np.sum(self.moduli**2))

    def l_alpha(self, alpha: float) -> float:
        return float(np.sum(self.moduli**alpha))

    def grouped(self, k: int) -> np.ndarray:
        """2-index table with the first ``k`` indices merged into rows and the rest into columns."""
        if not 1 <= k < self.n_measurements:
            raise ValueError(f"split point must lie in [1, {self.n_measurements - 1}], got {k}")
        rows = int(np.prod(self.dims[:k]))
        return self.table.reshape(rows, -1)

    def to_json(self) -> dict:
        return {
            "kind": "kd",
            "dims": list(self.dims),
            "entries": [[float(z.real), float(z.imag)] for z in self.table.ravel()],
            "state_ref": self.state_ref,
            "measurement_refs": list(self.measurement_refs),
        }

    @classmethod
    def from_json(cls, obj: dict, tol: Tolerances = DEFAULT_TOL) -> "KdDistribution":
        dims = tuple(int(n) for n in obj["dims"])
        flat = np.array([complex(re, im) for re, im in obj["entries"]], dtype=np.complex128)
        return cls(flat.reshape(dims), obj.get("state_ref", ""), tuple(obj.get("measurement_refs", ())), tol)


class MarginalSet(tuple):
    """One probability vector per measurement index."""

    def __new__(cls, vectors: Sequence[np.ndarray], tol: Tolerances = DEFAULT_TOL):
        vecs = []
        for k, v in enumerate(vectors):
            v = np.asarray(v, dtype=float)
            if abs(v.sum() - 1.0) >= tol.unit_sum:
                raise ValidationError(f"marginal {k} sums to {v.sum()}")
            if v.min() < -tol.unit_sum or v.max() > 1.0 + tol.unit_sum:
                raise ValidationError(f"marginal {k} has entries outside [0, 1]: {v}")
            v = v.copy()
            v.setflags(write=False)
            vecs.append(v)
        return super().__new__(cls, vecs)


class Witness(NamedTuple):
    nonclassical: bool
    l1: float
    excess: float


# -- construction -----------------------------------------------------------


def _check_dims(rho: DensityMatrix, povms: Sequence[Povm]) -> None:
    for k, p in enumerate(povms):
        if p.dim != rho.dim:
            raise linalg.DimensionError(f"measurement {k} acts on dimension {p.dim}, state on {rho.dim}")


def kd_distribution(rho: DensityMatrix, X: Povm, Y: Povm) -> KdDistribution:
    return kd_distribution_n(rho, (X, Y))


def kd_distribution_n(rho: DensityMatrix, povms: Sequence[Povm]) -> KdDistribution:
    povms = list(povms)
    if not povms:
        raise ValueError("kd_distribution_n needs at least one measurement")
    if len(povms) < 2:
        raise ValueError(f"kd_distribution_n needs at least 2 measurements, got {len(povms)}")
    _check_dims(rho, povms)
    d = rho.dim
    # chain[x1, ..., xk] = rho E_{x1} ... E_{xk}, kept flat over outcome tuples
    chain = np.einsum("ab,xbc->xac", rho.mat, povms[0].elements)
    for p in povms[1:]:
        chain = np.einsum("tab,ybc->tyac", chain, p.elements).reshape(-1, d, d)
    table = np.einsum("taa->t", chain).reshape(tuple(len(p) for p in povms))
    return KdDistribution(table, rho.ref, tuple(p.ref for p in povms), rho.tol)


def marginals(q: KdDistribution) -> MarginalSet:
    vecs = []
    for k in range(q.n_measurements):
        other = tuple(i for i in range(q.n_measurements) if i != k)
        m = q.table.sum(axis=other)
        if np.max(np.abs(m.imag)) >= q.tol.unit_sum:
            raise ValidationError(f"marginal {k} has a nonreal component {m}")
        vecs.append(m.real)
    return MarginalSet(vecs, q.tol)


# -- witnesses ----------------------------------------------------------------


def witness_tests(q: KdDistribution, margin: float) -> tuple[bool, bool]:
    """Both nonclassicality tests at a common margin.

    l1 test: ``sum|q| - 1 > margin``. Entry test: some entry has
    ``|q| - Re q > margin / N``. Since ``sum(|q| - Re q) = sum|q| - 1``
    the first implies the second.
    """
    deficits = q.moduli - q.table.real
    l1_test = q.l1 - 1.0 > margin
    entry_test = bool(np.max(deficits) > margin / q.size)
    return l1_test, entry_test


def nonclassicality_witness(q: KdDistribution, tol: float | None = None) -> Witness:
    tol = q.tol.bound if tol is None else tol
    l1 = q.l1
    l1_test, entry_test = witness_tests(q, tol)
    if l1_test and not entry_test:
        raise WitnessInconsistency(
            f"l1 excess {l1 - 1.0:.3e} above {tol:.1e} but no entry has Re(q) < |q| beyond {tol / q.size:.1e}"
        )
    return Witness(l1_test, l1, l1 - 1.0)


def is_classical(q: KdDistribution, tol: float | None = None) -> bool:
    return not nonclassicality_witness(q, tol).nonclassical


# -- bounds -------------------------------------------------------------------


def _require_pair(q: KdDistribution) -> None:
    if q.n_measurements != 2:
        raise ValueError(f"this check needs a 2-measurement distribution, got {q.n_measurements}")


def max_overlap(X: Povm, Y: Povm) -> float:
    """``max_{x,y} tr(E_x E_y)``."""
    overlaps = np.einsum("xab,yba->xy", X.elements, Y.elements).real
    return float(overlaps.max())


def support_counts(q: KdDistribution, threshold: float = DEFAULT_TOL.support) -> tuple[int, int, int]:
    """Numbers of nonzero X-marginal, Y-marginal and joint entries.

    An entry counts as nonzero when it exceeds ``threshold`` in magnitude.
    """
    _require_pair(q)
    px, py = q.marginals
    n_x = int(np.count_nonzero(np.abs(px) > threshold))
    n_y = int(np.count_nonzero(np.abs(py) > threshold))
    n_xy = int(np.count_nonzero(q.moduli > threshold))
    if not n_xy <= n_x * n_y <= q.size:
        raise AssertionError(f"support counts out of order: n_xy={n_xy}, n_x*n_y={n_x * n_y}, N={q.size}")
    return n_x, n_y, n_xy


def entrywise_bounds_check(q: KdDistribution, tol: float | None = None) -> BoundReport:
    """Per-entry checks against the marginals, reported at the worst entry.

    ``|q_xy|^2 <= p_x p_y`` and ``|q_xy| <= max(p_x, p_y)`` are bounds; the
    classical region ``|q_xy| <= min(p_x, p_y)`` is recorded in the metadata
    only, since KD entries may leave it.
    """
    _require_pair(q)
    tol = q.tol.bound if tol is None else tol
    px, py = q.marginals
    mod = q.moduli
    prod = np.outer(px, py)
    pmax = np.maximum.outer(px, py)
    pmin = np.minimum.outer(px, py)

    report = BoundReport()
    i = np.unravel_index(np.argmin(prod - mod**2), mod.shape)
    report.add("entrywise_product_marginals", mod[i] ** 2, prod[i], tol)
    j = np.unravel_index(np.argmin(pmax - mod), mod.shape)
    report.add("entrywise_max_marginal", mod[j], pmax[j], tol)
    escape = mod - pmin
    k = np.unravel_index(np.argmax(escape), mod.shape)
    report.metadata.update(
        min_marginal_escape=float(escape[k]),
        min_marginal_escape_entry=[int(k[0]), int(k[1])],
        min_marginal_escapes=int(np.count_nonzero(escape > tol)),
    )
    return report


def bound_suite(rho: DensityMatrix, X: Povm, Y: Povm, alpha_list: Sequence[float] = DEFAULT_ALPHAS,
                threshold: float = DEFAULT_TOL.support, tol: float | None = None,
                q: KdDistribution | None = None) -> BoundReport:
    """Evaluate every two-measurement bound on one instance.

    Each inequality is evaluated on its own numbers; nothing is inferred
    from another entry. The purity-only bound applies only when
    ``max tr(E_x E_y) <= 1``; otherwise it is reported as not applicable.
    """
    for a in alpha_list:
        if a < 2:
            raise ValueError(f"alpha must be >= 2, got {a}")
    tol = rho.tol.bound if tol is None else tol
    if q is None:
        q = kd_distribution(rho, X, Y)
    purity = rho.purity
    overlap = max_overlap(X, Y)
    n_x, n_y, n_xy = support_counts(q, threshold)
    N = q.size
    l1, l2 = q.l1, q.l2

    report = entrywise_bounds_check(q, tol)
    report.add("l2_unit", l2, 1.0, tol)
    for a in alpha_list:
        la = q.l_alpha(a)
        report.add(f"l_alpha_le_l2[alpha={a:g}]", la, l2, tol)
        report.add(f"l_alpha_le_unit[alpha={a:g}]", la, 1.0, tol)
    report.add("l2_overlap_purity", l2, overlap * purity, tol)
    report.add("l2_overlap", l2, overlap, tol)
    report.add("l2_purity", l2, purity, tol, applicable=overlap <= 1.0 + tol)
    report.add("l1_sqrt_total", l1, math.sqrt(N), tol)
    report.add("l1_cauchy_support", l1, math.sqrt(n_xy * l2), tol)
    report.add("l1_sqrt_support", l1, math.sqrt(n_xy), tol)
    report.add("support_le_marginal_support", math.sqrt(n_xy), math.sqrt(n_x * n_y), tol)
    report.add("l1_support_overlap_purity", l1, math.sqrt(n_xy * purity * overlap), tol)
    report.add("l1_marginal_support_overlap_purity", l1, math.sqrt(n_x * n_y * purity * overlap), tol)
    report.add("marginal_consistency", marginal_deviation(q, rho, (X, Y)), 0.0, tol)
    report.metadata.update(
        N=N, n_x=n_x, n_y=n_y, n_xy=n_xy, purity=purity, max_overlap=overlap, l1=l1, l2=l2,
    )
    return report


def support_uncertainty_check(rho: DensityMatrix, X: Povm, Y: Povm, threshold: float = DEFAULT_TOL.support,
                              tol: float | None = None) -> BoundReport:
    """``n_x n_y >= max(1, 1 / (tr(rho^2) max tr(E_x E_y)))``."""
    tol = rho.tol.bound if tol is None else tol
    q = kd_distribution(rho, X, Y)
    n_x, n_y, n_xy = support_counts(q, threshold)
    overlap = max_overlap(X, Y)
    lower = max(1.0, 1.0 / (rho.purity * overlap))
    report = BoundReport()
    report.add("support_uncertainty", lower, n_x * n_y, tol)
    report.metadata.update(n_x=n_x, n_y=n_y, n_xy=n_xy, purity=rho.purity, max_overlap=overlap)
    return report


def marginal_deviation(q: KdDistribution, rho: DensityMatrix, povms: Sequence[Povm]) -> float:
    """Largest gap between a table marginal and the Born-rule probability ``tr(rho E)``."""
    return max(float(np.max(np.abs(m - p.probabilities(rho)))) for m, p in zip(q.marginals, povms))


def multi_bound_suite(rho: DensityMatrix, povms: Sequence[Povm], tol: float | None = None,
                      q: KdDistribution | None = None) -> BoundReport:
    """Bounds for a distribution over any number of measurements."""
    tol = rho.tol.bound if tol is None else tol
    if q is None:
        q = kd_distribution_n(rho, povms)
    report = BoundReport()
    report.add("l2_unit", q.l2, 1.0, tol)
    report.add("l1_sqrt_total", q.l1, math.sqrt(q.size), tol)
    report.add("max_modulus_unit", float(q.moduli.max()), 1.0, tol)
    report.add("marginal_consistency", marginal_deviation(q, rho, povms), 0.0, tol)
    report.metadata.update(N=q.size, dims=list(q.dims), purity=rho.purity, l1=q.l1, l2=q.l2)
    return report


def instance_to_json(rho: DensityMatrix, povms: Sequence[Povm]) -> dict:
    return {"state": rho.to_json(), "measurements": [p.to_json() for p in povms]}


def instance_from_json(obj: dict, tol: Tolerances = DEFAULT_TOL) -> tuple[DensityMatrix, list[Povm]]:
    return DensityMatrix.from_json(obj["state"], tol), [Povm.from_json(p, tol) for p in obj["measurements"]]
