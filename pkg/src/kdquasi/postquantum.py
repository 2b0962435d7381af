"""Postquantum quasiprobabilities: unit-sum tables with entries of modulus at most 1.

Also contains the brute-force check that real 2x2 tables of this kind
never exceed ``sum|l| = 3``, together with the closed-form case analysis
it is cross-checked against.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .quantum import ValidationError
from .report import BoundReport

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True, eq=False)
class QuasiDistribution:
    table: np.ndarray
    tol: Tolerances = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        t = np.array(self.table, dtype=np.complex128)
        if t.ndim != 2 or t.size == 0:
            raise ValidationError(f"postquantum table must be a nonempty 2-index array, got shape {t.shape}")
        if not np.all(np.isfinite(t)):
            raise ValidationError("postquantum table contains NaN or Inf")
        total = complex(t.sum())
        if abs(total - 1.0) >= self.tol.unit_sum:
            raise ValidationError(f"unit-sum constraint violated: entries sum to {total}")
        biggest = float(np.max(np.sqrt(t.real**2 + t.imag**2)))
        if biggest > 1.0 + self.tol.modulus:
            raise ValidationError(f"modulus constraint violated: max |l| = {biggest} > 1")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def dims(self) -> tuple[int, int]:
        return self.table.shape

    @property
    def size(self) -> int:
        return self.table.size

    @property
    def moduli(self) -> np.ndarray:
        t = self.table
        return np.sqrt(t.real**2 + t.imag**2)

    @property
    def l1(self) -> float:
        return float(self.moduli.sum())

    def to_json(self) -> dict:
        return {
            "kind": "postquantum",
            "dims": list(self.dims),
            "entries": [[float(z.real), float(z.imag)] for z in self.table.ravel()],
        }

    @classmethod
    def from_json(cls, obj: dict, tol: Tolerances = DEFAULT_TOL) -> "QuasiDistribution":
        if obj.get("kind", "postquantum") != "postquantum":
            raise ValidationError(f"expected kind 'postquantum', got {obj.get('kind')!r}")
        flat = np.array([complex(re, im) for re, im in obj["entries"]], dtype=np.complex128)
        return cls(flat.reshape([int(n) for n in obj["dims"]]), tol)


@dataclass(frozen=True, eq=False)
class RealQuasiDistribution(QuasiDistribution):
    """Real-valued postquantum table (entries in ``[-1, 1]``)."""

    def __post_init__(self):
        t = np.asarray(self.table)
        if np.iscomplexobj(t) and np.any(t.imag != 0):
            raise ValidationError("real postquantum table has nonzero imaginary parts")
        super().__post_init__()

    @property
    def values(self) -> np.ndarray:
        return self.table.real


def make_quasi(table) -> QuasiDistribution:
    return QuasiDistribution(table)


def quasi_marginals(l: QuasiDistribution) -> tuple[np.ndarray, np.ndarray]:
    """Row and column sums; these need not be probabilities."""
    return l.table.sum(axis=1), l.table.sum(axis=0)


def l1_and_trivial_bound(l: QuasiDistribution, alpha: float = 1.0, tol: float | None = None) -> BoundReport:
    """``sum |l|^alpha <= N`` for ``alpha >= 0``, ``N`` the number of entries."""
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    tol = l.tol.bound if tol is None else tol
    report = BoundReport()
    report.add(f"l_alpha_le_size[alpha={alpha:g}]", float(np.sum(l.moduli**alpha)), float(l.size), tol)
    report.metadata.update(N=l.size, l1=l.l1)
    return report


# -- worked constructions -------------------------------------------------------


def beyond_kd_example() -> QuasiDistribution:
    """Real table whose diagonal entries reach modulus 1 with marginals 1/2."""
    return make_quasi([[1.0, -0.5], [-0.5, 1.0]])


def complex_saturator() -> QuasiDistribution:
    """All four entries have modulus 1, so ``sum|l|^alpha = 4`` for every alpha."""
    w = (1 + 1j * SQRT3) / 2
    return make_quasi([[w, w.conjugate()], [w.conjugate(), -w.conjugate()]])


def one_negative_family(x: float, y: float) -> RealQuasiDistribution:
    """``(-1, x, y, 2 - x - y)``, saturating 3 for ``x, y in [0, 1]``, ``x + y >= 1``."""
    return RealQuasiDistribution(np.array([[-1.0, x], [y, 2.0 - x - y]]))


def two_negative_family(x: float) -> RealQuasiDistribution:
    """``(x, -x - 1, 1, 1)``, saturating 3 for ``x in [-1, 0]``."""
    return RealQuasiDistribution(np.array([[x, -x - 1.0], [1.0, 1.0]]))


# -- real 2x2 case analysis -----------------------------------------------------


class Case(enum.IntEnum):
    ONE_NEGATIVE = 1
    TWO_NEGATIVE = 2
    THREE_NEGATIVE = 3


class CaseResult(NamedTuple):
    case: Case
    l1: float


def appendixB_case_check(l, tol: float = 1e-12) -> CaseResult:
    """Classify a real 2x2 table by its number of negative entries.

    Evaluates the closed form for ``sum|l|`` in that case (using the unit sum
    to eliminate the negative entries) and checks it against the direct sum.

    - one negative ``l_n``: ``1 - 2 l_n``
    - two negatives: ``2 (l_a + l_b) - 1`` over the two nonnegative entries
    - three negatives: ``2 l_p - 1`` for the single nonnegative entry

    ``l`` may also be a bare real array obeying only the unit sum. The
    closed forms need nothing more, and with three negative entries the
    remaining one always exceeds 1, so that case has no table inside
    ``[-1, 1]`` and can only be exercised this way.
    """
    if isinstance(l, QuasiDistribution):
        v = np.asarray(l.table.real, dtype=float).ravel()
    else:
        v = np.asarray(l, dtype=float).ravel()
        if abs(v.sum() - 1.0) >= DEFAULT_TOL.unit_sum:
            raise ValidationError(f"unit-sum constraint violated: entries sum to {v.sum()}")
    if v.size != 4:
        raise ValueError(f"case analysis is for 2x2 tables, got {v.size} entries")
    neg = v < 0
    count = int(neg.sum())
    if count == 0:
        raise ValueError("table has no negative entry; sum|l| = 1 trivially")
    if count == 4:
        raise ValueError("four negative entries cannot have unit sum")
    case = Case(count)
    if case is Case.ONE_NEGATIVE:
        formula = 1.0 - 2.0 * v[neg][0]
    else:
        formula = 2.0 * v[~neg].sum() - 1.0
    direct = float(np.abs(v).sum())
    if abs(formula - direct) > tol:
        raise AssertionError(f"case {count} formula {formula!r} disagrees with direct sum {direct!r}")
    return CaseResult(case, direct)


def sample_case_tables(case: Case, count: int, rng) -> np.ndarray:
    """``count`` random unit-sum real 2x2 tables with exactly ``case`` negative entries.

    Cases 1 and 2 are drawn uniformly from the feasible box by rejection.
    Case 3 is infeasible inside the box; its tables have three entries in
    ``[-1, 0)`` and the fourth, fixed by the unit sum, in ``(1, 4)``.
    """
    from .quantum import make_rng

    rng = make_rng(rng)
    case = Case(case)
    out = []
    while len(out) < count:
        if case is Case.THREE_NEGATIVE:
            neg = -rng.uniform(0.0, 1.0, size=3)
            neg = neg[neg < 0]
            if neg.size < 3:
                continue
            t = np.append(neg, 1.0 - neg.sum())
            rng.shuffle(t)
            out.append(t)
            continue
        batch = rng.uniform(-1.0, 1.0, size=(4 * count, 3))
        tables, vals = _l1_free(batch)
        ok = ~np.isnan(vals) & ((tables < 0).sum(axis=1) == case.value)
        out.extend(tables[ok][: count - len(out)])
    return np.array(out[:count]).reshape(count, 2, 2)


def _grid(step: float) -> np.ndarray:
    # nearest spacing that divides [-1, 1] evenly, so both endpoints are exact
    return np.linspace(-1.0, 1.0, int(round(2.0 / step)) + 1)


def _best_index(values: np.ndarray, tables: np.ndarray) -> int:
    """Index of the max value; ties go to the lexicographically smallest table."""
    top = values.max()
    cand = np.flatnonzero(values == top)
    if cand.size == 1:
        return int(cand[0])
    keys = tables[cand]
    order = np.lexsort(keys.T[::-1])
    return int(cand[order[0]])


def _l1_free(free: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tables and sum|l| for rows of free entries ``(l00, l01, l10)``; NaN where infeasible."""
    last = 1.0 - free.sum(axis=1)
    tables = np.column_stack([free, last])
    ok = (np.abs(last) <= 1.0) & np.all(np.abs(free) <= 1.0, axis=1)
    vals = np.where(ok, np.abs(tables).sum(axis=1), np.nan)
    return tables, vals


def real_grid_tables(grid_step: float) -> tuple[np.ndarray, np.ndarray]:
    """All feasible real 2x2 tables on a grid over three free entries, with their sum|l|."""
    g = _grid(grid_step)
    free = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3)
    tables, vals = _l1_free(free)
    keep = ~np.isnan(vals)
    return tables[keep], vals[keep]


def real_sup_search(grid_step: float = 0.05, refine_iters: int = 3) -> tuple[float, RealQuasiDistribution]:
    """Maximize ``sum|l|`` over real unit-sum 2x2 tables with entries in ``[-1, 1]``.

    Exhaustive grid over ``(l00, l01, l10)`` with ``l11`` fixed by the unit
    sum, followed by ``refine_iters`` coordinate-refinement passes around the
    best grid point, each pass probing moves of one half the previous step.
    """
    if not 0 < grid_step <= 0.5:
        raise ValueError(f"grid_step must lie in (0, 0.5], got {grid_step}")
    tables, vals = real_grid_tables(grid_step)
    i = _best_index(vals, tables)
    best = tables[i, :3].copy()
    best_val = float(vals[i])

    step = grid_step
    for _ in range(refine_iters):
        step /= 2.0
        improved = True
        while improved:
            improved = False
            moves = []
            for k in range(3):
                for sgn in (-1.0, 1.0):
                    cand = best.copy()
                    cand[k] = min(1.0, max(-1.0, cand[k] + sgn * step))
                    moves.append(cand)
            cands = np.array(moves)
            ctables, cvals = _l1_free(cands)
            if np.all(np.isnan(cvals)):
                break
            cvals = np.nan_to_num(cvals, nan=-np.inf)
            j = _best_index(cvals, ctables)
            if cvals[j] > best_val:
                best, best_val, improved = cands[j], float(cvals[j]), True

    table = np.append(best, 1.0 - best.sum()).reshape(2, 2)
    return best_val, RealQuasiDistribution(table)


def case_maxima(grid_step: float = 0.05) -> dict[Case, float | None]:
    """Largest ``sum|l|`` on the grid within each negative-count case (None if the case is empty)."""
    tables, vals = real_grid_tables(grid_step)
    counts = (tables < 0).sum(axis=1)
    return {c: (float(vals[counts == c.value].max()) if np.any(counts == c.value) else None) for c in Case}
