"""Seeded random verification campaigns over states and measurements.

Instance ``i`` of a run with seed ``s`` is drawn from its own stream
``derived_rng(s, i)``, so any instance can be regenerated alone and a run
split across worker processes merges to the same report.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOL
from .kd import (
    DEFAULT_ALPHAS,
    bound_suite,
    instance_to_json,
    kd_distribution,
    kd_distribution_n,
    max_overlap,
    multi_bound_suite,
    nonclassicality_witness,
    support_uncertainty_check,
    witness_tests,
)
from .postquantum import QuasiDistribution
from .quantum import (
    DensityMatrix,
    Povm,
    ValidationError,
    derived_rng,
    random_density,
    random_povm,
    random_pvm,
)
from .report import BoundReport

MEASUREMENT_KINDS = ("pvm", "povm", "mixed")
WITNESS_MARGIN = 1e-6
# fraction of two-measurement instances that measure the same basis twice
REPEATED_BASIS_FRACTION = 0.1


def random_measurement(d: int, kind: str, rng) -> Povm:
    if kind == "mixed":
        kind = "pvm" if rng.random() < 0.5 else "povm"
    if kind == "pvm":
        return random_pvm(d, rng)
    if kind == "povm":
        return random_povm(d, int(rng.integers(2, d + 2)), rng)
    raise ValueError(f"unknown measurement kind {kind!r}")


def random_instance(d: int, seed: int, index: int, measurements: str = "mixed",
                    n_measurements: int | None = 2) -> tuple[DensityMatrix, list[Povm]]:
    """Instance ``index`` of the campaign seeded with ``seed``.

    The state has a uniformly drawn rank in ``[1, d]``. With
    ``n_measurements=None`` the count is drawn from ``{2, 3, 4}``. A tenth of
    two-measurement instances repeat one projective measurement, which gives
    a classical distribution.
    """
    rng = derived_rng(seed, index)
    n = int(rng.integers(2, 5)) if n_measurements is None else int(n_measurements)
    if n < 2:
        raise ValueError(f"need at least 2 measurements, got {n}")
    rho = random_density(d, int(rng.integers(1, d + 1)), rng)
    if n == 2 and rng.random() < REPEATED_BASIS_FRACTION:
        X = random_pvm(d, rng)
        return rho, [X, X]
    return rho, [random_measurement(d, measurements, rng) for _ in range(n)]


def entrywise_classical(table: np.ndarray, tol: float) -> bool:
    """All entries real and nonnegative within ``tol``."""
    return bool(np.all(np.abs(table.imag) <= tol) and np.all(table.real >= -tol))


@dataclass
class InstanceResult:
    index: int
    n_measurements: int
    report: BoundReport
    classical: bool
    witness_agree: bool
    l1: float
    l2: float

    @property
    def ok(self) -> bool:
        return self.report.all_satisfied and self.witness_agree and (not self.classical or abs(self.l1 - 1.0) <= 1e-9)


def evaluate_instance(rho: DensityMatrix, povms: Sequence[Povm], tol: float = DEFAULT_TOL.bound,
                      alphas: Sequence[float] = DEFAULT_ALPHAS, threshold: float = DEFAULT_TOL.support,
                      index: int = -1) -> InstanceResult:
    """Every bound that applies to the instance, evaluated independently."""
    povms = list(povms)
    if len(povms) == 2:
        q = kd_distribution(rho, *povms)
        report = bound_suite(rho, povms[0], povms[1], alphas, threshold, tol, q=q)
        report.extend(support_uncertainty_check(rho, povms[0], povms[1], threshold, tol))
        nonclassicality_witness(q, tol)  # raises on inconsistent tests
        splits = [q.table]
    else:
        q = kd_distribution_n(rho, povms)
        report = multi_bound_suite(rho, povms, tol, q=q)
        splits = [q.grouped(k) for k in range(1, q.n_measurements)]
    failures = 0
    for table in splits:
        try:
            QuasiDistribution(table)
        except ValidationError:
            failures += 1
    report.add("postquantum_membership_failures", failures, 0.0, tol)
    l1_test, entry_test = witness_tests(q, WITNESS_MARGIN)
    return InstanceResult(index, len(povms), report, entrywise_classical(q.table, tol),
                          l1_test == entry_test, q.l1, q.l2)


@dataclass
class BoundStats:
    min_slack: float = math.inf
    evaluated: int = 0
    not_applicable: int = 0
    violations: int = 0
    worst_index: int = -1

    def update(self, entry, index: int) -> None:
        if not entry.applicable:
            self.not_applicable += 1
            return
        self.evaluated += 1
        if entry.violated:
            self.violations += 1
        if entry.slack < self.min_slack:
            self.min_slack, self.worst_index = entry.slack, index

    def to_json(self) -> dict:
        return {
            "min_slack": self.min_slack if self.evaluated else None,
            "evaluated": self.evaluated,
            "not_applicable": self.not_applicable,
            "violations": self.violations,
            "worst_index": self.worst_index,
        }


@dataclass
class CampaignReport:
    config: dict
    bounds: dict[str, BoundStats] = field(default_factory=dict)
    count: int = 0
    classical: int = 0
    classical_l1_max_dev: float = 0.0
    witness_disagreements: int = 0
    max_l1: float = 0.0
    max_l1_over_sqrt_n: float = 0.0
    max_l2: float = 0.0
    failing: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (not self.failing and self.witness_disagreements == 0
                and all(s.violations == 0 for s in self.bounds.values()))

    def add(self, res: InstanceResult, instance: tuple[DensityMatrix, list[Povm]] | None = None) -> None:
        self.count += 1
        for e in res.report:
            self.bounds.setdefault(e.bound_id, BoundStats()).update(e, res.index)
        if res.classical:
            self.classical += 1
            self.classical_l1_max_dev = max(self.classical_l1_max_dev, abs(res.l1 - 1.0))
        if not res.witness_agree:
            self.witness_disagreements += 1
        self.max_l1 = max(self.max_l1, res.l1)
        self.max_l1_over_sqrt_n = max(self.max_l1_over_sqrt_n, res.l1 / math.sqrt(res.report.metadata["N"]))
        self.max_l2 = max(self.max_l2, res.l2)
        if not res.ok:
            entry = {"index": res.index, "report": res.report.to_json()}
            if instance is not None:
                entry["instance"] = instance_to_json(*instance)
            self.failing.append(entry)

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "passed": self.passed,
            "count": self.count,
            "classical_instances": self.classical,
            "classical_l1_max_deviation": self.classical_l1_max_dev,
            "witness_disagreements": self.witness_disagreements,
            "max_l1": self.max_l1,
            "max_l1_over_sqrt_N": self.max_l1_over_sqrt_n,
            "max_l2": self.max_l2,
            "bounds": {k: self.bounds[k].to_json() for k in sorted(self.bounds)},
            "failing_instances": self.failing,
        }


def _run_chunk(args) -> list[tuple[InstanceResult, tuple | None]]:
    d, seed, indices, measurements, n_measurements, tol = args
    out = []
    for i in indices:
        inst = random_instance(d, seed, i, measurements, n_measurements)
        res = evaluate_instance(*inst, tol=tol, index=i)
        out.append((res, None if res.ok else inst))
    return out


def run_campaign(d: int, seed: int, count: int, measurements: str = "mixed", n_measurements: int | None = 2,
                 tol: float = DEFAULT_TOL.bound, workers: int = 1, report: CampaignReport | None = None,
                 offset: int = 0) -> CampaignReport:
    """Evaluate ``count`` instances (indices ``offset .. offset + count - 1``) and aggregate per bound."""
    if measurements not in MEASUREMENT_KINDS:
        raise ValueError(f"measurements must be one of {MEASUREMENT_KINDS}, got {measurements!r}")
    if report is None:
        report = CampaignReport({"dim": d, "seed": seed, "count": count, "measurements": measurements,
                                 "n_measurements": n_measurements, "tolerance": tol})
    indices = list(range(offset, offset + count))
    if workers <= 1:
        chunks = [_run_chunk((d, seed, indices, measurements, n_measurements, tol))]
    else:
        size = max(1, math.ceil(len(indices) / (4 * workers)))
        jobs = [(d, seed, indices[k:k + size], measurements, n_measurements, tol)
                for k in range(0, len(indices), size)]
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_run_chunk, jobs))
    results = sorted((r for c in chunks for r in c), key=lambda t: t[0].index)
    for res, inst in results:
        report.add(res, inst)
    return report


SAMPLE_COLUMNS = ("purity", "max_overlap", "n_x", "n_y", "n_xy", "l1", "l2", "nonclassical")


def sample_rows(d: int, seed: int, count: int, measurements: str = "mixed",
                threshold: float = DEFAULT_TOL.support, tol: float = DEFAULT_TOL.bound) -> list[dict]:
    """One row of summary statistics per two-measurement instance."""
    from .kd import support_counts

    rows = []
    for i in range(count):
        rho, (X, Y) = random_instance(d, seed, i, measurements, 2)
        q = kd_distribution(rho, X, Y)
        n_x, n_y, n_xy = support_counts(q, threshold)
        rows.append({
            "purity": rho.purity,
            "max_overlap": max_overlap(X, Y),
            "n_x": n_x,
            "n_y": n_y,
            "n_xy": n_xy,
            "l1": q.l1,
            "l2": q.l2,
            "nonclassical": nonclassicality_witness(q, tol).nonclassical,
        })
    return rows
