"""Extremal search over pure states and pairs of rank-1 projective measurements.

Each measurement basis is the column set of ``base @ exp(i H(theta))`` where
``H(theta)`` is the Hermitian matrix with ``d**2`` real coordinates ``theta``;
the state is a normalized complex amplitude vector with ``2 d`` real
coordinates. A coordinate pattern search moves through this flat parameter
vector, so no derivatives of the KD objective are needed.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import linalg
from .kd import KdDistribution, kd_distribution
from .quantum import (
    DensityMatrix,
    Povm,
    derived_rng,
    haar_unitary,
    make_rng,
    pure_state,
    pvm_from_unitary,
    random_pure,
    random_pvm,
    theorem1_bases,
)

INITIAL_STEP = 0.3
SHRINK = 0.5
MIN_STEP = 1e-6


class Instance(NamedTuple):
    rho: DensityMatrix
    X: Povm
    Y: Povm

    def to_json(self) -> dict:
        return {"state": self.rho.to_json(), "measurements": [self.X.to_json(), self.Y.to_json()]}


def hermitian_from_params(params: np.ndarray, d: int) -> np.ndarray:
    """Hermitian matrix from ``d**2`` reals: diagonal, then real and imaginary upper parts."""
    params = np.asarray(params, dtype=float)
    if params.shape != (d * d,):
        raise ValueError(f"expected {d * d} generator coefficients, got shape {params.shape}")
    iu = np.triu_indices(d, 1)
    k = len(iu[0])
    h = np.diag(params[:d]).astype(np.complex128)
    h[iu] = params[d:d + k] + 1j * params[d + k:]
    h[(iu[1], iu[0])] = np.conj(h[iu])
    return h


@dataclass(frozen=True, eq=False)
class UnitaryParams:
    d: int
    params: np.ndarray
    base: np.ndarray | None = None

    def __post_init__(self):
        p = np.array(self.params, dtype=float)
        if p.shape != (self.d * self.d,):
            raise ValueError(f"expected {self.d * self.d} parameters, got shape {p.shape}")
        object.__setattr__(self, "params", p)

    def realize(self) -> np.ndarray:
        u = linalg.expi_hermitian(hermitian_from_params(self.params, self.d))
        if self.base is not None:
            u = np.asarray(self.base) @ u
        err = float(np.max(np.abs(u.conj().T @ u - np.eye(self.d))))
        if err >= 1e-9:
            raise ArithmeticError(f"realized matrix is not unitary (defect {err:.2e})")
        return u


@dataclass
class StartPoint:
    """Initial state amplitudes and the two anchor bases of a restart."""

    amplitudes: np.ndarray
    x_base: np.ndarray
    y_base: np.ndarray


def example_start() -> StartPoint:
    """Qubit start at ``|0>`` with the Hadamard and ``(sqrt3|0>+|1>)/2`` bases."""
    xb, yb = theorem1_bases()
    return StartPoint(np.array([1.0, 0.0], dtype=np.complex128), xb, yb)


def random_start(d: int, rng) -> StartPoint:
    rng = make_rng(rng)
    amps = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return StartPoint(amps / np.linalg.norm(amps), haar_unitary(d, rng), haar_unitary(d, rng))


class _Problem:
    """Maps a flat parameter vector to an instance for one start point."""

    def __init__(self, start: StartPoint):
        self.start = start
        self.d = d = len(start.amplitudes)
        self.x0 = np.concatenate([start.amplitudes.real, start.amplitudes.imag, np.zeros(2 * d * d)])

    def instance(self, x: np.ndarray) -> Instance:
        d = self.d
        amps = x[:d] + 1j * x[d:2 * d]
        ux = UnitaryParams(d, x[2 * d:2 * d + d * d], self.start.x_base).realize()
        uy = UnitaryParams(d, x[2 * d + d * d:], self.start.y_base).realize()
        return Instance(pure_state(amps), pvm_from_unitary(ux), pvm_from_unitary(uy))


OBJECTIVES: dict[str, Callable[[KdDistribution], float]] = {
    "l1": lambda q: q.l1,
    "l2": lambda q: q.l2,
}


def evaluate(objective: str, inst: Instance) -> float:
    return OBJECTIVES[objective](kd_distribution(*inst))


@dataclass
class SearchResult:
    objective: str
    best_value: float
    best_instance: Instance
    iterations: int
    seed: int | None
    trace: list[tuple[int, float]] = field(default_factory=list)
    best_restart: int = 0
    max_evaluated: float = float("-inf")

    def reevaluate(self) -> float:
        return evaluate(self.objective, self.best_instance)

    def to_json(self) -> dict:
        return {
            "objective": self.objective,
            "best_value": self.best_value,
            "best_restart": self.best_restart,
            "iterations": self.iterations,
            "seed": self.seed,
            "max_evaluated": self.max_evaluated,
            "best_instance": self.best_instance.to_json(),
            "trace": [[i, v] for i, v in self.trace],
        }

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "best_value"])
        for i, v in self.trace:
            w.writerow([i, repr(v)])
        return buf.getvalue()


def pattern_search(f: Callable[[np.ndarray], float], x0: np.ndarray, iters: int,
                   step: float = INITIAL_STEP, min_step: float = MIN_STEP):
    """Maximize ``f`` by coordinate moves of +-step, halving the step after a pass without gain.

    Yields ``(x, fx)`` after every pass, stopping after ``iters`` passes or
    once the step falls below ``min_step``.
    """
    x = np.array(x0, dtype=float)
    fx = f(x)
    for _ in range(iters):
        improved = False
        for k in range(x.size):
            for sgn in (1.0, -1.0):
                cand = x.copy()
                cand[k] += sgn * step
                fc = f(cand)
                if fc > fx:
                    x, fx, improved = cand, fc, True
                    break
        if not improved:
            step *= SHRINK
        yield x, fx
        if step < min_step:
            return


def _maximize(objective: str, d: int, rng, restarts: int, iters: int,
              starts: Sequence[StartPoint], on_evaluate=None) -> SearchResult:
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if restarts < 1 or iters < 1:
        raise ValueError("restarts and iters must be >= 1")
    if isinstance(rng, (int, np.integer)):
        seed = int(rng)
    else:
        seed = int(make_rng(rng).integers(2**63))
    pool = list(starts) + [random_start(d, derived_rng(seed, i)) for i in range(restarts)]
    score = OBJECTIVES[objective]

    best_val, best_inst, best_restart = float("-inf"), None, 0
    max_eval = float("-inf")
    trace: list[tuple[int, float]] = []
    step_count = 0
    for r, start in enumerate(pool):
        if len(start.amplitudes) != d:
            raise ValueError(f"start point {r} has dimension {len(start.amplitudes)}, expected {d}")
        prob = _Problem(start)

        def f(x):
            nonlocal max_eval
            inst = prob.instance(x)
            q = kd_distribution(*inst)
            v = score(q)
            max_eval = max(max_eval, v)
            if on_evaluate is not None:
                on_evaluate(inst, q)
            return v

        for x, fx in pattern_search(f, prob.x0, iters):
            step_count += 1
            if fx > best_val:
                best_val, best_inst, best_restart = fx, prob.instance(x), r
            trace.append((step_count, best_val))

    return SearchResult(objective, best_val, best_inst, step_count, seed, trace, best_restart, max_eval)


def maximize_l1(d: int, rng, restarts: int = 4, iters: int = 200, starts: Sequence[StartPoint] | None = None,
                on_evaluate=None) -> SearchResult:
    """Search for large ``sum|q|``; at ``d == 2`` the rotated-basis qubit example is the first start by default."""
    if starts is None:
        starts = [example_start()] if d == 2 else []
    return _maximize("l1", d, rng, restarts, iters, starts, on_evaluate)


def maximize_l2(d: int, rng, restarts: int = 4, iters: int = 200, starts: Sequence[StartPoint] | None = None,
                on_evaluate=None) -> SearchResult:
    return _maximize("l2", d, rng, restarts, iters, starts or [], on_evaluate)


def harvest_violations(d: int, rng, count: int, margin: float = 1e-6) -> list[tuple[Instance, float]]:
    """Sample ``count`` Haar instances and keep those with ``sum|q| > 1 + margin``, largest first."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = make_rng(rng)
    found = []
    for _ in range(count):
        inst = Instance(random_pure(d, rng), random_pvm(d, rng), random_pvm(d, rng))
        l1 = kd_distribution(*inst).l1
        if l1 > 1.0 + margin:
            found.append((inst, l1))
    found.sort(key=lambda t: -t[1])
    return found
