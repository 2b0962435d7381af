"""Command-line entry point: ``kdquasi {demo,verify,sample,optimize,appendixB}``.

Exit status: 0 when every check passes, 1 on a bound or expectation
violation, 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import postquantum as pq
from .campaign import MEASUREMENT_KINDS, SAMPLE_COLUMNS, evaluate_instance, run_campaign, sample_rows
from .config import DEFAULT_TOL
from .kd import (
    bound_suite,
    instance_from_json,
    kd_distribution,
    nonclassicality_witness,
    support_uncertainty_check,
)
from .quantum import make_rng, theorem1_example
from .search import maximize_l1, maximize_l2

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2
COMMANDS = ("demo", "verify", "sample", "optimize", "appendixB")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    dim: int = 2
    seed: int = 1
    count: int = 1000
    tol: float = DEFAULT_TOL.bound
    out: str | None = None
    format: str = "json"
    objective: str = "l1"
    measurements: str = "mixed"
    n_measurements: int | None = 2
    workers: int = 1
    restarts: int = 4
    iters: int = 200
    grid_step: float = 0.05
    refine_iters: int = 3
    replay: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not 2 <= self.dim <= 32:
            raise ConfigError(f"--dim must lie in [2, 32], got {self.dim}")
        if self.count < 1:
            raise ConfigError(f"--count must be >= 1, got {self.count}")
        if not self.tol > 0:
            raise ConfigError(f"--tol must be positive, got {self.tol}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"--format must be json or csv, got {self.format!r}")
        if self.n_measurements is not None and self.n_measurements < 2:
            raise ConfigError(f"--n-measurements must be >= 2, got {self.n_measurements}")
        if not 0 < self.grid_step <= 0.5:
            raise ConfigError(f"--grid-step must lie in (0, 0.5], got {self.grid_step}")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out is None:
        sys.stdout.write(text)
        return
    try:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {cfg.out}: {exc}") from exc


def _announce_seed(cfg: RunConfig) -> None:
    print(f"seed={cfg.seed}", file=sys.stderr)


# -- demo -----------------------------------------------------------------------


def _demo_checks(tol: float) -> tuple[list[dict], dict]:
    s3 = math.sqrt(3.0)
    checks = []

    def check(name, actual, expected, atol=1e-12):
        actual, expected = float(actual), float(expected)
        checks.append({"check": name, "actual": actual, "expected": expected,
                       "ok": bool(abs(actual - expected) <= atol)})

    rho, X, Y = theorem1_example()
    q = kd_distribution(rho, X, Y)
    expected_q = np.array([[3 + s3, 1 - s3], [3 - s3, 1 + s3]]) / 8
    for (i, j), name in np.ndenumerate(np.array([["q[+,y]", "q[+,y_perp]"], ["q[-,y]", "q[-,y_perp]"]])):
        check(f"kd {name} real", q.table[i, j].real, expected_q[i, j])
        check(f"kd {name} imag", q.table[i, j].imag, 0.0)
    px, py = q.marginals
    check("marginal p_x[+]", px[0], 0.5)
    check("marginal p_y[y]", py[0], 0.75)
    w = nonclassicality_witness(q, tol)
    check("kd l1", w.l1, (3 + s3) / 4)
    check("kd nonclassical", w.nonclassical, True, 0)
    check("kd l2", q.l2, 0.5)
    check("entry (+,y) exceeds min marginal", q.moduli[0, 0] > min(px[0], py[0]), True, 0)
    check("entry (+,y) squared modulus", q.moduli[0, 0] ** 2, (12 + 6 * s3) / 64)
    report = bound_suite(rho, X, Y, tol=tol)
    check("max overlap", report.metadata["max_overlap"], (2 + s3) / 4)
    report.extend(support_uncertainty_check(rho, X, Y, tol=tol))
    check("kd bound suite satisfied", report.all_satisfied, True, 0)

    beyond = pq.beyond_kd_example()
    rows, cols = pq.quasi_marginals(beyond)
    check("postquantum example max |l|", beyond.moduli.max(), 1.0)
    check("postquantum example max marginal", max(np.abs(rows).max(), np.abs(cols).max()), 0.5)
    check("postquantum example l1", beyond.l1, 3.0)
    sat = pq.complex_saturator()
    check("complex saturator l1", sat.l1, 4.0)
    for alpha in (0.0, 0.5, 2.0, 3.0):
        e = pq.l1_and_trivial_bound(sat, alpha).entries[0]
        check(f"complex saturator sum|l|^{alpha:g}", e.lhs, 4.0)
    check("one-negative family (-1, .6, .6, .8) l1", pq.one_negative_family(0.6, 0.6).l1, 3.0)
    check("two-negative family (-.5, -.5, 1, 1) l1", pq.two_negative_family(-0.5).l1, 3.0)

    payload = {
        "kd_table": [[[float(z.real), float(z.imag)] for z in row] for row in q.table],
        "marginals": [list(map(float, px)), list(map(float, py))],
        "witness": {"nonclassical": w.nonclassical, "l1": w.l1, "excess": w.excess},
        "bound_report": report.to_json(),
        "postquantum": {
            "beyond_kd_example": beyond.to_json(),
            "complex_saturator": sat.to_json(),
        },
    }
    return checks, payload


def cmd_demo(cfg: RunConfig) -> int:
    checks, payload = _demo_checks(cfg.tol)
    ok = all(c["ok"] for c in checks)
    if cfg.format == "csv":
        _emit(cfg, _csv(["check", "actual", "expected", "ok"],
                        [[c["check"], repr(c["actual"]), repr(c["expected"]), c["ok"]] for c in checks]))
    else:
        _emit(cfg, _dump({"passed": ok, "checks": checks, **payload}))
    if not ok:
        for c in checks:
            if not c["ok"]:
                print(f"MISMATCH {c['check']}: got {c['actual']!r}, expected {c['expected']!r}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_VIOLATION


# -- verify -----------------------------------------------------------------------


def _replay(cfg: RunConfig) -> int:
    try:
        with open(cfg.replay) as fh:
            obj = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read replay file {cfg.replay}: {exc}") from exc
    if "failing_instances" in obj:
        items = [(f["index"], f["instance"]) for f in obj["failing_instances"] if "instance" in f]
    else:
        items = [(obj.get("index", -1), obj.get("instance", obj))]
    out, ok = [], True
    for index, inst in items:
        rho, povms = instance_from_json(inst)
        res = evaluate_instance(rho, povms, tol=cfg.tol, index=index)
        ok &= res.ok
        out.append({"index": index, "ok": res.ok, "report": res.report.to_json()})
    _emit(cfg, _dump({"replayed": out}))
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.replay:
        return _replay(cfg)
    _announce_seed(cfg)
    report = run_campaign(cfg.dim, cfg.seed, cfg.count, cfg.measurements, cfg.n_measurements,
                          cfg.tol, cfg.workers)
    if cfg.format == "csv":
        rows = [[k, repr(s.min_slack) if s.evaluated else "", s.evaluated, s.not_applicable, s.violations]
                for k, s in sorted(report.bounds.items())]
        _emit(cfg, _csv(["id", "min_slack", "evaluated", "not_applicable", "violations"], rows))
    else:
        _emit(cfg, _dump(report.to_json()))
    if not report.passed:
        print(f"{len(report.failing)} failing instance(s); replay with --replay on the JSON report",
              file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VIOLATION


# -- sample -----------------------------------------------------------------------


def cmd_sample(cfg: RunConfig) -> int:
    _announce_seed(cfg)
    rows = sample_rows(cfg.dim, cfg.seed, cfg.count, cfg.measurements, tol=cfg.tol)
    if cfg.format == "csv":
        _emit(cfg, _csv(SAMPLE_COLUMNS, [[repr(r[c]) if isinstance(r[c], float) else int(r[c])
                                          for c in SAMPLE_COLUMNS] for r in rows]))
    else:
        _emit(cfg, _dump({"columns": list(SAMPLE_COLUMNS), "rows": rows}))
    return EXIT_OK


# -- optimize ---------------------------------------------------------------------


def cmd_optimize(cfg: RunConfig) -> int:
    _announce_seed(cfg)
    search = maximize_l1 if cfg.objective == "l1" else maximize_l2
    result = search(cfg.dim, cfg.seed, restarts=cfg.restarts, iters=cfg.iters)
    if cfg.format == "csv":
        _emit(cfg, result.trace_csv())
    else:
        _emit(cfg, _dump(result.to_json()))
    ceiling = float(cfg.dim) if cfg.objective == "l1" else 1.0
    return EXIT_OK if result.max_evaluated <= ceiling + cfg.tol else EXIT_VIOLATION


# -- appendixB --------------------------------------------------------------------


def cmd_appendixB(cfg: RunConfig) -> int:
    sup, argmax = pq.real_sup_search(cfg.grid_step, cfg.refine_iters)
    maxima = pq.case_maxima(cfg.grid_step)
    rng = make_rng(cfg.seed)
    formula_err = 0.0
    for case in pq.Case:
        for t in pq.sample_case_tables(case, cfg.count, rng):
            res = pq.appendixB_case_check(t)
            formula_err = max(formula_err, abs(res.l1 - float(np.abs(t).sum())))
    families = {
        "one_negative(-1, 0.6, 0.6, 0.8)": pq.one_negative_family(0.6, 0.6).l1,
        "two_negative(-0.5, -0.5, 1, 1)": pq.two_negative_family(-0.5).l1,
    }
    case3 = maxima[pq.Case.THREE_NEGATIVE]
    ok = (sup <= 3.0 + cfg.tol and abs(sup - 3.0) <= 1e-3 and formula_err <= 1e-12
          and all(abs(v - 3.0) <= 1e-12 for v in families.values())
          and (case3 is None or case3 <= 1.0 + cfg.tol))
    out = {
        "passed": ok,
        "grid_step": cfg.grid_step,
        "refine_iters": cfg.refine_iters,
        "sup_found": sup,
        "argmax": argmax.values.tolist(),
        "case_maxima": {c.name.lower(): v for c, v in maxima.items()},
        "case_formula_max_error": formula_err,
        "tables_per_case": cfg.count,
        "saturating_families": families,
    }
    if cfg.format == "csv":
        _emit(cfg, _csv(["quantity", "value"], [[k, repr(v)] for k, v in out.items() if not isinstance(v, (dict, list))]
                        + [[f"case_max_{k}", repr(v)] for k, v in out["case_maxima"].items()]))
    else:
        _emit(cfg, _dump(out))
    return EXIT_OK if ok else EXIT_VIOLATION


HANDLERS = {"demo": cmd_demo, "verify": cmd_verify, "sample": cmd_sample,
            "optimize": cmd_optimize, "appendixB": cmd_appendixB}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kdquasi", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, default=2)
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--count", type=int, default=1000)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL.bound, help="bound slack tolerance")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--workers", type=int, default=1)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("demo", parents=[common], help="reproduce the worked examples")
    v = sub.add_parser("verify", parents=[common], help="random verification campaign")
    v.add_argument("--measurements", choices=MEASUREMENT_KINDS, default="mixed")
    v.add_argument("--n-measurements", type=int, default=2, help="0 draws n from {2,3,4} per instance")
    v.add_argument("--replay", default=None, help="re-evaluate serialized instances instead")
    s = sub.add_parser("sample", parents=[common], help="per-instance statistics for plotting")
    s.add_argument("--measurements", choices=MEASUREMENT_KINDS, default="mixed")
    o = sub.add_parser("optimize", parents=[common], help="extremal search")
    o.add_argument("--objective", choices=("l1", "l2"), default="l1")
    o.add_argument("--restarts", type=int, default=4)
    o.add_argument("--iters", type=int, default=200)
    b = sub.add_parser("appendixB", parents=[common], help="real 2x2 postquantum bound by brute force")
    b.add_argument("--grid-step", type=float, default=0.05)
    b.add_argument("--refine-iters", type=int, default=3)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    fields = {k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__}
    if fields.get("n_measurements") == 0:
        fields["n_measurements"] = None
    return RunConfig(**fields)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
