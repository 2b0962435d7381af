"""Bound evaluation records with JSON and CSV export."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .config import DEFAULT_TOL


@dataclass(frozen=True)
class BoundEntry:
    """One inequality ``lhs <= rhs``; ``slack = rhs - lhs``.

    A conditional bound whose precondition fails keeps its numbers but is
    flagged ``applicable=False`` and counts as neither satisfied nor violated.
    """

    bound_id: str
    lhs: float
    rhs: float
    tol: float = DEFAULT_TOL.bound
    applicable: bool = True

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def satisfied(self) -> bool:
        return self.applicable and self.slack >= -self.tol

    @property
    def violated(self) -> bool:
        return self.applicable and self.slack < -self.tol

    @property
    def status(self) -> str:
        if not self.applicable:
            return "not_applicable"
        return "satisfied" if self.satisfied else "violated"

    def to_json(self) -> dict:
        return {
            "id": self.bound_id,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "satisfied": self.satisfied,
            "not_applicable": not self.applicable,
        }


@dataclass
class BoundReport:
    entries: list[BoundEntry] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, bound_id: str, lhs: float, rhs: float, tol: float = DEFAULT_TOL.bound,
            applicable: bool = True) -> BoundEntry:
        if bound_id in self:
            raise KeyError(f"duplicate bound id {bound_id!r}")
        entry = BoundEntry(bound_id, float(lhs), float(rhs), tol, applicable)
        self.entries.append(entry)
        return entry

    def __contains__(self, bound_id: str) -> bool:
        return any(e.bound_id == bound_id for e in self.entries)

    def __getitem__(self, bound_id: str) -> BoundEntry:
        for e in self.entries:
            if e.bound_id == bound_id:
                return e
        raise KeyError(bound_id)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> list[str]:
        return [e.bound_id for e in self.entries]

    @property
    def all_satisfied(self) -> bool:
        """True when no applicable bound is violated."""
        return not any(e.violated for e in self.entries)

    def violations(self) -> list[BoundEntry]:
        return [e for e in self.entries if e.violated]

    def extend(self, other: "BoundReport") -> "BoundReport":
        for e in other.entries:
            if e.bound_id in self:
                raise KeyError(f"duplicate bound id {e.bound_id!r}")
            self.entries.append(e)
        self.metadata.update(other.metadata)
        return self

    def to_json(self) -> dict:
        return {
            "metadata": {k: _jsonable(v) for k, v in self.metadata.items()},
            "bounds": [e.to_json() for e in self.entries],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "lhs", "rhs", "slack", "status"])
        for e in self.entries:
            w.writerow([e.bound_id, repr(e.lhs), repr(e.rhs), repr(e.slack), e.status])
        return buf.getvalue()


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if hasattr(v, "item"):
        return v.item()
    return v
