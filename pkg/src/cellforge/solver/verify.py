"""Independent re-evaluation of a complete assignment against a model."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..model.ir import Constraint, ConstraintModel, lit_value


@dataclass
class VerifyReport:
    ok: bool
    violations: list[tuple[int, str]] = field(default_factory=list)  # (constraint id | -1, message)


def _holds(c: Constraint, x: Sequence[int]) -> bool:
    if c.kind == "linear":
        s = sum(coef * x[v] for coef, v in c.terms)
        return c.lo <= s <= c.hi
    if c.kind == "clause":
        return any(lit_value(l, x) for l in c.lits)
    if c.kind == "atmost":
        return sum(lit_value(l, x) for l in c.lits) <= c.hi
    if c.kind == "implies":
        return not all(lit_value(a, x) for a in c.ante) or any(lit_value(l, x) for l in c.lits)
    raise ValueError(f"unknown constraint kind {c.kind!r}")


def verify(assignment: Sequence[int] | None, model: ConstraintModel) -> VerifyReport:
    if assignment is None or len(assignment) != model.num_vars:
        raise ValueError("verify needs a complete assignment "
                         f"({model.num_vars} values, got {None if assignment is None else len(assignment)})")
    bad: list[tuple[int, str]] = []
    for v, val in enumerate(assignment):
        if not model.lo[v] <= val <= model.hi[v]:
            bad.append((-1, f"{model.names[v]}={val} outside [{model.lo[v]}, {model.hi[v]}]"))
    for cid, c in enumerate(model.constraints):
        if not _holds(c, assignment):
            bad.append((cid, f"{c.kind} {c.tag or ''}".strip()))
    return VerifyReport(not bad, bad)
