"""Solve contract, reference branch-and-bound backend and verifier."""
from __future__ import annotations

from .api import SolveRequest, SolveResult, Status, TraceEvent
from .verify import VerifyReport, verify


def solve(req: SolveRequest, backend: str = "reference") -> SolveResult:
    """Dispatch to ``reference`` or ``external:<command>``; the result is always verified."""
    if backend == "reference":
        from .engine import solve_reference

        res = solve_reference(req)
    elif backend.startswith("external:"):
        from .external import solve_external

        res = solve_external(req, backend.split(":", 1)[1])
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if res.assignment is not None:
        rep = verify(res.assignment, req.model)
        if not rep.ok:
            raise RuntimeError(f"backend {backend} returned an assignment violating {rep.violations[:5]}")
    return res


__all__ = ["SolveRequest", "SolveResult", "Status", "TraceEvent", "VerifyReport", "solve", "verify"]
