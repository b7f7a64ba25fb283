"""Bridge to an external solver process speaking the text IR.

The command receives the model IR on stdin and must print, one per line::

    status <OPTIMAL|FEASIBLE_GAP|UNSAT|TIMEOUT>
    objective <int>          (optional when UNSAT)
    lower_bound <int>        (optional)
    values <v0> <v1> ...     (full assignment in variable order)
"""
from __future__ import annotations

import math
import shlex
import subprocess
import sys
import time

from ..model.ir import model_from_text, model_to_text
from .api import SolveRequest, SolveResult, Status
from .verify import verify


class ExternalSolverError(RuntimeError):
    pass


def parse_reply(text: str, num_vars: int) -> tuple[Status, list[int] | None, float, float]:
    status, values, obj, lower = None, None, math.inf, -math.inf
    for line in text.splitlines():
        key, _, rest = line.strip().partition(" ")
        if key == "status":
            status = Status(rest.strip())
        elif key == "objective":
            obj = float(rest) if rest.strip() in ("inf", "-inf") else int(rest)
        elif key == "lower_bound":
            lower = float(rest) if rest.strip() in ("inf", "-inf") else int(rest)
        elif key == "values":
            values = [int(t) for t in rest.split()]
    if status is None:
        raise ExternalSolverError("reply carries no status line")
    if values is not None and len(values) != num_vars:
        raise ExternalSolverError(f"reply has {len(values)} values, model has {num_vars}")
    return status, values, obj, lower


def format_reply(res: SolveResult) -> str:
    def b(x: float) -> str:
        return str(int(x)) if math.isfinite(x) else ("inf" if x > 0 else "-inf")

    out = [f"status {res.status.value}", f"objective {b(res.objective_bound)}", f"lower_bound {b(res.lower_bound)}"]
    if res.assignment is not None:
        out.append("values " + " ".join(map(str, res.assignment)))
    return "\n".join(out) + "\n"


def solve_external(req: SolveRequest, command: str) -> SolveResult:
    start = time.monotonic()
    argv = shlex.split(command)
    try:
        proc = subprocess.run(argv, input=model_to_text(req.model), capture_output=True, text=True,
                              timeout=req.policy.time_limit + 30)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise ExternalSolverError(f"external backend failed: {exc}") from exc
    if proc.returncode != 0:
        raise ExternalSolverError(f"external backend exited {proc.returncode}: {proc.stderr.strip()[:500]}")
    status, values, obj, lower = parse_reply(proc.stdout, req.model.num_vars)
    if values is not None:
        rep = verify(values, req.model)
        if not rep.ok:
            raise ExternalSolverError(f"external assignment violates {len(rep.violations)} constraints")
        obj = req.model.objective_value(values)
    if status == Status.OPTIMAL:
        lower = obj
    return SolveResult(status, values, obj, lower, [], 0, time.monotonic() - start, backend="external")


def main(argv: list[str] | None = None) -> int:
    """Serve the external protocol with the reference backend (stdin -> stdout)."""
    from .engine import solve_reference

    args = argv if argv is not None else sys.argv[1:]
    limit = float(args[0]) if args else 300.0
    from ..accel.gap import GapPolicy

    model = model_from_text(sys.stdin.read())
    res = solve_reference(SolveRequest(model, policy=GapPolicy(time_limit=limit)))
    sys.stdout.write(format_reply(res))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
