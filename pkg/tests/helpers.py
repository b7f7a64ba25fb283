"""Cached solver runs shared by several test modules."""
from __future__ import annotations

from functools import lru_cache

from cellforge.cli import RunConfig, solve_variant
from cellforge.netlist import bundled_cell
from cellforge.tech import load_tech

# cells the reference backend certifies in seconds, at 1:1 and 3:2
REGRESSION = [(c, mp3) for c in ("INV_X1", "INV_X2", "NAND2_X1", "NOR2_X1", "BUF_X1") for mp3 in (45, 30)]


@lru_cache(maxsize=None)
def solved(cell: str, mp3: int = 30, delta: int = 0, itp: bool = False, kmax: int | None = None,
           rlbt: bool = True, objective_set: str = "e", gap: float = 0.0):
    tech = load_tech().with_gear_ratio(mp3, delta)
    cfg = RunConfig(itp=itp, cluster_kmax=kmax, rlbt=rlbt, objective_set=objective_set, relative_gap=gap,
                    time_limit=600)
    return solve_variant(bundled_cell(cell), tech, cfg)


# acceptance criterion -> (passed, detail); printed at the end of the session
CRITERIA: dict[int, tuple[bool, str]] = {}


def report(n: int, ok: bool, detail: str) -> None:
    CRITERIA[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
