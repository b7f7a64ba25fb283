"""Backend-neutral solve contract."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Mapping, Optional, Sequence

from ..accel.gap import GapPolicy
from ..model.ir import ConstraintModel


class Status(str, Enum):
    OPTIMAL = "OPTIMAL"
    FEASIBLE_GAP = "FEASIBLE_GAP"
    UNSAT = "UNSAT"
    TIMEOUT = "TIMEOUT"


class TraceEvent(tuple):
    """``(seconds, objective_bound, lower_bound)``."""

    __slots__ = ()

    def __new__(cls, t: float, objective_bound: float, lower_bound: float):
        return tuple.__new__(cls, (t, objective_bound, lower_bound))

    @property
    def time(self) -> float:
        return self[0]

    @property
    def objective_bound(self) -> float:
        return self[1]

    @property
    def lower_bound(self) -> float:
        return self[2]


@dataclass
class SolveRequest:
    model: ConstraintModel
    workers: int = 1
    seed: int = 0
    policy: GapPolicy = field(default_factory=GapPolicy)
    hints: Mapping[int, int] = field(default_factory=dict)
    # Optional search guidance supplied by the encoder (reference backend only).
    strategy_factory: Optional[Callable[[], object]] = None
    bound_providers: Sequence[Callable[[object], float]] = ()
    # Node budget unit for Luby-scheduled restarts; 0 searches in one uninterrupted pass.
    restart_base: int = 1024


@dataclass
class SolveResult:
    status: Status
    assignment: Optional[list[int]]
    objective_bound: float  # best feasible objective found (inf if none)
    lower_bound: float
    trace: list[TraceEvent] = field(default_factory=list)
    nodes: int = 0
    runtime: float = 0.0
    backend: str = "reference"
    first_incumbent_lower_bound: float = -math.inf

    @property
    def has_solution(self) -> bool:
        return self.assignment is not None

    @property
    def gap(self) -> float:
        from ..accel.gap import relative_gap

        return relative_gap(self.objective_bound, self.lower_bound)
