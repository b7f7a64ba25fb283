"""Relative-gap early termination."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class GapPolicy:
    relative_gap: float = 0.0
    time_limit: float = 300.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.relative_gap < 1.0:
            raise ValueError("relative_gap must lie in [0, 1)")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


def relative_gap(objective_bound: float, lower_bound: float) -> float:
    """``|ob - lb| / |ob|``; a zero objective bound counts as gap 0."""
    if objective_bound == 0:
        return 0.0
    if math.isinf(objective_bound) or math.isinf(lower_bound):
        return math.inf
    return abs(objective_bound - lower_bound) / abs(objective_bound)


def gap_termination(policy: GapPolicy, objective_bound: float, lower_bound: float,
                    elapsed: float = 0.0) -> str:
    """Return ``"stop"`` or ``"continue"``.

    Monotone: a lower bound that only rises and an objective bound that only
    falls can never turn a stop back into a continue.
    """
    if elapsed >= policy.time_limit:
        return "stop"
    if lower_bound >= objective_bound:
        return "stop"
    if objective_bound == 0 and lower_bound < 0:
        # a zero bound only certifies optimality over non-negative objectives
        return "continue"
    return "stop" if relative_gap(objective_bound, lower_bound) <= policy.relative_gap else "continue"
