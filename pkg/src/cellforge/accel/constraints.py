"""Placement constraints contributed by the acceleration pre-passes."""
from __future__ import annotations

from typing import Iterable, Mapping

from ..model.ir import ConstraintModel
from ..netlist import Kind, Transistor, identical_groups


def cluster_constraints(m: ConstraintModel, clusters: Iterable[Iterable[str]], x: Mapping[str, int],
                        kind: Mapping[str, Kind], slots: range) -> list[tuple[int, int]]:
    """Force each cluster onto a gap-free run of slots.

    The run is as long as the larger of the cluster's PMOS and NMOS counts
    (every device is one unit wide after folding). Returns the (min, max)
    variable pair per constrained cluster.
    """
    out = []
    for idx, members in enumerate(clusters):
        members = sorted(set(members))
        if len(members) < 2:
            continue
        wp = sum(1 for d in members if kind[d] is Kind.PMOS)
        span = max(wp, len(members) - wp)
        mx = m.new_int(f"cl_max[{idx}]", slots.start, slots.stop)
        mn = m.new_int(f"cl_min[{idx}]", slots.start, slots.stop)
        for d in members:
            m.add_linear([(1, mx), (-1, x[d])], lo=1, tag=f"cluster_{idx}")
            m.add_linear([(1, mn), (-1, x[d])], hi=0, tag=f"cluster_{idx}")
        m.add_eq([(1, mx), (-1, mn)], span, tag=f"cluster_{idx}")
        out.append((mn, mx))
    return out


def itp_constraints(m: ConstraintModel, devices: Iterable[Transistor], x: Mapping[str, int],
                    clusters: Iterable[Iterable[str]] = ()) -> int:
    """Order identical devices by id; returns the number of chain links added.

    Swapping two identical devices is only a symmetry of the model when both
    sit in the same cluster or both are unclustered, so each identical group
    is chained separately within those classes.
    """
    home = {d: i for i, c in enumerate(clusters) for d in c if len(set(c)) >= 2}
    count = 0
    for group in identical_groups(devices):
        by_home: dict = {}
        for t in group:
            by_home.setdefault(home.get(t.id), []).append(t.id)
        for ids in by_home.values():
            for a, b in zip(ids, ids[1:]):
                m.add_linear([(1, x[a]), (-1, x[b])], hi=0, tag="itp")
                count += 1
    return count
