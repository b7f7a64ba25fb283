"""Reference backend: depth-first branch and bound with bounds propagation.

Every constraint is normalized to ``lo <= sum(coef * x) <= hi`` and
propagated by activity bounds, which covers unit propagation for clauses
and cardinality propagation for at-most-k. The objective doubles as a
cutoff constraint that tightens whenever a better incumbent appears.
"""
from __future__ import annotations

import logging
import math
import random
import threading
import time
from typing import Callable, Optional, Sequence

from ..accel.gap import GapPolicy, gap_termination
from ..model.ir import ConstraintModel, ModelError, to_linear
from .api import SolveRequest, SolveResult, Status, TraceEvent

logger = logging.getLogger(__name__)
INF = math.inf


def luby(i: int) -> int:
    """The i-th term (1-based) of the Luby restart sequence 1 1 2 1 1 2 4 ..."""
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while i != (1 << k) - 1:
        i -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < i:
            k += 1
    return 1 << (k - 1)


class Shared:
    """State shared by all workers of one solve: incumbent, bound, stop flag."""

    def __init__(self, policy: GapPolicy):
        self.lock = threading.Lock()
        self.best = INF
        self.best_values: Optional[list[int]] = None
        self.lower = -INF
        self.stop = False
        self.finished_status: Optional[Status] = None
        self.trace: list[TraceEvent] = []
        self.policy = policy
        self.start = time.monotonic()
        self.first_incumbent_lb = -INF

    def elapsed(self) -> float:
        return time.monotonic() - self.start

    def offer(self, obj: int, values: list[int]) -> bool:
        with self.lock:
            if obj >= self.best:
                return False
            self.best, self.best_values = obj, values
            self.trace.append(TraceEvent(self.elapsed(), obj, min(self.lower, obj)))
            return True

    def raise_lower(self, lb: float) -> None:
        with self.lock:
            lb = min(lb, self.best)
            if lb > self.lower:
                self.lower = lb
                if self.best < INF:
                    self.trace.append(TraceEvent(self.elapsed(), self.best, lb))


class Engine:
    """One search worker. Public read access for strategies: ``lo``, ``hi``, ``model``, ``rng``."""

    def __init__(self, model: ConstraintModel, shared: Shared, seed: int = 0, worker: int = 0,
                 strategy: object = None, bound_providers: Sequence[Callable[["Engine"], float]] = (),
                 hints: Optional[dict[int, int]] = None):
        self.model = model
        self.shared = shared
        self.worker = worker
        self.rng = random.Random(seed * 7919 + worker)
        self.strategy = strategy
        self.providers = list(bound_providers)
        self.hints = dict(hints or {})
        n = model.num_vars
        self.lo = list(model.lo)
        self.hi = list(model.hi)
        self.trail: list[tuple[int, int, int]] = []
        self.cc: list[tuple[int, ...]] = []
        self.cv: list[tuple[int, ...]] = []
        self.clo: list[float] = []
        self.chi: list[float] = []
        self.rows_of: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for cid, c in enumerate(model.constraints):
            terms, clo, chi = to_linear(c)
            self._add_row(terms, clo, chi, cid)
        self.obj_c = tuple(c for c, _ in model.objective)
        self.obj_v = tuple(v for _, v in model.objective)
        self.cut_id = len(self.cc)
        self._add_row(model.objective, -INF, INF, -1)
        rows = len(self.cc)
        # running activity bounds and the largest single-term swing per row
        self.amin = [0] * rows
        self.amax = [0] * rows
        self.cap = [0] * rows
        for r in range(rows):
            mn = mx = cap = 0
            for c, v in zip(self.cc[r], self.cv[r]):
                a, b = self.lo[v], self.hi[v]
                if c > 0:
                    mn += c * a
                    mx += c * b
                else:
                    mn += c * b
                    mx += c * a
                cap = max(cap, abs(c) * (b - a))
            self.amin[r], self.amax[r], self.cap[r] = mn, mx, cap
        self.queue: list[int] = []
        self.queued = bytearray(rows)
        self.nodes = 0
        self.conflict = False
        self.limit_hit = False
        self.failed_row = -1  # row that caused the last propagation failure
        self.order = list(model.groups.get("branch_order", [])) + list(range(n))

    def _add_row(self, terms, clo, chi, cid) -> None:
        row = len(self.cc)
        self.cc.append(tuple(c for c, _ in terms))
        self.cv.append(tuple(v for _, v in terms))
        self.clo.append(clo)
        self.chi.append(chi)
        for c, v in terms:
            if not 0 <= v < len(self.rows_of):
                raise ModelError(f"references undeclared variable {v}", cid if cid >= 0 else None)
            self.rows_of[v].append((row, c))

    # -- domain updates --------------------------------------------------------
    def _set(self, v: int, lo: int, hi: int) -> bool:
        if lo > hi:
            return False
        olo, ohi = self.lo[v], self.hi[v]
        if lo == olo and hi == ohi:
            return True
        self.trail.append((v, olo, ohi))
        self.lo[v], self.hi[v] = lo, hi
        dlo, dhi = lo - olo, hi - ohi
        amin, amax, q, queued = self.amin, self.amax, self.queue, self.queued
        for r, c in self.rows_of[v]:
            if c > 0:
                amin[r] += c * dlo
                amax[r] += c * dhi
            else:
                amin[r] += c * dhi
                amax[r] += c * dlo
            if not queued[r]:
                queued[r] = 1
                q.append(r)
        return True

    def assign(self, v: int, value: int) -> bool:
        return self._set(v, value, value)

    def undo(self, mark: int) -> None:
        trail, lo, hi = self.trail, self.lo, self.hi
        amin, amax, rows_of = self.amin, self.amax, self.rows_of
        while len(trail) > mark:
            v, a, b = trail.pop()
            dlo, dhi = a - lo[v], b - hi[v]
            lo[v], hi[v] = a, b
            for r, c in rows_of[v]:
                if c > 0:
                    amin[r] += c * dlo
                    amax[r] += c * dhi
                else:
                    amin[r] += c * dhi
                    amax[r] += c * dlo

    def is_fixed(self, v: int) -> bool:
        return self.lo[v] == self.hi[v]

    # -- propagation -----------------------------------------------------------
    def propagate(self) -> bool:
        q, queued = self.queue, self.queued
        lo, hi = self.lo, self.hi
        cc, cv, clo, chi = self.cc, self.cv, self.clo, self.chi
        amin, amax, cap = self.amin, self.amax, self.cap
        while q:
            r = q.pop()
            queued[r] = 0
            mn, mx, L, H = amin[r], amax[r], clo[r], chi[r]
            if mn > H or mx < L:
                self.failed_row = r
                self._clear_queue()
                return False
            up = H - mn  # room above the minimum activity (inf when unbounded)
            dn = mx - L
            cp = cap[r]
            if up >= cp and dn >= cp:
                continue
            for c, v in zip(cc[r], cv[r]):
                a, b = lo[v], hi[v]
                if a == b:
                    continue
                if c > 0:
                    span = c * (b - a)
                    nb = a + int(up // c) if span > up else b
                    na = b - int(dn // c) if span > dn else a
                else:
                    span = -c * (b - a)
                    na = b - int(up // -c) if span > up else a
                    nb = a + int(dn // -c) if span > dn else b
                if na != a or nb != b:
                    if not self._set(v, max(a, na), min(b, nb)):
                        self.failed_row = r
                        self._clear_queue()
                        return False
                    # activities moved; later terms still see valid (looser) room
        return True

    def _clear_queue(self) -> None:
        for r in self.queue:
            self.queued[r] = 0
        self.queue.clear()

    def enqueue(self, r: int) -> None:
        if not self.queued[r]:
            self.queued[r] = 1
            self.queue.append(r)

    # -- bounds ------------------------------------------------------------------
    def objective_floor(self) -> int:
        return self.model.objective_offset + self.amin[self.cut_id]

    def node_bound(self) -> float:
        lb = self.objective_floor()
        for p in self.providers:
            b = p(self)
            if b is not None and b > lb:
                lb = b
                if lb >= self.shared.best:
                    break
        return lb

    # -- branching ---------------------------------------------------------------
    def _choose(self) -> Optional[tuple[int, list]]:
        """Next decision as ``(var, values)``; ``var`` is None when each value is a
        batch of ``(var, value)`` pairs applied together."""
        if self.strategy is not None:
            d = self.strategy.choose(self)  # type: ignore[attr-defined]
            if d is not None:
                return d[0], list(d[1])
        lo, hi = self.lo, self.hi
        for v in self.order:
            if lo[v] != hi[v]:
                vals = list(range(lo[v], hi[v] + 1))
                h = self.hints.get(v)
                if h in vals:
                    vals.remove(h)
                    vals.insert(0, h)
                elif self.worker and len(vals) == 2 and self.rng.random() < 0.3:
                    vals.reverse()
                return v, vals
        return None

    # -- search ------------------------------------------------------------------
    def _apply(self, var: Optional[int], val) -> None:
        if var is not None:
            self._set(var, val, val)
            return
        for v, x in val:
            if not self._set(v, x, x):
                self.conflict = True
                return

    def _set_cutoff(self) -> None:
        best = self.shared.best
        if best < INF:
            nh = best - 1 - self.model.objective_offset
            if nh < self.chi[self.cut_id]:
                self.chi[self.cut_id] = nh
            self.enqueue(self.cut_id)

    def restart(self) -> None:
        self.undo(0)
        self._clear_queue()
        self.conflict = False
        if self.strategy is not None and hasattr(self.strategy, "randomize"):
            self.strategy.randomize(self.rng)

    def run(self, node_limit: Optional[int] = None) -> Optional[Status]:
        """Search until exhaustion or stop; returns the proven status, or None if
        interrupted or ``node_limit`` nodes were spent (then ``limit_hit`` is set)."""
        sh = self.shared
        self.limit_hit = False
        for r in range(len(self.cc)):
            self.enqueue(r)
        stack: list[list] = []  # [trail mark, var, values, next index, parent bound]
        last_cut = INF
        budget = INF if node_limit is None else self.nodes + node_limit
        while True:
            if sh.stop:
                return None
            if self.nodes >= budget:
                # the pending child is bounded by its parent frame
                self._periodic(stack, stack[-1][4] if stack else -INF)
                self.limit_hit = True
                return None
            self.nodes += 1
            if sh.best != last_cut:
                last_cut = sh.best
                self._set_cutoff()
            elif sh.best < INF:
                self.enqueue(self.cut_id)
            ok = not self.conflict and self.propagate()
            self.conflict = False
            lb = -INF
            if ok:
                lb = self.node_bound()
                ok = lb < sh.best
            if ok:
                d = self._choose()
                if d is None:
                    values = list(self.lo)
                    obj = self.model.objective_value(values)
                    first = sh.best_values is None
                    if sh.offer(obj, values):
                        logger.debug("worker %d incumbent %s after %d nodes", self.worker, obj, self.nodes)
                        if first:
                            # global bound at the moment the first solution appears
                            self._periodic(stack, INF)
                            with sh.lock:
                                if sh.first_incumbent_lb == -INF:
                                    sh.first_incumbent_lb = sh.lower
                else:
                    var, vals = d
                    stack.append([len(self.trail), var, vals, 1, lb])
                    self._apply(var, vals[0])
                    if self.nodes & 255 == 0:
                        self._periodic(stack, lb)
                    continue
            if self.nodes & 255 == 0:
                self._periodic(stack, lb if ok else INF)
            # backtrack to the deepest frame with an untried value
            while stack:
                fr = stack[-1]
                self.undo(fr[0])
                self._clear_queue()
                if fr[3] < len(fr[2]):
                    val = fr[2][fr[3]]
                    fr[3] += 1
                    self._apply(fr[1], val)
                    break
                stack.pop()
            else:
                return Status.OPTIMAL if sh.best < INF else Status.UNSAT

    def _periodic(self, stack: list[list], current: float) -> None:
        sh = self.shared
        open_lb = min((fr[4] for fr in stack if fr[3] < len(fr[2])), default=INF)
        glb = min(open_lb, current, sh.best)
        if glb > -INF:
            sh.raise_lower(glb)
        if sh.best < INF and gap_termination(sh.policy, sh.best, sh.lower, sh.elapsed()) == "stop":
            sh.stop = True
        elif sh.elapsed() >= sh.policy.time_limit:
            sh.stop = True


def solve_reference(req: SolveRequest) -> SolveResult:
    model = req.model
    model.check_wellformed()
    shared = Shared(req.policy)
    workers = max(1, int(req.workers))
    statuses: list[Optional[Status]] = [None] * workers
    engines: list[Engine] = []

    def make(w: int) -> Engine:
        strat = req.strategy_factory() if req.strategy_factory else None
        return Engine(model, shared, req.seed, w, strat, req.bound_providers, dict(req.hints))

    def work(w: int) -> None:
        eng = engines[w]
        base = max(0, int(req.restart_base))
        if w and eng.strategy is not None and hasattr(eng.strategy, "randomize"):
            eng.strategy.randomize(eng.rng)
        i = 1
        while True:
            st = eng.run(base * luby(i) if base else None)
            if not eng.limit_hit:
                break
            i += 1
            eng.restart()
        statuses[w] = st
        if st is not None:
            with shared.lock:
                if shared.finished_status is None:
                    shared.finished_status = st
            shared.stop = True

    engines = [make(w) for w in range(workers)]
    if workers == 1:
        work(0)
    else:
        threads = [threading.Thread(target=work, args=(w,), daemon=True) for w in range(workers)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    nodes = sum(e.nodes for e in engines)
    elapsed = shared.elapsed()
    done = shared.finished_status
    if done == Status.UNSAT:
        return SolveResult(Status.UNSAT, None, INF, INF, shared.trace, nodes, elapsed)
    if done == Status.OPTIMAL:
        best = shared.best
        if shared.lower < best:
            shared.trace.append(TraceEvent(elapsed, best, best))
        return SolveResult(Status.OPTIMAL, shared.best_values, best, best, shared.trace, nodes, elapsed,
                           first_incumbent_lower_bound=shared.first_incumbent_lb)
    best, lower = shared.best, shared.lower
    if best < INF and lower >= best:
        return SolveResult(Status.OPTIMAL, shared.best_values, best, best, shared.trace, nodes, elapsed,
                           first_incumbent_lower_bound=shared.first_incumbent_lb)
    timed_out = elapsed >= req.policy.time_limit
    if best < INF and not timed_out:
        status = Status.FEASIBLE_GAP
    else:
        status = Status.TIMEOUT
    return SolveResult(status, shared.best_values, best, lower, shared.trace, nodes, elapsed,
                       first_incumbent_lower_bound=shared.first_incumbent_lb)
