"""End-to-end runs: generation per offset variant, ablation and gear-ratio studies."""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

from ..accel.gap import GapPolicy
from ..netlist import Netlist, NetlistError, bundled_cell, bundled_cell_names, fold, load_netlist
from ..tech import (OBJECTIVE_SETS, ConfigError, TechConfig, check_placement_alignment, count_m1_resources,
                    enumerate_offsets, load_tech, weights_for_set)

SEED_ENV = "CELLFORGE_SEED"


class StageError(RuntimeError):
    """A pipeline failure tagged with the stage that raised it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


@dataclass(frozen=True)
class RunConfig:
    tech: Optional[str] = None
    netlists: tuple[str, ...] = ()
    # M1 pitches to study; empty keeps the technology file's pitch
    gear_ratios: tuple[int, ...] = ()
    # "all" expands every admissible offset, an integer pins one
    offset: str | int = "all"
    objective_set: str = "e"
    objective_sets: tuple[str, ...] = ("a", "b", "c", "d", "e")
    cluster_kmax: Optional[int] = None
    itp: bool = False
    rlbt: bool = True
    relative_gap: float = 0.0
    time_limit: float = 300.0
    backend: str = "reference"
    workers: int = 1
    seed: int = 0
    # extra diffusion-break columns tried when the first width is infeasible
    widen_c_db: int = 2
    out_dir: Optional[str] = None
    emit_model: bool = False
    dump_grid: bool = False
    timing: bool = True

    def effective_seed(self) -> int:
        env = os.environ.get(SEED_ENV)
        if env is None or env == "":
            return self.seed
        try:
            return int(env)
        except ValueError as exc:
            raise StageError("config", f"{SEED_ENV} must be an integer, got {env!r}") from exc


@dataclass
class VariantResult:
    cell: str
    gear_ratio: tuple[int, int]
    delta: int
    c_db: int
    status: str
    objective: float
    lower_bound: float
    runtime: float
    nodes: int
    result: object = None  # SolveResult
    layout: object = None
    metrics: object = None
    audit: object = None
    encoding: object = None
    weights: object = None
    files: list[str] = field(default_factory=list)

    @property
    def label(self) -> str:
        return f"{self.cell}_{self.gear_ratio[0]}-{self.gear_ratio[1]}_d{self.delta}"

    @property
    def consistent(self) -> bool:
        """Objective recomputed from the layout matches the solver's."""
        if self.metrics is None:
            return False
        return self.metrics.objective(self.weights) == self.objective


def load_base_tech(cfg: RunConfig) -> TechConfig:
    try:
        return load_tech(cfg.tech)
    except (OSError, ConfigError, ValueError, TypeError) as exc:
        raise StageError("tech", str(exc)) from exc


def resolve_netlist(source: str, units_per_fin: int = 1) -> Netlist:
    """A file path, or the name of a bundled cell."""
    try:
        if Path(source).is_file():
            return load_netlist(source, units_per_fin)
        if source in bundled_cell_names():
            return bundled_cell(source)
    except (NetlistError, OSError, ValueError) as exc:
        raise StageError("parse", f"{source}: {exc}") from exc
    raise StageError("parse", f"no netlist file or bundled cell named {source!r}")


def variants(cfg: RunConfig, base: TechConfig) -> list[TechConfig]:
    out = []
    for mp3 in cfg.gear_ratios or (base.mp[3],):
        if mp3 <= 0:
            raise StageError("config", f"M1 pitch must be positive, got {mp3}")
        offsets = enumerate_offsets(base.mp[1], mp3)
        if cfg.offset == "all":
            chosen = offsets
        else:
            d = int(cfg.offset)
            if d not in offsets:
                raise StageError("config", f"offset {d} not admissible for {base.mp[1]}:{mp3} (allowed {offsets})")
            chosen = [d]
        try:
            out.extend(base.with_gear_ratio(mp3, d) for d in chosen)
        except ConfigError as exc:
            raise StageError("config", str(exc)) from exc
    return out


def solve_variant(netlist: Netlist, tech: TechConfig, cfg: RunConfig, objective_set: Optional[str] = None,
                  collect: bool = True) -> VariantResult:
    """Encode, solve, verify, extract, audit and measure one technology variant."""
    from ..accel.cluster import cluster_netlist
    from ..accel.rlbt import RlbtBound
    from ..layout import audit, extract, metrics
    from ..model.encode import EncodeOptions, EncodingError, encode
    from ..model.search import RoutingBound, strategy_factory
    from ..solver import SolveRequest, Status, solve

    try:
        tech = replace(tech, weights=weights_for_set(tech.weights, objective_set or cfg.objective_set))
    except ConfigError as exc:
        raise StageError("config", str(exc)) from exc
    nl = fold(netlist)
    seed = cfg.effective_seed()
    clusters = ()
    if cfg.cluster_kmax:
        try:
            clusters = cluster_netlist(nl, cfg.cluster_kmax, seed).as_lists()
        except ValueError as exc:
            raise StageError("cluster", str(exc)) from exc
    policy = GapPolicy(cfg.relative_gap, cfg.time_limit)
    widen = 0
    while True:
        t = replace(tech, c_db=tech.c_db + widen)
        try:
            enc = encode(nl, t, EncodeOptions(clusters=clusters, itp=cfg.itp))
        except (EncodingError, ValueError) as exc:
            raise StageError("encode", str(exc)) from exc
        bounds = [RoutingBound(enc)]
        if cfg.rlbt:
            bounds.append(RlbtBound(enc))
        req = SolveRequest(enc.model, workers=cfg.workers, seed=seed, policy=policy,
                           strategy_factory=strategy_factory(enc), bound_providers=bounds)
        try:
            res = solve(req, cfg.backend)
        except (RuntimeError, ValueError, OSError) as exc:
            raise StageError("solve", str(exc)) from exc
        if res.status is Status.UNSAT and widen < cfg.widen_c_db:
            widen += 1
            continue
        break
    vr = VariantResult(nl.name, t.gear_ratio, t.delta[3], t.c_db, res.status.value, res.objective_bound,
                       res.lower_bound, res.runtime, res.nodes, res, encoding=enc, weights=t.weights)
    if res.assignment is not None and collect:
        try:
            lay = extract(res.assignment, enc)
        except RuntimeError as exc:
            raise StageError("extract", str(exc)) from exc
        vr.layout = lay
        vr.metrics = metrics(lay)
        vr.audit = audit(lay, t, theta=enc.theta)
    return vr


def _write_bundle(vr: VariantResult, out: Path, cfg: RunConfig) -> None:
    from ..grid import dump_grid
    from ..layout import render_svg, serialize
    from ..model.ir import model_to_text

    out.mkdir(parents=True, exist_ok=True)
    stem = out / vr.label
    if vr.layout is not None:
        stem.with_suffix(".layout").write_text(serialize(vr.layout))
        stem.with_suffix(".svg").write_text(render_svg(vr.layout))
        vr.files += [str(stem.with_suffix(".layout")), str(stem.with_suffix(".svg"))]
    if cfg.emit_model:
        p = Path(f"{stem}.model")
        p.write_text(model_to_text(vr.encoding.model))
        vr.files.append(str(p))
    if cfg.dump_grid:
        p = Path(f"{stem}.grid")
        p.write_text(dump_grid(vr.encoding.grid))
        vr.files.append(str(p))


def run_cell(cfg: RunConfig, netlist: Optional[Netlist] = None) -> list[VariantResult]:
    """Every offset variant of one cell; bundles are written when ``out_dir`` is set."""
    base = load_base_tech(cfg)
    if netlist is None:
        if len(cfg.netlists) != 1:
            raise StageError("config", "run_cell needs exactly one netlist")
        netlist = resolve_netlist(cfg.netlists[0], base.units_per_fin)
    results = []
    for tech in variants(cfg, base):
        vr = solve_variant(netlist, tech, cfg)
        if cfg.out_dir:
            _write_bundle(vr, Path(cfg.out_dir), cfg)
        results.append(vr)
    return results


def _batch_job(args: tuple[RunConfig, str]) -> list[VariantResult]:
    cfg, source = args
    out = run_cell(replace(cfg, netlists=(source,)))
    for vr in out:  # keep process-pool payloads small
        vr.encoding = None
    return out


def run_batch(cfg: RunConfig, jobs: int = 1) -> list[VariantResult]:
    """All netlists times all variants, in input order regardless of ``jobs``."""
    if not cfg.netlists:
        raise StageError("config", "batch needs at least one netlist")
    tasks = [(cfg, s) for s in cfg.netlists]
    if jobs <= 1:
        return [vr for t in tasks for vr in run_cell(replace(cfg, netlists=(t[1],)))]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return [vr for chunk in pool.map(_batch_job, tasks) for vr in chunk]


def batch_ok(results: Sequence[VariantResult]) -> bool:
    return bool(results) and all(r.status in ("OPTIMAL", "FEASIBLE_GAP") for r in results)


SUMMARY_HEADER = ("cell", "gr", "delta", "cpp", "wl", "wl_norm", "m2", "runtime_s", "status", "audit")


def _baselines(results: Sequence[VariantResult]) -> dict[str, int]:
    """Wirelength of each cell's 1:1 variant, the normalization reference."""
    out = {}
    for r in results:
        if r.gear_ratio[0] == r.gear_ratio[1] and r.metrics is not None and r.metrics.wirelength_nm > 0:
            out.setdefault(r.cell, r.metrics.wirelength_nm)
    return out


def summary_rows(results: Sequence[VariantResult], timing: bool = True) -> list[tuple]:
    base = _baselines(results)
    rows = []
    for r in results:
        m = r.metrics
        audit_txt = "-" if r.audit is None else ("clean" if r.audit.ok else
                                                  ",".join(f"{k}:{n}" for k, n in sorted(r.audit.kinds().items())))
        norm = f"{m.wirelength_nm / base[r.cell]:.3f}" if m is not None and r.cell in base else "-"
        rows.append((r.cell, f"{r.gear_ratio[0]}:{r.gear_ratio[1]}", r.delta,
                     "-" if m is None else m.cw_cpp, "-" if m is None else m.wirelength_nm, norm,
                     "-" if m is None else m.m2_tracks_used, f"{r.runtime:.2f}" if timing else "-",
                     r.status, audit_txt))
    return rows


def format_summary(results: Sequence[VariantResult], timing: bool = True) -> str:
    rows = [SUMMARY_HEADER] + summary_rows(results, timing)
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(SUMMARY_HEADER))]
    return "\n".join("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def format_table_row(cell: str, results: Sequence[VariantResult]) -> str:
    """One LaTeX-style row: the cell, then CPP per variant, then WL per variant."""
    mine = [r for r in results if r.cell == cell]
    cpp = [str(r.metrics.cw_cpp) if r.metrics else "-" for r in mine]
    wl = [str(r.metrics.wirelength_nm) if r.metrics else "-" for r in mine]
    return " & ".join([cell] + cpp + wl) + r" \\"


# -- ablation ----------------------------------------------------------------

@dataclass
class AblationResult:
    cell: str
    runs: dict[str, VariantResult]
    uncertified: list[str]

    @property
    def outcomes(self) -> dict[str, tuple[int, int]]:
        return {s: (r.metrics.cw_cpp, r.metrics.wirelength_nm) for s, r in self.runs.items() if r.metrics}

    @property
    def neutral(self) -> bool:
        vals = {v for s, v in self.outcomes.items() if s not in self.uncertified}
        return len(vals) <= 1

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("set", "time_s", "objective_bound", "lower_bound"))
        for s, r in self.runs.items():
            for ev in r.result.trace:
                w.writerow((s, f"{ev.time:.4f}", _num(ev.objective_bound), _num(ev.lower_bound)))
        return buf.getvalue()


def _num(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return str(int(x)) if float(x).is_integer() else repr(x)


class AblationMismatch(AssertionError):
    pass


def run_ablation(cfg: RunConfig, netlist: Optional[Netlist] = None, strict: bool = True) -> AblationResult:
    """Solve one cell under each objective set and compare the final (CW, WL)."""
    if not cfg.objective_sets:
        raise StageError("config", "objective-set selector is empty")
    bad = [s for s in cfg.objective_sets if s not in OBJECTIVE_SETS]
    if bad:
        raise StageError("config", f"unknown objective sets {bad}")
    base = load_base_tech(cfg)
    if netlist is None:
        if len(cfg.netlists) != 1:
            raise StageError("config", "ablation needs exactly one netlist")
        netlist = resolve_netlist(cfg.netlists[0], base.units_per_fin)
    tech = variants(replace(cfg, offset=cfg.offset if cfg.offset != "all" else 0), base)[0]
    runs = {s: solve_variant(netlist, tech, cfg, objective_set=s) for s in cfg.objective_sets}
    res = AblationResult(netlist.name, runs, [s for s, r in runs.items() if r.status != "OPTIMAL"])
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{netlist.name}_ablation.csv").write_text(res.trace_csv())
    if strict and not res.uncertified and not res.neutral:
        raise AblationMismatch(f"objective sets disagree on (CW, WL): {res.outcomes}")
    return res


# -- gear-ratio study -----------------------------------------------------------

@dataclass
class GrStudy:
    rows: list[tuple[int, int, int, dict[int, int], dict[int, bool]]]
    widths: range

    def format(self) -> str:
        out = ["gr      delta  " + " ".join(f"w{w:<3d}" for w in self.widths) + "  aligned_origins"]
        for mp1, mp3, d, counts, aligned in self.rows:
            ok = " ".join(str(o) for o, a in sorted(aligned.items()) if a) or "-"
            out.append(f"{mp1}:{mp3:<4d} {d:<6d} " + " ".join(f"{counts[w]:<4d}" for w in self.widths) + f"  {ok}")
        return "\n".join(out) + "\n"

    def count(self, mp3: int, delta: int, width: int) -> int:
        for _, m3, d, counts, _ in self.rows:
            if (m3, d) == (mp3, delta):
                return counts[width]
        raise KeyError((mp3, delta))


def run_gr_study(cfg: RunConfig, max_width: int = 10, align_width: int = 2) -> GrStudy:
    """M1 column counts per offset and width, and which poly-grid origins align.

    Origins are the poly positions within one period ``lcm(mp1, mp3)``;
    alignment is evaluated for a cell ``align_width`` CPP wide.
    """
    base = load_base_tech(cfg)
    mp1 = base.mp[1]
    widths = range(1, max(1, max_width) + 1)
    rows = []
    for mp3 in cfg.gear_ratios or (base.mp[3],):
        period = math.lcm(mp1, mp3)
        for d in enumerate_offsets(mp1, mp3):
            t = base.with_gear_ratio(mp3, d)
            counts = {w: count_m1_resources(w, t) for w in widths}
            aligned = {o: check_placement_alignment(align_width, t, o) for o in range(0, period, mp1)}
            rows.append((mp1, mp3, d, counts, aligned))
    return GrStudy(rows, widths)


def parse_gear_ratio(text: str, mp1: int) -> int:
    """``a:b`` as a pitch ratio (``3:2``) or as pitches (``45:30``); returns the M1 pitch."""
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError as exc:
        raise StageError("config", f"gear ratio must look like a:b, got {text!r}") from exc
    if a <= 0 or b <= 0 or (mp1 * b) % a:
        raise StageError("config", f"gear ratio {text} does not give an integer M1 pitch for CPP {mp1}")
    return mp1 * b // a
