"""Command-line entry point."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .pipeline import (AblationMismatch, RunConfig, StageError, batch_ok, format_summary, load_base_tech,
                       parse_gear_ratio, resolve_netlist, run_ablation, run_batch, run_cell, run_gr_study)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tech", help="technology YAML (default: bundled 2F4T)")
    p.add_argument("--seed", type=int, default=0, help="search seed; CELLFORGE_SEED overrides it")


def _solver_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gr", action="append", default=[], metavar="A:B",
                   help="gear ratio as 3:2 or 45:30; repeatable (default: the tech file's M1 pitch)")
    p.add_argument("--offset", default="all", help="'all' or a fixed M1 offset in nm")
    p.add_argument("--objective-set", default="e", choices=list("abcde"))
    p.add_argument("--cluster-kmax", type=int, default=None, help="enable clustering with this cluster size cap")
    p.add_argument("--no-cluster", action="store_true", help="disable clustering even if the tech file enables it")
    p.add_argument("--itp", dest="itp", action="store_true", default=None, help="order identical transistors")
    p.add_argument("--no-itp", dest="itp", action="store_false")
    p.add_argument("--no-rlbt", action="store_true", help="drop the HPWL routing lower bound")
    p.add_argument("--gap", type=float, default=None, help="relative-gap stop threshold, e.g. 0.01")
    p.add_argument("--time-limit", type=float, default=None, help="seconds per solve")
    p.add_argument("--backend", default="reference", help="'reference' or 'external:<command>'")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--widen-cdb", type=int, default=2, help="extra diffusion breaks tried on UNSAT")
    p.add_argument("--out-dir", help="write .layout/.svg bundles and summaries here")
    p.add_argument("--emit-model", action="store_true", help="also write each constraint model")
    p.add_argument("--dump-grid", action="store_true", help="also write each routing grid")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock columns for byte-stable output")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cellforge", description="Standard-cell layout synthesis under gear ratios.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen", help="synthesize every offset variant of one cell")
    p.add_argument("--netlist", required=True, help="SPICE/text netlist path or bundled cell name")
    _common(p)
    _solver_opts(p)

    p = sub.add_parser("batch", help="synthesize several cells")
    p.add_argument("--netlist", action="append", default=[], help="repeatable; path or bundled name")
    p.add_argument("--all-bundled", action="store_true", help="every bundled cell")
    p.add_argument("--jobs", type=int, default=1, help="parallel processes over cells")
    _common(p)
    _solver_opts(p)

    p = sub.add_parser("ablate", help="compare objective sets a..e on one cell")
    p.add_argument("--netlist", required=True)
    p.add_argument("--sets", default="abcde", help="objective sets to run, e.g. 'ae'")
    _common(p)
    _solver_opts(p)

    p = sub.add_parser("grstudy", help="M1 resources and grid alignment per gear ratio")
    p.add_argument("--gr", action="append", default=[], metavar="A:B")
    p.add_argument("--max-width", type=int, default=10)
    p.add_argument("--align-width", type=int, default=2)
    _common(p)

    p = sub.add_parser("drc", help="audit a .layout file")
    p.add_argument("layout")
    p.add_argument("--no-pin-separation", action="store_true")
    p.add_argument("--theta", type=int, default=None)
    _common(p)

    p = sub.add_parser("render", help="draw a .layout file as SVG")
    p.add_argument("layout")
    p.add_argument("-o", "--output", help="SVG path (default: stdout)")

    p = sub.add_parser("cluster-dump", help="print the transistor clusters of a cell")
    p.add_argument("--netlist", required=True)
    p.add_argument("--cluster-kmax", type=int, default=4)
    _common(p)

    p = sub.add_parser("emit-model", help="write the constraint model of a cell")
    p.add_argument("--netlist", required=True)
    p.add_argument("-o", "--output", help="model path (default: stdout)")
    p.add_argument("--gr", default=None, metavar="A:B")
    p.add_argument("--offset", type=int, default=0)
    p.add_argument("--dump-grid", help="also write the routing grid to this path")
    _common(p)
    return ap


def _run_config(a: argparse.Namespace, netlists: Sequence[str]) -> RunConfig:
    base = load_base_tech(RunConfig(tech=a.tech))
    acc = base.accel
    kmax = None if a.no_cluster else (a.cluster_kmax if a.cluster_kmax is not None else acc.cluster_kmax)
    offset = a.offset if a.offset == "all" else _int(a.offset, "--offset")
    return RunConfig(
        tech=a.tech, netlists=tuple(netlists),
        gear_ratios=tuple(parse_gear_ratio(g, base.mp[1]) for g in a.gr),
        offset=offset, objective_set=a.objective_set, cluster_kmax=kmax,
        itp=acc.itp if a.itp is None else a.itp, rlbt=acc.rlbt and not a.no_rlbt,
        relative_gap=acc.relative_gap if a.gap is None else a.gap,
        time_limit=acc.time_limit if a.time_limit is None else a.time_limit,
        backend=a.backend, workers=a.workers, seed=a.seed, widen_c_db=a.widen_cdb, out_dir=a.out_dir,
        emit_model=a.emit_model, dump_grid=a.dump_grid, timing=not a.no_timing)


def _int(text: str, flag: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise StageError("config", f"{flag} expects an integer or 'all', got {text!r}") from exc


def _report(results, cfg: RunConfig) -> None:
    text = format_summary(results, cfg.timing)
    sys.stdout.write(text)
    if cfg.out_dir:
        Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        (Path(cfg.out_dir) / "summary.txt").write_text(text)


def _cmd_gen(a) -> int:
    cfg = _run_config(a, [a.netlist])
    results = run_cell(cfg)
    _report(results, cfg)
    return 0 if batch_ok(results) else 1


def _cmd_batch(a) -> int:
    from ..netlist import bundled_cell_names

    names = list(a.netlist) + (bundled_cell_names() if a.all_bundled else [])
    cfg = _run_config(a, names)
    results = run_batch(cfg, a.jobs)
    _report(results, cfg)
    return 0 if batch_ok(results) else 1


def _cmd_ablate(a) -> int:
    cfg = replace(_run_config(a, [a.netlist]), objective_sets=tuple(a.sets))
    try:
        res = run_ablation(cfg)
    except AblationMismatch as exc:
        print(f"ablation mismatch: {exc}", file=sys.stderr)
        return 1
    for s, r in res.runs.items():
        cw_wl = res.outcomes.get(s, ("-", "-"))
        print(f"set {s}: status {r.status} cw {cw_wl[0]} wl {cw_wl[1]} objective {r.objective:g}")
    if res.uncertified:
        print(f"not certified within the time limit: {' '.join(res.uncertified)}", file=sys.stderr)
        return 1
    print("identical (CW, WL) across sets" if res.neutral else "sets differ")
    return 0


def _cmd_grstudy(a) -> int:
    base = load_base_tech(RunConfig(tech=a.tech))
    cfg = RunConfig(tech=a.tech, gear_ratios=tuple(parse_gear_ratio(g, base.mp[1]) for g in a.gr)
                    or tuple(sorted({45, 30, 27, base.mp[3]}, reverse=True)))
    sys.stdout.write(run_gr_study(cfg, a.max_width, a.align_width).format())
    return 0


def _read_layout(path: str):
    from ..layout import LayoutFormatError, parse

    try:
        return parse(Path(path).read_text())
    except (OSError, LayoutFormatError) as exc:
        raise StageError("parse", f"{path}: {exc}") from exc


def _cmd_drc(a) -> int:
    from ..layout import audit

    lay = _read_layout(a.layout)
    base = load_base_tech(RunConfig(tech=a.tech))
    rep = audit(lay, base, pin_separation=not a.no_pin_separation, theta=a.theta)
    for v in rep.violations:
        print(f"{v.kind}: {v.message}")
    print(f"{len(rep.violations)} violation(s)")
    return 0 if rep.ok else 1


def _cmd_render(a) -> int:
    from ..layout import render_svg

    svg = render_svg(_read_layout(a.layout))
    if a.output:
        Path(a.output).write_text(svg)
    else:
        sys.stdout.write(svg)
    return 0


def _cmd_cluster_dump(a) -> int:
    from ..accel.cluster import cluster_netlist, dump_clusters
    from ..netlist import fold

    cfg = RunConfig(tech=a.tech, seed=a.seed)
    base = load_base_tech(cfg)
    nl = fold(resolve_netlist(a.netlist, base.units_per_fin))
    try:
        cs = cluster_netlist(nl, a.cluster_kmax, cfg.effective_seed())
    except ValueError as exc:
        raise StageError("cluster", str(exc)) from exc
    sys.stdout.write(dump_clusters(cs, nl.name))
    return 0


def _cmd_emit_model(a) -> int:
    from ..grid import dump_grid
    from ..model.encode import encode
    from ..model.ir import model_to_text
    from ..netlist import fold

    base = load_base_tech(RunConfig(tech=a.tech))
    mp3 = parse_gear_ratio(a.gr, base.mp[1]) if a.gr else base.mp[3]
    try:
        tech = base.with_gear_ratio(mp3, a.offset)
        enc = encode(fold(resolve_netlist(a.netlist, base.units_per_fin)), tech)
    except ValueError as exc:
        raise StageError("encode", str(exc)) from exc
    text = model_to_text(enc.model)
    if a.output:
        Path(a.output).write_text(text)
    else:
        sys.stdout.write(text)
    if a.dump_grid:
        Path(a.dump_grid).write_text(dump_grid(enc.grid))
    return 0


COMMANDS = {
    "gen": _cmd_gen, "batch": _cmd_batch, "ablate": _cmd_ablate, "grstudy": _cmd_grstudy, "drc": _cmd_drc,
    "render": _cmd_render, "cluster-dump": _cmd_cluster_dump, "emit-model": _cmd_emit_model,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    a = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[a.cmd](a)
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
