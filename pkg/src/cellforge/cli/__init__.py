"""Run orchestration and the ``cellforge`` command."""
from .main import build_parser, main
from .pipeline import (AblationMismatch, AblationResult, GrStudy, RunConfig, StageError, VariantResult, batch_ok,
                       format_summary, format_table_row, parse_gear_ratio, resolve_netlist, run_ablation,
                       run_batch, run_cell, run_gr_study, solve_variant, variants)

__all__ = [
    "AblationMismatch", "AblationResult", "GrStudy", "RunConfig", "StageError", "VariantResult", "batch_ok",
    "build_parser", "format_summary", "format_table_row", "main", "parse_gear_ratio", "resolve_netlist",
    "run_ablation", "run_batch", "run_cell", "run_gr_study", "solve_variant", "variants",
]
