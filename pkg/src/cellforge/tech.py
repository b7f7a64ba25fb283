"""Technology configuration and gear-ratio arithmetic.

All geometry is integer nanometers. Layer indices follow the stack used by the
synthesizer: 1 = placement (poly, vertical), 2 = M0 (horizontal),
3 = M1 (vertical), 4 = M2 (horizontal).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import yaml

logger = logging.getLogger(__name__)

LAYERS = (1, 2, 3, 4)
HORIZONTAL_LAYERS = frozenset({2, 4})
VERTICAL_LAYERS = frozenset({1, 3})
ROUTING_LAYERS = (2, 3, 4)


class ConfigError(ValueError):
    """Raised for an invalid or inconsistent technology configuration."""


@dataclass(frozen=True)
class LayerRules:
    mar_length: int = 0
    eol_spacing: int = 0
    via_separation_radius: int = 0
    shr_distance: int = 0
    # (parallel run length, required spacing), ascending by run length
    prl_spacing_table: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        for name in ("mar_length", "eol_spacing", "via_separation_radius", "shr_distance"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        runs = [r for r, _ in self.prl_spacing_table]
        if runs != sorted(runs):
            raise ConfigError("prl_spacing_table must be sorted by run length")
        if any(r < 0 or s < 0 for r, s in self.prl_spacing_table):
            raise ConfigError("prl_spacing_table entries must be >= 0")


@dataclass(frozen=True)
class DesignRuleSet:
    """Per-layer conditional metal rules (keys are routing layer indices).

    The via-separation radius of layer i applies to vias between layer i
    and layer i + 1.
    """

    layers: Mapping[int, LayerRules] = field(default_factory=dict)

    def __getitem__(self, layer: int) -> LayerRules:
        return self.layers.get(layer, LayerRules())


@dataclass(frozen=True)
class ObjectiveWeights:
    lambda0: int = 1000
    lambda1: int = 1
    lambda2: int = 1
    lambda3: int = 1
    lambda4: int = 1

    def __post_init__(self) -> None:
        for i, w in enumerate(self.as_tuple()):
            if w < 0 or int(w) != w:
                raise ConfigError(f"lambda{i} must be a non-negative integer")

    def as_tuple(self) -> tuple[int, int, int, int, int]:
        return (self.lambda0, self.lambda1, self.lambda2, self.lambda3, self.lambda4)

    def combine(self, cw: int, wl: int, sgd: int, dbx: int, m2: int) -> int:
        return (self.lambda0 * cw + self.lambda1 * wl - self.lambda2 * sgd
                - self.lambda3 * dbx + self.lambda4 * m2)


# Ablation objective sets: which auxiliary weights stay enabled.
OBJECTIVE_SETS = {
    "a": (),
    "b": ("lambda2",),
    "c": ("lambda3",),
    "d": ("lambda4",),
    "e": ("lambda2", "lambda3", "lambda4"),
}


def weights_for_set(base: ObjectiveWeights, name: str) -> ObjectiveWeights:
    """Restrict ``base`` to one of the ablation objective sets ``a``..``e``."""
    if name not in OBJECTIVE_SETS:
        raise ConfigError(f"unknown objective set {name!r}; expected one of a..e")
    keep = OBJECTIVE_SETS[name]
    return replace(base, **{k: (getattr(base, k) if k in keep else 0)
                            for k in ("lambda2", "lambda3", "lambda4")})


@dataclass(frozen=True)
class AccelSettings:
    cluster_kmax: int | None = None
    cluster_seed: int = 0
    itp: bool = False
    rlbt: bool = True
    relative_gap: float = 0.0
    time_limit: float = 300.0


@dataclass(frozen=True)
class TechConfig:
    mp: Mapping[int, int]
    delta: Mapping[int, int]
    row_count: int = 4
    c_db: int = 1
    dr: DesignRuleSet = field(default_factory=DesignRuleSet)
    weights: ObjectiveWeights = field(default_factory=ObjectiveWeights)
    theta: int = 0
    min_cut_width_cpp: int = 2
    m0_pins_enabled: bool = True
    via_weight: int | None = None  # defaults to one M0 pitch
    units_per_fin: int = 1
    accel: AccelSettings = field(default_factory=AccelSettings)

    def __post_init__(self) -> None:
        mp = {int(k): int(v) for k, v in self.mp.items()}
        delta = {int(k): int(v) for k, v in self.delta.items()}
        object.__setattr__(self, "mp", mp)
        object.__setattr__(self, "delta", {i: delta.get(i, 0) for i in LAYERS})
        if set(mp) != set(LAYERS):
            raise ConfigError("pitches required for layers 1..4")
        for i in LAYERS:
            if mp[i] <= 0:
                raise ConfigError(f"mp{i} must be > 0")
            if not 0 <= self.delta[i] < mp[i]:
                raise ConfigError(f"delta{i} must satisfy 0 <= delta < mp{i}")
        if mp[2] != mp[4]:
            raise ConfigError("horizontal layers must share pitch (mp2 == mp4)")
        if self.row_count < 1:
            raise ConfigError("row_count must be >= 1")
        if self.c_db < 0:
            raise ConfigError("c_db must be >= 0")
        if self.theta < 0:
            raise ConfigError("theta must be >= 0")
        if self.min_cut_width_cpp not in (1, 2):
            raise ConfigError("min_cut_width_cpp must be 1 or 2")
        if self.delta[3] not in enumerate_offsets(mp[1], mp[3]):
            raise ConfigError(
                f"M1 offset {self.delta[3]} is not admissible for gear ratio "
                f"{mp[1]}:{mp[3]} (allowed: {enumerate_offsets(mp[1], mp[3])})")

    @property
    def gear_ratio(self) -> tuple[int, int]:
        return (self.mp[1], self.mp[3])

    @property
    def cpp(self) -> int:
        return self.mp[1]

    @property
    def wl_via_weight(self) -> int:
        return self.mp[2] if self.via_weight is None else self.via_weight

    def with_offset(self, delta3: int) -> "TechConfig":
        return replace(self, delta={**self.delta, 3: delta3})

    def with_gear_ratio(self, mp3: int, delta3: int = 0) -> "TechConfig":
        return replace(self, mp={**self.mp, 3: mp3}, delta={**self.delta, 3: delta3})


def enumerate_offsets(mp1: int, mp3: int) -> list[int]:
    """Admissible M1 offsets: multiples of gcd(mp1, mp3) below one M1 pitch."""
    if mp1 <= 0 or mp3 <= 0:
        raise ValueError("pitches must be positive")
    g = math.gcd(mp1, mp3)
    return list(range(0, mp3, g))


def total_cell_width(w_p: int, w_n: int, c_db: int, mp1: int) -> int:
    return max(w_p, w_n) + c_db * mp1


def _track_positions(offset: int, pitch: int, extent: int) -> range:
    return range(offset, extent + 1, pitch)


def count_m1_resources(width_cpp: int, cfg: TechConfig) -> int:
    """Number of usable M1 columns; columns on either cell edge are dummy."""
    if width_cpp < 1:
        raise ValueError("width_cpp must be >= 1")
    w = width_cpp * cfg.mp[1]
    return sum(1 for c in _track_positions(cfg.delta[3], cfg.mp[3], w) if 0 < c < w)


def check_placement_alignment(width_cpp: int, cfg: TechConfig, global_origin_offset: int) -> bool:
    """True iff every local poly and M1 column lands on the global grid.

    The global grids share the local pitches and have offset 0 at the chip
    origin; the cell's left edge sits at ``global_origin_offset``.
    """
    w = width_cpp * cfg.mp[1]
    for layer in (1, 3):
        pitch = cfg.mp[layer]
        for c in _track_positions(cfg.delta[layer], pitch, w):
            if (global_origin_offset + c) % pitch:
                return False
    return True


# -- loading -----------------------------------------------------------------

def _rules_from(raw: Mapping[str, Any]) -> LayerRules:
    prl = tuple(tuple(int(x) for x in row) for row in raw.get("prl_spacing_table", ()))
    return LayerRules(
        mar_length=int(raw.get("mar_length", 0)),
        eol_spacing=int(raw.get("eol_spacing", 0)),
        via_separation_radius=int(raw.get("via_separation_radius", 0)),
        shr_distance=int(raw.get("shr_distance", 0)),
        prl_spacing_table=prl,  # type: ignore[arg-type]
    )


def tech_from_dict(raw: Mapping[str, Any]) -> TechConfig:
    try:
        mp = {int(k): int(v) for k, v in raw["mp"].items()}
    except KeyError as exc:
        raise ConfigError("missing 'mp' section") from exc
    delta = {int(k): int(v) for k, v in (raw.get("delta") or {}).items()}
    rules = {int(k): _rules_from(v or {}) for k, v in (raw.get("design_rules") or {}).items()}
    weights = ObjectiveWeights(**{k: int(v) for k, v in (raw.get("weights") or {}).items()})
    accel_raw = dict(raw.get("accel") or {})
    accel = AccelSettings(**accel_raw)
    known = {"mp", "delta", "design_rules", "weights", "accel"}
    scalars = {k: v for k, v in raw.items() if k not in known}
    unknown = set(scalars) - {"row_count", "c_db", "theta", "min_cut_width_cpp",
                              "m0_pins_enabled", "via_weight", "units_per_fin"}
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    return TechConfig(mp=mp, delta=delta, dr=DesignRuleSet(rules), weights=weights,
                      accel=accel, **scalars)


def tech_to_dict(cfg: TechConfig) -> dict[str, Any]:
    rules = {}
    for layer, r in sorted(cfg.dr.layers.items()):
        rules[layer] = {
            "mar_length": r.mar_length,
            "eol_spacing": r.eol_spacing,
            "via_separation_radius": r.via_separation_radius,
            "shr_distance": r.shr_distance,
            "prl_spacing_table": [list(row) for row in r.prl_spacing_table],
        }
    a = cfg.accel
    return {
        "mp": dict(cfg.mp),
        "delta": dict(cfg.delta),
        "row_count": cfg.row_count,
        "c_db": cfg.c_db,
        "theta": cfg.theta,
        "min_cut_width_cpp": cfg.min_cut_width_cpp,
        "m0_pins_enabled": cfg.m0_pins_enabled,
        "via_weight": cfg.via_weight,
        "units_per_fin": cfg.units_per_fin,
        "design_rules": rules,
        "weights": dict(zip(("lambda0", "lambda1", "lambda2", "lambda3", "lambda4"),
                            cfg.weights.as_tuple())),
        "accel": {"cluster_kmax": a.cluster_kmax, "cluster_seed": a.cluster_seed, "itp": a.itp,
                  "rlbt": a.rlbt, "relative_gap": a.relative_gap, "time_limit": a.time_limit},
    }


def load_tech(path: str | Path | None = None) -> TechConfig:
    """Load a YAML technology file; ``None`` loads the bundled 2F4T default."""
    if path is None:
        text = resources.files("cellforge.data").joinpath("tech_2f4t.yaml").read_text()
    else:
        text = Path(path).read_text()
    raw = yaml.safe_load(text)
    if not isinstance(raw, Mapping):
        raise ConfigError("technology file must contain a mapping")
    return tech_from_dict(raw)
