"""Comparison scheme constructors: fixed arrays, position-adjustment-only,
and pattern-selection-only variants of the full two-block optimizer."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .channel import SelectionState
from .geometry import StationGeometry, equally_spaced_azimuths, wrap_angle
from .optimizer import OptimizerConfig
from .radiation import PatternCodebook

SCHEME_KINDS = ("FPA", "PA_ONLY", "PS_ONLY", "HMET")

_SCHEME_FLAGS = {
    "FPA": (False, False),
    "PA_ONLY": (True, False),
    "PS_ONLY": (False, True),
    "HMET": (True, True),
}

# Fixed-array baseline: three arrays, remainder antennas dropped.
FPA_ARRAY_COUNT = 3


@dataclass(frozen=True)
class SchemeSpec:
    """Which optimizer blocks a scheme runs, plus an optional array-count
    override that redistributes the fixed total antenna budget."""

    kind: str
    optimize_positions: bool
    optimize_patterns: bool
    array_count: int | None = None

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}; expected one of {SCHEME_KINDS}")
        if (self.optimize_positions, self.optimize_patterns) != _SCHEME_FLAGS[self.kind]:
            raise ValueError(f"block flags inconsistent with scheme kind {self.kind!r}")
        if self.array_count is not None and self.array_count < 1:
            raise ValueError("array_count override must be positive")

    @property
    def label(self) -> str:
        if self.array_count is None:
            return self.kind
        return f"{self.kind}_B{self.array_count}"


def scheme_spec(kind: str, array_count: int | None = None) -> SchemeSpec:
    if kind not in _SCHEME_FLAGS:
        raise ValueError(f"unknown scheme kind {kind!r}; expected one of {SCHEME_KINDS}")
    positions, patterns = _SCHEME_FLAGS[kind]
    return SchemeSpec(kind=kind, optimize_positions=positions, optimize_patterns=patterns,
                      array_count=array_count)


def make_pa_only(geom: StationGeometry) -> SchemeSpec:
    """Position adjustment only: patterns stay frozen on the default mode."""
    return scheme_spec("PA_ONLY", array_count=geom.array_count)


def make_ps_only(array_count: int, antennas_per_array: int) -> SchemeSpec:
    """Pattern selection only: azimuths equally spaced and frozen."""
    del antennas_per_array  # fixed by the caller's antenna budget
    return scheme_spec("PS_ONLY", array_count=array_count)


@dataclass(frozen=True)
class SchemeSetup:
    """Everything a run needs for one scheme: geometry, the initial
    selection, and the (possibly scheme-adjusted) optimizer budget."""

    spec: SchemeSpec
    geom: StationGeometry
    selection: SelectionState
    optimizer: OptimizerConfig


def make_fpa(total_antennas: int, *, sample_count: int, codebook: PatternCodebook,
             rail_radius_m: float, min_separation_rad: float, element_spacing_m: float):
    """Fixed baseline: three equally spaced arrays with floor(total/3)
    antennas each, every antenna locked to the default boresight mode."""
    if total_antennas < FPA_ARRAY_COUNT:
        raise ValueError(f"need at least {FPA_ARRAY_COUNT} antennas")
    per_array = total_antennas // FPA_ARRAY_COUNT
    geom = StationGeometry.create(
        rail_radius_m=rail_radius_m,
        array_count=FPA_ARRAY_COUNT,
        antennas_per_array=per_array,
        array_azimuths_rad=equally_spaced_azimuths(FPA_ARRAY_COUNT),
        element_spacing_m=element_spacing_m,
        min_separation_rad=min_separation_rad,
    )
    selection = SelectionState.default(
        sample_count, FPA_ARRAY_COUNT, per_array, codebook.default_mode_index, codebook.mode_count
    )
    return geom, selection


def build_setup(spec: SchemeSpec, *, base_array_count: int, base_antennas_per_array: int,
                sample_count: int, codebook: PatternCodebook, rail_radius_m: float,
                min_separation_rad: float, element_spacing_m: float,
                optimizer_cfg: OptimizerConfig, upa_rows: int | None = None,
                upa_cols: int | None = None, initial_azimuths=None) -> SchemeSetup:
    """Instantiate a scheme against the base antenna budget.

    FPA and array-count overrides redistribute the fixed total
    ``base_array_count * base_antennas_per_array`` with the floor rule,
    dropping the remainder. PA-only / PS-only get the doubled block budget
    used by the reference comparisons.
    """
    total = base_array_count * base_antennas_per_array
    if spec.kind == "FPA":
        array_count = FPA_ARRAY_COUNT
        per_array = total // array_count
    elif spec.array_count is not None:
        array_count = spec.array_count
        per_array = total // array_count
    else:
        array_count = base_array_count
        per_array = base_antennas_per_array
    if per_array < 1:
        raise ValueError(f"antenna budget {total} too small for {array_count} arrays")
    if per_array != base_antennas_per_array:
        upa_rows = upa_cols = None  # redistributed budget: fall back to auto factoring
    if initial_azimuths is None:
        initial_azimuths = equally_spaced_azimuths(array_count)
    else:
        initial_azimuths = tuple(wrap_angle(a) for a in initial_azimuths)
        if len(initial_azimuths) != array_count:
            raise ValueError("initial_azimuths length does not match the scheme's array count")
    geom = StationGeometry.create(
        rail_radius_m=rail_radius_m,
        array_count=array_count,
        antennas_per_array=per_array,
        array_azimuths_rad=initial_azimuths,
        element_spacing_m=element_spacing_m,
        min_separation_rad=min_separation_rad,
        upa_rows=upa_rows,
        upa_cols=upa_cols,
    )
    selection = SelectionState.default(
        sample_count, array_count, per_array, codebook.default_mode_index, codebook.mode_count
    )
    optimizer_cfg = _scheme_budget(spec, optimizer_cfg)
    return SchemeSetup(spec=spec, geom=geom, selection=selection, optimizer=optimizer_cfg)


def _scheme_budget(spec: SchemeSpec, cfg: OptimizerConfig) -> OptimizerConfig:
    # Single-block schemes run their block with the doubled budget used by
    # the reference comparisons (6 sweeps instead of 3).
    if spec.kind == "PA_ONLY":
        return replace(cfg, max_outer_position=2 * cfg.max_outer_position)
    if spec.kind == "PS_ONLY":
        return replace(cfg, max_pattern_sweeps=2 * cfg.max_pattern_sweeps)
    return cfg
