"""Experiment configuration: JSON ingestion with a strict schema, reference
defaults for every parameter, and deterministic resolution of derived
values. See docs/config_schema.md for the key reference."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

from .baselines import SCHEME_KINDS, SchemeSpec, scheme_spec
from .channel import PhysicalConfig
from .optimizer import OptimizerConfig
from .radiation import PatternCodebook, build_codebook
from .scenarios import (
    Cuboid,
    HorizontalDisk,
    Segment,
    Shell,
    Sphere,
    StaticScenario,
    TimeVaryingScenario,
    default_static_hotspots,
    default_timevarying_centers,
)


class ConfigError(Exception):
    """Base class for configuration failures (CLI exit code 2)."""


class ConfigParseError(ConfigError):
    """The config file could not be read or parsed."""


class ConfigSchemaError(ConfigError):
    """Unknown keys or wrong value types."""


class ConfigValueError(ConfigError):
    """Physically or logically inconsistent values."""


def _require_mapping(value, path):
    if not isinstance(value, dict):
        raise ConfigSchemaError(f"{path} must be an object")
    return dict(value)


class _Section:
    """Pops typed keys from one config object and rejects leftovers."""

    def __init__(self, raw, path):
        self.raw = _require_mapping(raw, path) if raw is not None else {}
        self.path = path

    def _key(self, name):
        return f"{self.path}.{name}" if self.path else name

    def take(self, name, kind, default, *, allow_none=False):
        if name not in self.raw:
            return default
        value = self.raw.pop(name)
        if value is None:
            if allow_none:
                return None
            raise ConfigSchemaError(f"{self._key(name)} must not be null")
        if kind is float and isinstance(value, bool):
            raise ConfigSchemaError(f"{self._key(name)} must be a number")
        if kind is float and isinstance(value, (int, float)):
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigSchemaError(f"{self._key(name)} must be an integer")
            return value
        if kind is str and isinstance(value, str):
            return value
        if kind is list and isinstance(value, list):
            return value
        raise ConfigSchemaError(f"{self._key(name)} has the wrong type")

    def pop_raw(self, name):
        return self.raw.pop(name, None)

    def finish(self):
        if self.raw:
            unknown = ", ".join(sorted(self.raw))
            where = self.path or "top level"
            raise ConfigSchemaError(f"unknown key(s) in {where}: {unknown}")


def _positive(value, key):
    if value <= 0:
        raise ConfigValueError(f"{key} must be positive, got {value!r}")
    return value


def _fraction(value, key):
    if not 0.0 <= value <= 1.0:
        raise ConfigValueError(f"{key} must lie in [0, 1], got {value!r}")
    return value


def _vec3(value, key):
    if not (isinstance(value, (list, tuple)) and len(value) == 3
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        raise ConfigSchemaError(f"{key} must be a 3-vector of numbers")
    return tuple(float(v) for v in value)


# -- region schema ----------------------------------------------------------

def _region_from_dict(raw, key):
    sec = _Section(raw, key)
    shape = sec.take("shape", str, None)
    if shape is None:
        raise ConfigSchemaError(f"{key}.shape is required")
    if shape == "cuboid":
        center = _vec3(sec.pop_raw("center"), f"{key}.center")
        size = _vec3(sec.pop_raw("size"), f"{key}.size")
        sec.finish()
        if any(s <= 0 for s in size):
            raise ConfigValueError(f"{key}.size must be positive")
        return Cuboid(center=center, size=size)
    if shape == "disk":
        center = _vec3(sec.pop_raw("center"), f"{key}.center")
        radius = sec.take("radius", float, None)
        sec.finish()
        if radius is None or radius <= 0:
            raise ConfigValueError(f"{key}.radius must be positive")
        return HorizontalDisk(center=center, radius=radius)
    if shape == "segment":
        start = _vec3(sec.pop_raw("start"), f"{key}.start")
        end = _vec3(sec.pop_raw("end"), f"{key}.end")
        sec.finish()
        return Segment(start=start, end=end)
    if shape == "sphere":
        center = _vec3(sec.pop_raw("center"), f"{key}.center")
        radius = sec.take("radius", float, None)
        sec.finish()
        if radius is None or radius <= 0:
            raise ConfigValueError(f"{key}.radius must be positive")
        return Sphere(center=center, radius=radius)
    raise ConfigSchemaError(f"{key}.shape must be one of cuboid, disk, segment, sphere")


def _region_to_dict(region):
    if isinstance(region, Cuboid):
        return {"shape": "cuboid", "center": list(region.center), "size": list(region.size)}
    if isinstance(region, HorizontalDisk):
        return {"shape": "disk", "center": list(region.center), "radius": region.radius}
    if isinstance(region, Segment):
        return {"shape": "segment", "start": list(region.start), "end": list(region.end)}
    if isinstance(region, Sphere):
        return {"shape": "sphere", "center": list(region.center), "radius": region.radius}
    raise TypeError(f"unsupported region {type(region).__name__}")


# -- config sections --------------------------------------------------------

@dataclass(frozen=True)
class PhysicalSection:
    carrier_hz: float = 2.4e9
    tx_power_w: float = 0.03
    noise_power_w: float = 1e-8
    pathloss_ref: float | None = None
    pathloss_exp: float = 2.0

    @property
    def wavelength_m(self) -> float:
        return 299_792_458.0 / self.carrier_hz

    def resolved_pathloss_ref(self) -> float:
        if self.pathloss_ref is not None:
            return self.pathloss_ref
        return (self.wavelength_m / (4.0 * math.pi)) ** 2

    def build(self) -> PhysicalConfig:
        return PhysicalConfig.from_carrier(
            self.carrier_hz,
            tx_power_w=self.tx_power_w,
            noise_power_w=self.noise_power_w,
            pathloss_ref=self.pathloss_ref,
            pathloss_exp=self.pathloss_exp,
        )


@dataclass(frozen=True)
class GeometrySection:
    rail_radius_m: float = 1.0
    array_count: int = 16
    antennas_per_array: int = 4
    min_separation_rad: float = math.pi / 24.0
    element_spacing_m: float | None = None  # None: half wavelength
    upa_rows: int | None = None
    upa_cols: int | None = None

    def resolved_spacing(self, wavelength_m: float) -> float:
        return self.element_spacing_m if self.element_spacing_m is not None else 0.5 * wavelength_m


@dataclass(frozen=True)
class CodebookSection:
    theta_max_rad: float = math.pi / 3.0
    dtheta_rad: float = math.pi / 12.0
    dphi_rad: float = math.pi / 12.0
    g_max_dbi: float = 8.0
    theta3db_rad: float = math.pi / 6.0
    phi3db_rad: float = math.pi / 6.0
    g_s_db: float = 30.0
    g_v_db: float = 30.0
    quadrature_step_rad: float = math.radians(0.25)

    def build(self) -> PatternCodebook:
        return build_codebook(
            theta_max_rad=self.theta_max_rad,
            dtheta_rad=self.dtheta_rad,
            dphi_rad=self.dphi_rad,
            g_max_dbi=self.g_max_dbi,
            theta3db_rad=self.theta3db_rad,
            phi3db_rad=self.phi3db_rad,
            g_s_db=self.g_s_db,
            g_v_db=self.g_v_db,
            quadrature_step_rad=self.quadrature_step_rad,
        )


@dataclass(frozen=True)
class ScenarioSection:
    kind: str = "static"
    sample_count: int = 100
    mean_total_users: float = 24.0
    sparsity: float = 0.4
    shell_inner_m: float = 50.0
    shell_outer_m: float = 120.0
    hotspots: tuple | None = None  # None: reference regions

    def shell(self) -> Shell:
        return Shell(r_min=self.shell_inner_m, r_max=self.shell_outer_m)

    def resolved_hotspots(self) -> tuple:
        return self.hotspots if self.hotspots is not None else default_static_hotspots()

    def build_static(self, sparsity: float | None = None) -> StaticScenario:
        return StaticScenario(
            coverage=self.shell(),
            hotspots=self.resolved_hotspots(),
            mean_total=self.mean_total_users,
            sparsity=self.sparsity if sparsity is None else sparsity,
        )


@dataclass(frozen=True)
class TimeVaryingSection:
    mean_total_users: float = 24.0
    sparsity: float = 0.15
    snapshot_count: int = 200
    snapshot_interval_s: float = 1.0
    position_update_period_s: float = 50.0
    center_persistence: float = 0.99
    center_noise_std_m: float = 0.05
    survival_probs: tuple = (0.98, 0.98, 0.98, 0.98)
    offset_persistence: float = 0.95
    offset_noise_std_m: float = 0.6
    hotspot_radius_m: float = 15.0
    centers: tuple = ()

    def resolved_centers(self) -> tuple:
        return self.centers if self.centers else default_timevarying_centers()

    def build(self, shell: Shell, sparsity: float | None = None) -> TimeVaryingScenario:
        return TimeVaryingScenario(
            coverage=shell,
            mean_centers=self.resolved_centers(),
            hotspot_radius_m=self.hotspot_radius_m,
            center_persistence=self.center_persistence,
            center_noise_std=self.center_noise_std_m,
            survival_probs=self.survival_probs,
            offset_persistence=self.offset_persistence,
            offset_noise_std=self.offset_noise_std_m,
            mean_total=self.mean_total_users,
            sparsity=self.sparsity if sparsity is None else sparsity,
            snapshot_interval_s=self.snapshot_interval_s,
            position_update_period_s=self.position_update_period_s,
        )


@dataclass(frozen=True)
class SweepSection:
    sparsity_values: tuple = (0.1, 0.3, 0.5, 0.7)
    schemes: tuple = (("FPA", None), ("PA_ONLY", None), ("PS_ONLY", None), ("HMET", None))

    def scheme_specs(self) -> list:
        return [scheme_spec(kind, array_count) for kind, array_count in self.schemes]


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 1
    scheme_kind: str = "HMET"
    scheme_array_count: int | None = None
    physical: PhysicalSection = PhysicalSection()
    geometry: GeometrySection = GeometrySection()
    codebook: CodebookSection = CodebookSection()
    scenario: ScenarioSection = ScenarioSection()
    timevary: TimeVaryingSection = TimeVaryingSection()
    optimizer: OptimizerConfig = OptimizerConfig()
    sweep: SweepSection = SweepSection()

    def scheme(self) -> SchemeSpec:
        return scheme_spec(self.scheme_kind, self.scheme_array_count)

    def resolved_dict(self) -> dict:
        """Fully resolved, JSON-serializable view: every default applied and
        every derived value made concrete. Reloading it round-trips."""
        wavelength = self.physical.wavelength_m
        return {
            "seed": self.seed,
            "scheme": {"kind": self.scheme_kind, "array_count": self.scheme_array_count},
            "physical": {
                "carrier_hz": self.physical.carrier_hz,
                "tx_power_w": self.physical.tx_power_w,
                "noise_power_w": self.physical.noise_power_w,
                "pathloss_ref": self.physical.resolved_pathloss_ref(),
                "pathloss_exp": self.physical.pathloss_exp,
            },
            "geometry": {
                "rail_radius_m": self.geometry.rail_radius_m,
                "array_count": self.geometry.array_count,
                "antennas_per_array": self.geometry.antennas_per_array,
                "min_separation_rad": self.geometry.min_separation_rad,
                "element_spacing_m": self.geometry.resolved_spacing(wavelength),
                "upa_rows": self.geometry.upa_rows,
                "upa_cols": self.geometry.upa_cols,
            },
            "codebook": {
                "theta_max_rad": self.codebook.theta_max_rad,
                "dtheta_rad": self.codebook.dtheta_rad,
                "dphi_rad": self.codebook.dphi_rad,
                "g_max_dbi": self.codebook.g_max_dbi,
                "theta3db_rad": self.codebook.theta3db_rad,
                "phi3db_rad": self.codebook.phi3db_rad,
                "g_s_db": self.codebook.g_s_db,
                "g_v_db": self.codebook.g_v_db,
                "quadrature_step_rad": self.codebook.quadrature_step_rad,
            },
            "scenario": {
                "kind": self.scenario.kind,
                "sample_count": self.scenario.sample_count,
                "mean_total_users": self.scenario.mean_total_users,
                "sparsity": self.scenario.sparsity,
                "shell_inner_m": self.scenario.shell_inner_m,
                "shell_outer_m": self.scenario.shell_outer_m,
                "hotspots": [_region_to_dict(r) for r in self.scenario.resolved_hotspots()],
            },
            "timevary": {
                "mean_total_users": self.timevary.mean_total_users,
                "sparsity": self.timevary.sparsity,
                "snapshot_count": self.timevary.snapshot_count,
                "snapshot_interval_s": self.timevary.snapshot_interval_s,
                "position_update_period_s": self.timevary.position_update_period_s,
                "center_persistence": self.timevary.center_persistence,
                "center_noise_std_m": self.timevary.center_noise_std_m,
                "survival_probs": list(self.timevary.survival_probs),
                "offset_persistence": self.timevary.offset_persistence,
                "offset_noise_std_m": self.timevary.offset_noise_std_m,
                "hotspot_radius_m": self.timevary.hotspot_radius_m,
                "centers": [list(c) for c in self.timevary.resolved_centers()],
            },
            "optimizer": {
                "eps_threshold": self.optimizer.eps_threshold,
                "max_inner_position": self.optimizer.max_inner_position,
                "max_outer_position": self.optimizer.max_outer_position,
                "max_pattern_sweeps": self.optimizer.max_pattern_sweeps,
                "max_cycles": self.optimizer.max_cycles,
                "eta_init": self.optimizer.eta_init,
                "backtrack_factor": self.optimizer.backtrack_factor,
                "armijo_coeff": self.optimizer.armijo_coeff,
                "fd_step": self.optimizer.fd_step,
            },
            "sweep": {
                "sparsity_values": list(self.sweep.sparsity_values),
                "schemes": [{"kind": k, "array_count": a} for k, a in self.sweep.schemes],
            },
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.resolved_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def load_config(path) -> ExperimentConfig:
    """Parse, schema-check, and validate a JSON experiment config."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigParseError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def config_from_dict(raw) -> ExperimentConfig:
    top = _Section(raw, "")

    seed = top.take("seed", int, 1)
    if not 0 <= seed < 2 ** 64:
        raise ConfigValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")

    scheme_sec = _Section(top.pop_raw("scheme"), "scheme")
    scheme_kind = scheme_sec.take("kind", str, "HMET")
    scheme_array_count = scheme_sec.take("array_count", int, None, allow_none=True)
    scheme_sec.finish()
    if scheme_kind not in SCHEME_KINDS:
        raise ConfigValueError(f"scheme.kind must be one of {SCHEME_KINDS}, got {scheme_kind!r}")
    if scheme_array_count is not None:
        _positive(scheme_array_count, "scheme.array_count")

    phys_sec = _Section(top.pop_raw("physical"), "physical")
    physical = PhysicalSection(
        carrier_hz=_positive(phys_sec.take("carrier_hz", float, 2.4e9), "physical.carrier_hz"),
        tx_power_w=_positive(phys_sec.take("tx_power_w", float, 0.03), "physical.tx_power_w"),
        noise_power_w=_positive(phys_sec.take("noise_power_w", float, 1e-8), "physical.noise_power_w"),
        pathloss_ref=phys_sec.take("pathloss_ref", float, None, allow_none=True),
        pathloss_exp=phys_sec.take("pathloss_exp", float, 2.0),
    )
    phys_sec.finish()
    if physical.pathloss_ref is not None:
        _positive(physical.pathloss_ref, "physical.pathloss_ref")

    geo_sec = _Section(top.pop_raw("geometry"), "geometry")
    array_width = geo_sec.take("array_width_m", float, None, allow_none=True)
    min_sep = geo_sec.take("min_separation_rad", float, None, allow_none=True)
    rail_radius = _positive(geo_sec.take("rail_radius_m", float, 1.0), "geometry.rail_radius_m")
    if min_sep is None and array_width is not None:
        min_sep = 2.0 * math.atan(array_width / (2.0 * rail_radius))
    if min_sep is None:
        min_sep = math.pi / 24.0
    geometry = GeometrySection(
        rail_radius_m=rail_radius,
        array_count=_positive(geo_sec.take("array_count", int, 16), "geometry.array_count"),
        antennas_per_array=_positive(geo_sec.take("antennas_per_array", int, 4),
                                     "geometry.antennas_per_array"),
        min_separation_rad=_positive(min_sep, "geometry.min_separation_rad"),
        element_spacing_m=geo_sec.take("element_spacing_m", float, None, allow_none=True),
        upa_rows=geo_sec.take("upa_rows", int, None, allow_none=True),
        upa_cols=geo_sec.take("upa_cols", int, None, allow_none=True),
    )
    geo_sec.finish()
    if geometry.element_spacing_m is not None:
        _positive(geometry.element_spacing_m, "geometry.element_spacing_m")
    if (geometry.upa_rows is None) != (geometry.upa_cols is None):
        raise ConfigValueError("geometry.upa_rows and geometry.upa_cols must be given together")
    if geometry.upa_rows is not None:
        if geometry.upa_rows * geometry.upa_cols != geometry.antennas_per_array:
            raise ConfigValueError(
                "geometry.upa_rows * geometry.upa_cols must equal geometry.antennas_per_array"
            )

    cb_sec = _Section(top.pop_raw("codebook"), "codebook")
    codebook = CodebookSection(
        theta_max_rad=cb_sec.take("theta_max_rad", float, math.pi / 3.0),
        dtheta_rad=_positive(cb_sec.take("dtheta_rad", float, math.pi / 12.0), "codebook.dtheta_rad"),
        dphi_rad=_positive(cb_sec.take("dphi_rad", float, math.pi / 12.0), "codebook.dphi_rad"),
        g_max_dbi=cb_sec.take("g_max_dbi", float, 8.0),
        theta3db_rad=_positive(cb_sec.take("theta3db_rad", float, math.pi / 6.0), "codebook.theta3db_rad"),
        phi3db_rad=_positive(cb_sec.take("phi3db_rad", float, math.pi / 6.0), "codebook.phi3db_rad"),
        g_s_db=_positive(cb_sec.take("g_s_db", float, 30.0), "codebook.g_s_db"),
        g_v_db=_positive(cb_sec.take("g_v_db", float, 30.0), "codebook.g_v_db"),
        quadrature_step_rad=_positive(cb_sec.take("quadrature_step_rad", float, math.radians(0.25)),
                                      "codebook.quadrature_step_rad"),
    )
    cb_sec.finish()
    if not (math.pi / 6.0 - 1e-12 <= codebook.theta_max_rad <= math.pi / 3.0 + 1e-12):
        raise ConfigValueError("codebook.theta_max_rad must lie in [pi/6, pi/3]")

    scn_sec = _Section(top.pop_raw("scenario"), "scenario")
    kind = scn_sec.take("kind", str, "static")
    if kind not in ("static", "timevarying"):
        raise ConfigValueError("scenario.kind must be 'static' or 'timevarying'")
    hotspots_raw = scn_sec.take("hotspots", list, None, allow_none=True)
    hotspots = None
    if hotspots_raw is not None:
        hotspots = tuple(
            _region_from_dict(r, f"scenario.hotspots[{i}]") for i, r in enumerate(hotspots_raw)
        )
        if not hotspots:
            raise ConfigValueError("scenario.hotspots must not be empty when given")
    scenario = ScenarioSection(
        kind=kind,
        sample_count=_positive(scn_sec.take("sample_count", int, 100), "scenario.sample_count"),
        mean_total_users=scn_sec.take("mean_total_users", float, 24.0),
        sparsity=_fraction(scn_sec.take("sparsity", float, 0.4), "scenario.sparsity"),
        shell_inner_m=_positive(scn_sec.take("shell_inner_m", float, 50.0), "scenario.shell_inner_m"),
        shell_outer_m=_positive(scn_sec.take("shell_outer_m", float, 120.0), "scenario.shell_outer_m"),
        hotspots=hotspots,
    )
    scn_sec.finish()
    if scenario.mean_total_users < 0:
        raise ConfigValueError("scenario.mean_total_users must be non-negative")
    if scenario.shell_inner_m >= scenario.shell_outer_m:
        raise ConfigValueError("scenario.shell_inner_m must be below scenario.shell_outer_m")

    tv_sec = _Section(top.pop_raw("timevary"), "timevary")
    survival_raw = tv_sec.pop_raw("survival_probs")
    centers_raw = tv_sec.take("centers", list, None, allow_none=True)
    centers = ()
    if centers_raw is not None:
        centers = tuple(_vec3(c, f"timevary.centers[{i}]") for i, c in enumerate(centers_raw))
        if not centers:
            raise ConfigValueError("timevary.centers must not be empty when given")
    hotspot_count = len(centers) if centers else len(default_timevarying_centers())
    if survival_raw is None:
        survival = (0.98,) * (hotspot_count + 1)
    elif isinstance(survival_raw, (int, float)) and not isinstance(survival_raw, bool):
        survival = (float(survival_raw),) * (hotspot_count + 1)
    elif isinstance(survival_raw, list):
        if len(survival_raw) != hotspot_count + 1:
            raise ConfigValueError(
                f"timevary.survival_probs needs {hotspot_count + 1} entries (regular region first)"
            )
        survival = tuple(float(v) for v in survival_raw)
    else:
        raise ConfigSchemaError("timevary.survival_probs must be a number or a list")
    for rho in survival:
        if not 0.0 < rho <= 1.0:
            raise ConfigValueError("timevary.survival_probs entries must lie in (0, 1]")
    timevary = TimeVaryingSection(
        mean_total_users=tv_sec.take("mean_total_users", float, 24.0),
        sparsity=_fraction(tv_sec.take("sparsity", float, 0.15), "timevary.sparsity"),
        snapshot_count=_positive(tv_sec.take("snapshot_count", int, 200), "timevary.snapshot_count"),
        snapshot_interval_s=_positive(tv_sec.take("snapshot_interval_s", float, 1.0),
                                      "timevary.snapshot_interval_s"),
        position_update_period_s=_positive(tv_sec.take("position_update_period_s", float, 50.0),
                                           "timevary.position_update_period_s"),
        center_persistence=tv_sec.take("center_persistence", float, 0.99),
        center_noise_std_m=tv_sec.take("center_noise_std_m", float, 0.05),
        survival_probs=survival,
        offset_persistence=tv_sec.take("offset_persistence", float, 0.95),
        offset_noise_std_m=tv_sec.take("offset_noise_std_m", float, 0.6),
        hotspot_radius_m=_positive(tv_sec.take("hotspot_radius_m", float, 15.0),
                                   "timevary.hotspot_radius_m"),
        centers=centers,
    )
    tv_sec.finish()
    for name in ("center_persistence", "offset_persistence"):
        value = getattr(timevary, name)
        if not 0.0 < value <= 1.0:
            raise ConfigValueError(f"timevary.{name} must lie in (0, 1]")
    if timevary.center_noise_std_m < 0 or timevary.offset_noise_std_m < 0:
        raise ConfigValueError("timevary noise standard deviations must be non-negative")
    ratio = timevary.position_update_period_s / timevary.snapshot_interval_s
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ConfigValueError(
            "timevary.position_update_period_s must be an integer multiple of snapshot_interval_s"
        )

    opt_sec = _Section(top.pop_raw("optimizer"), "optimizer")
    try:
        optimizer = OptimizerConfig(
            eps_threshold=opt_sec.take("eps_threshold", float, 5e-4),
            max_inner_position=opt_sec.take("max_inner_position", int, 50),
            max_outer_position=opt_sec.take("max_outer_position", int, 3),
            max_pattern_sweeps=opt_sec.take("max_pattern_sweeps", int, 3),
            max_cycles=opt_sec.take("max_cycles", int, 2),
            eta_init=opt_sec.take("eta_init", float, 0.1),
            backtrack_factor=opt_sec.take("backtrack_factor", float, 0.5),
            armijo_coeff=opt_sec.take("armijo_coeff", float, 1e-4),
            fd_step=opt_sec.take("fd_step", float, 1e-4),
        )
    except ValueError as exc:
        raise ConfigValueError(f"optimizer: {exc}") from exc
    opt_sec.finish()

    sweep_sec = _Section(top.pop_raw("sweep"), "sweep")
    sparsity_values_raw = sweep_sec.take("sparsity_values", list, None, allow_none=True)
    if sparsity_values_raw is None:
        sparsity_values = (0.1, 0.3, 0.5, 0.7)
    else:
        if not sparsity_values_raw:
            raise ConfigValueError("sweep.sparsity_values must not be empty")
        sparsity_values = tuple(
            _fraction(float(v), f"sweep.sparsity_values[{i}]")
            for i, v in enumerate(sparsity_values_raw)
        )
    schemes_raw = sweep_sec.take("schemes", list, None, allow_none=True)
    if schemes_raw is None:
        schemes = (("FPA", None), ("PA_ONLY", None), ("PS_ONLY", None), ("HMET", None))
    else:
        schemes = []
        for i, entry in enumerate(schemes_raw):
            key = f"sweep.schemes[{i}]"
            if isinstance(entry, str):
                kind_v, count_v = entry, None
            elif isinstance(entry, dict):
                entry_sec = _Section(entry, key)
                kind_v = entry_sec.take("kind", str, None)
                count_v = entry_sec.take("array_count", int, None, allow_none=True)
                entry_sec.finish()
            else:
                raise ConfigSchemaError(f"{key} must be a string or an object")
            if kind_v not in SCHEME_KINDS:
                raise ConfigValueError(f"{key}.kind must be one of {SCHEME_KINDS}, got {kind_v!r}")
            if count_v is not None:
                _positive(count_v, f"{key}.array_count")
            schemes.append((kind_v, count_v))
        if not schemes:
            raise ConfigValueError("sweep.schemes must not be empty")
        schemes = tuple(schemes)
    sweep_sec.finish()
    sweep = SweepSection(sparsity_values=sparsity_values, schemes=schemes)

    top.finish()
    return ExperimentConfig(
        seed=seed,
        scheme_kind=scheme_kind,
        scheme_array_count=scheme_array_count,
        physical=physical,
        geometry=geometry,
        codebook=codebook,
        scenario=scenario,
        timevary=timevary,
        optimizer=optimizer,
        sweep=sweep,
    )
