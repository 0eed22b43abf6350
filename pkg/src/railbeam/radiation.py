"""Switchable radiation modes: steering-grid enumeration, directional gain,
and radiated-power equalization across modes.

Gains are stored and combined in dB throughout; conversion to linear scale
happens only at the channel boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .geometry import LocalPointing

TWO_PI = 2.0 * math.pi

REFERENCE_QUADRATURE_STEP_RAD = math.radians(0.25)

# Allowed electronic steering half-range for the elevation grid.
THETA_MAX_LO_RAD = math.pi / 6.0
THETA_MAX_HI_RAD = math.pi / 3.0


class CodebookError(ValueError):
    """Invalid steering grid or calibration setup."""


class Mode(NamedTuple):
    steer_elevation_rad: float
    steer_azimuth_rad: float
    delta_g_db: float


def _grid_points(span: float, step: float, name: str) -> int:
    if step <= 0.0:
        raise CodebookError(f"{name} must be positive")
    n = span / step
    if abs(n - round(n)) > 1e-9:
        raise CodebookError(f"{name} = {step!r} does not evenly tile its steering range")
    return int(round(n)) + 1


def enumerate_modes(theta_max_rad: float, dtheta_rad: float, dphi_rad: float):
    """Steering pairs of the uniform elevation x azimuth grid.

    Azimuth varies fastest: mode p steers to elevation
    -theta_max + floor(p / P_h) * dtheta and azimuth -pi/2 + (p mod P_h) * dphi.
    Returns (elevations, azimuths) arrays of length P_v * P_h.
    """
    if not (THETA_MAX_LO_RAD - 1e-12 <= theta_max_rad <= THETA_MAX_HI_RAD + 1e-12):
        raise CodebookError(f"theta_max must lie in [pi/6, pi/3], got {theta_max_rad!r}")
    p_v = _grid_points(2.0 * theta_max_rad, dtheta_rad, "dtheta")
    p_h = _grid_points(math.pi, dphi_rad, "dphi")
    idx = np.arange(p_v * p_h)
    elevations = -theta_max_rad + (idx // p_h) * dtheta_rad
    azimuths = -0.5 * math.pi + (idx % p_h) * dphi_rad
    return elevations, azimuths


def _locked(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PatternCodebook:
    """The discrete radiation modes of one antenna, with calibrated
    power-correction terms.

    ``delta_g_db[p]`` offsets mode p so all modes radiate the same total
    power ``p_def`` (the default mode's); templates carry zeros until
    :func:`calibrate_delta_g` runs.
    """

    theta_max_rad: float
    dtheta_rad: float
    dphi_rad: float
    p_v: int
    p_h: int
    g_max_dbi: float
    theta3db_rad: float
    phi3db_rad: float
    g_s_db: float
    g_v_db: float
    steer_elevation_rad: np.ndarray
    steer_azimuth_rad: np.ndarray
    delta_g_db: np.ndarray
    p_def: float
    quadrature_step_rad: float

    def __post_init__(self):
        for name in ("theta3db_rad", "phi3db_rad", "g_s_db", "g_v_db", "quadrature_step_rad"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if len(self.steer_elevation_rad) != self.p_v * self.p_h:
            raise ValueError("steering arrays do not match P_v * P_h")

    @property
    def mode_count(self) -> int:
        return self.p_v * self.p_h

    @property
    def default_mode_index(self) -> int:
        hits = np.flatnonzero(
            (np.abs(self.steer_elevation_rad) < 1e-12) & (np.abs(self.steer_azimuth_rad) < 1e-12)
        )
        if hits.size == 0:
            raise CodebookError("steering grid has no (0, 0) mode to define the power reference")
        return int(hits[0])

    def mode(self, p: int) -> Mode:
        return Mode(
            float(self.steer_elevation_rad[p]),
            float(self.steer_azimuth_rad[p]),
            float(self.delta_g_db[p]),
        )

    def attenuation_azimuth(self, p: int, phi: float) -> float:
        """Azimuth attenuation of mode p at azimuth phi, dB (<= 0)."""
        off = (phi - self.steer_azimuth_rad[p]) / self.phi3db_rad
        return -min(12.0 * (off * off), self.g_s_db)

    def attenuation_elevation(self, p: int, theta: float) -> float:
        """Elevation attenuation of mode p at elevation theta, dB (<= 0)."""
        off = (theta - self.steer_elevation_rad[p]) / self.theta3db_rad
        return -min(12.0 * (off * off), self.g_v_db)

    def gain_db(self, p: int, theta: float, phi: float) -> float:
        """Directional gain of mode p: peak g_max + delta_g at the steer
        point, total attenuation capped at g_s."""
        if not 0 <= p < self.mode_count:
            raise IndexError(f"mode index {p} out of range")
        total_att = -(self.attenuation_azimuth(p, phi) + self.attenuation_elevation(p, theta))
        return self.g_max_dbi + float(self.delta_g_db[p]) - min(total_att, self.g_s_db)

    def mode_gains_db(self, theta, phi, modes=None) -> np.ndarray:
        """Vectorized gain lookup, shape ``modes.shape + theta.shape`` (dB).

        ``theta``/``phi`` broadcast against each other; ``modes`` defaults
        to all modes.
        """
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if modes is None:
            th_p, ph_p, dg = self.steer_elevation_rad, self.steer_azimuth_rad, self.delta_g_db
        else:
            modes = np.asarray(modes)
            th_p = self.steer_elevation_rad[modes]
            ph_p = self.steer_azimuth_rad[modes]
            dg = self.delta_g_db[modes]
        pad = (1,) * max(theta.ndim, phi.ndim)
        th_p = th_p.reshape(th_p.shape + pad)
        ph_p = ph_p.reshape(ph_p.shape + pad)
        dg = dg.reshape(dg.shape + pad)
        ah = np.minimum(12.0 * ((phi - ph_p) / self.phi3db_rad) ** 2, self.g_s_db)
        av = np.minimum(12.0 * ((theta - th_p) / self.theta3db_rad) ** 2, self.g_v_db)
        return self.g_max_dbi + dg - np.minimum(ah + av, self.g_s_db)

    def element_gain_linear(self, p: int, local: LocalPointing) -> float:
        """Linear-scale gain of mode p toward a local pointing direction."""
        return 10.0 ** (self.gain_db(p, local.elevation_rad, local.azimuth_rad) / 10.0)

    def radiated_power(self, p: int, quadrature_step_rad: float | None = None) -> float:
        """Total radiated power of mode p (linear), integrating the linear
        gain with cos(theta) weighting over elevation [-pi/2, pi/2] and
        azimuth [-pi, pi] by 2-D composite trapezoid."""
        if not 0 <= p < self.mode_count:
            raise IndexError(f"mode index {p} out of range")
        step = self.quadrature_step_rad if quadrature_step_rad is None else quadrature_step_rad
        if step <= 0.0:
            raise ValueError("quadrature step must be positive")
        theta = np.linspace(-0.5 * math.pi, 0.5 * math.pi, max(2, round(math.pi / step) + 1))
        phi = np.linspace(-math.pi, math.pi, max(2, round(TWO_PI / step) + 1))
        av = np.minimum(12.0 * ((theta - self.steer_elevation_rad[p]) / self.theta3db_rad) ** 2, self.g_v_db)
        ah = np.minimum(12.0 * ((phi - self.steer_azimuth_rad[p]) / self.phi3db_rad) ** 2, self.g_s_db)
        base = 10.0 ** ((self.g_max_dbi + self.delta_g_db[p]) / 10.0)
        # -min(av+ah, g_s) in dB becomes max of the separable product and the floor.
        lin = base * np.maximum(np.outer(10.0 ** (-av / 10.0), 10.0 ** (-ah / 10.0)),
                                10.0 ** (-self.g_s_db / 10.0))
        integrand = lin * np.cos(theta)[:, None]
        return float(np.trapezoid(np.trapezoid(integrand, phi, axis=1), theta, axis=0))


def make_template(*, theta_max_rad, dtheta_rad, dphi_rad, g_max_dbi, theta3db_rad,
                  phi3db_rad, g_s_db, g_v_db,
                  quadrature_step_rad=REFERENCE_QUADRATURE_STEP_RAD) -> PatternCodebook:
    """Uncalibrated codebook: the steering grid with all corrections at 0."""
    elevations, azimuths = enumerate_modes(theta_max_rad, dtheta_rad, dphi_rad)
    p_v = _grid_points(2.0 * theta_max_rad, dtheta_rad, "dtheta")
    p_h = _grid_points(math.pi, dphi_rad, "dphi")
    return PatternCodebook(
        theta_max_rad=float(theta_max_rad),
        dtheta_rad=float(dtheta_rad),
        dphi_rad=float(dphi_rad),
        p_v=p_v,
        p_h=p_h,
        g_max_dbi=float(g_max_dbi),
        theta3db_rad=float(theta3db_rad),
        phi3db_rad=float(phi3db_rad),
        g_s_db=float(g_s_db),
        g_v_db=float(g_v_db),
        steer_elevation_rad=_locked(elevations),
        steer_azimuth_rad=_locked(azimuths),
        delta_g_db=_locked(np.zeros_like(elevations)),
        p_def=math.nan,
        quadrature_step_rad=float(quadrature_step_rad),
    )


def calibrate_delta_g(template: PatternCodebook) -> PatternCodebook:
    """Equalize radiated power: compute each mode's correction against the
    default (0, 0) mode's radiated power.

    The template's corrections are treated as zero regardless of content.
    Raises :class:`CodebookError` if the grid lacks the default mode.
    """
    zeroed = replace(template, delta_g_db=_locked(np.zeros(template.mode_count)))
    default = zeroed.default_mode_index
    powers = np.array([zeroed.radiated_power(p) for p in range(zeroed.mode_count)])
    p_def = float(powers[default])
    delta = 10.0 * np.log10(p_def / powers)
    return replace(zeroed, delta_g_db=_locked(delta), p_def=p_def)


def build_codebook(**params) -> PatternCodebook:
    """Enumerate the steering grid and calibrate it in one step."""
    return calibrate_delta_g(make_template(**params))


def codebook_table(codebook: PatternCodebook) -> list[tuple]:
    """Rows (p, theta_p_rad, phi_p_rad, delta_g_db) for the CSV dump."""
    return [
        (p, float(codebook.steer_elevation_rad[p]), float(codebook.steer_azimuth_rad[p]),
         float(codebook.delta_g_db[p]))
        for p in range(codebook.mode_count)
    ]
