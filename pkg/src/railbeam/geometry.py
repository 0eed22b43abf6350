"""Rail-mounted array geometry: coordinate frames, element layouts, and the
angular-separation feasible set on the circular rail.

Conventions: rail azimuths live in (-pi, pi]. An array's local frame has z
along the outward rail normal, y tangent to the rail, and x pointing down;
the element grid spans the local x-y plane so boresight is local z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi

# Tolerance for the width/separation consistency check beta = 2*atan(L/(2R)).
_BETA_CONSISTENCY_TOL = 1e-9
# Slack for pairwise separation checks, to absorb projection round-off.
_SEPARATION_SLACK = 1e-12


class InfeasibleGeometryError(ValueError):
    """No rail position can satisfy the angular-separation constraint."""


def wrap_angle(angle):
    """Wrap an angle (scalar or array) to (-pi, pi]."""
    wrapped = np.mod(angle, TWO_PI)
    wrapped = np.where(wrapped > math.pi, wrapped - TWO_PI, wrapped)
    if np.ndim(angle) == 0:
        return float(wrapped)
    return wrapped


def circular_distance(a, b):
    """Shortest angular distance between two rail azimuths, in [0, pi]."""
    d = wrap_angle(np.subtract(a, b))
    return np.abs(d) if np.ndim(d) else abs(d)


def rotation_matrix(phi: float) -> np.ndarray:
    """Local-to-global rotation for an array at rail azimuth phi.

    Columns send local x to global -z (down), local y to the rail tangent,
    and local z to the outward normal. Orthonormal with determinant +1.
    """
    s, c = math.sin(phi), math.cos(phi)
    return np.array([
        [0.0, -s, c],
        [0.0, c, s],
        [-1.0, 0.0, 0.0],
    ])


def normal_vector(phi: float) -> np.ndarray:
    """Outward unit normal of an array at rail azimuth phi."""
    return np.array([math.cos(phi), math.sin(phi), 0.0])


def pointing_from_angles(elevation: float, azimuth: float) -> np.ndarray:
    """Unit pointing vector from elevation/azimuth in the global frame."""
    ce = math.cos(elevation)
    return np.array([ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation)])


def _near_square_factors(n: int) -> tuple[int, int]:
    # Factor pair of n closest to square, rows <= cols.
    best = 1
    for r in range(1, math.isqrt(n) + 1):
        if n % r == 0:
            best = r
    return best, n // best


@dataclass(frozen=True)
class StationGeometry:
    """Immutable description of the rail, its arrays, and the element layout.

    ``min_separation_rad`` and ``array_width_m`` are stored redundantly and
    must satisfy beta = 2*atan(L/(2R)); use :meth:`create` to derive one
    from the other.
    """

    rail_radius_m: float
    array_count: int
    antennas_per_array: int
    array_width_m: float
    min_separation_rad: float
    array_azimuths_rad: tuple
    element_spacing_m: float
    upa_rows: int
    upa_cols: int

    def __post_init__(self):
        for name in ("rail_radius_m", "array_width_m", "min_separation_rad", "element_spacing_m"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.array_count < 1:
            raise ValueError("array_count must be at least 1")
        if self.upa_rows < 1 or self.upa_cols < 1 or self.upa_rows * self.upa_cols != self.antennas_per_array:
            raise ValueError(
                f"upa_rows*upa_cols = {self.upa_rows}*{self.upa_cols} does not match "
                f"antennas_per_array = {self.antennas_per_array}"
            )
        if len(self.array_azimuths_rad) != self.array_count:
            raise ValueError("array_azimuths_rad must hold one azimuth per array")
        for a in self.array_azimuths_rad:
            if not (-math.pi < a <= math.pi):
                raise ValueError(f"azimuth {a!r} outside (-pi, pi]; wrap before constructing")
        expected = 2.0 * math.atan(self.array_width_m / (2.0 * self.rail_radius_m))
        if abs(expected - self.min_separation_rad) > _BETA_CONSISTENCY_TOL:
            raise ValueError(
                "min_separation_rad is inconsistent with array_width_m and rail_radius_m "
                f"(stored {self.min_separation_rad!r}, derived {expected!r})"
            )
        validate_separation(self.array_azimuths_rad, self.min_separation_rad)

    @classmethod
    def create(cls, *, rail_radius_m, array_count, antennas_per_array, array_azimuths_rad,
               element_spacing_m, min_separation_rad=None, array_width_m=None,
               upa_rows=None, upa_cols=None) -> "StationGeometry":
        """Build a geometry, deriving the redundant width/separation field.

        Exactly one of ``min_separation_rad`` / ``array_width_m`` may be
        omitted; the UPA factorization defaults to the near-square factor
        pair of the antenna count (rows <= cols).
        """
        if min_separation_rad is None and array_width_m is None:
            raise ValueError("provide min_separation_rad or array_width_m")
        if min_separation_rad is None:
            min_separation_rad = 2.0 * math.atan(array_width_m / (2.0 * rail_radius_m))
        if array_width_m is None:
            array_width_m = 2.0 * rail_radius_m * math.tan(min_separation_rad / 2.0)
        if (upa_rows is None) != (upa_cols is None):
            raise ValueError("provide both upa_rows and upa_cols, or neither")
        if upa_rows is None:
            upa_rows, upa_cols = _near_square_factors(antennas_per_array)
        return cls(
            rail_radius_m=float(rail_radius_m),
            array_count=int(array_count),
            antennas_per_array=int(antennas_per_array),
            array_width_m=float(array_width_m),
            min_separation_rad=float(min_separation_rad),
            array_azimuths_rad=tuple(wrap_angle(a) for a in array_azimuths_rad),
            element_spacing_m=float(element_spacing_m),
            upa_rows=int(upa_rows),
            upa_cols=int(upa_cols),
        )

    def with_azimuth(self, b: int, phi: float) -> "StationGeometry":
        """Copy with array ``b`` moved to azimuth ``phi`` (revalidated)."""
        azimuths = list(self.array_azimuths_rad)
        azimuths[b] = wrap_angle(phi)
        return replace(self, array_azimuths_rad=tuple(azimuths))

    def with_azimuths(self, azimuths) -> "StationGeometry":
        return replace(self, array_azimuths_rad=tuple(wrap_angle(a) for a in azimuths))


def validate_separation(azimuths, beta: float) -> None:
    """Raise if any pair of azimuths violates the circular separation bound."""
    azimuths = list(azimuths)
    for i in range(len(azimuths)):
        for j in range(i + 1, len(azimuths)):
            if circular_distance(azimuths[i], azimuths[j]) < beta - _SEPARATION_SLACK:
                raise InfeasibleGeometryError(
                    f"arrays {i} and {j} are {circular_distance(azimuths[i], azimuths[j]):.6f} rad "
                    f"apart, below the minimum separation {beta:.6f} rad"
                )


def equally_spaced_azimuths(count: int) -> tuple:
    """Azimuths 2*pi*b/count - pi for b = 1..count, wrapped to (-pi, pi]."""
    return tuple(wrap_angle(TWO_PI * (b + 1) / count - math.pi) for b in range(count))


def random_feasible_azimuths(count: int, beta: float, rng, max_tries: int = 10_000) -> tuple:
    """Rejection-sample ``count`` mutually feasible azimuths."""
    if count * beta >= TWO_PI:
        raise InfeasibleGeometryError("separation bound leaves no room for that many arrays")
    for _ in range(max_tries):
        draw = np.sort(rng.uniform(-math.pi, math.pi, size=count))
        gaps = np.diff(draw, append=draw[0] + TWO_PI)
        if count == 1 or np.all(gaps >= beta):
            return tuple(wrap_angle(a) for a in draw)
    raise InfeasibleGeometryError(f"no feasible azimuth set found in {max_tries} tries")


def local_element_positions(geom: StationGeometry) -> np.ndarray:
    """Element positions in the array's local frame, shape (N, 3).

    The grid is centered on the local origin with rows along local x and
    columns along local y, row-major element order, zero z component.
    """
    rows, cols, d = geom.upa_rows, geom.upa_cols, geom.element_spacing_m
    x = (np.arange(rows) - (rows - 1) / 2.0) * d
    y = (np.arange(cols) - (cols - 1) / 2.0) * d
    xx, yy = np.meshgrid(x, y, indexing="ij")
    out = np.zeros((rows * cols, 3))
    out[:, 0] = xx.ravel()
    out[:, 1] = yy.ravel()
    return out


def global_element_positions(geom: StationGeometry, b: int) -> np.ndarray:
    """Element positions of array ``b`` in the global frame, shape (N, 3)."""
    if not 0 <= b < geom.array_count:
        raise IndexError(f"array index {b} out of range for {geom.array_count} arrays")
    phi = geom.array_azimuths_rad[b]
    center = geom.rail_radius_m * normal_vector(phi)
    return center + local_element_positions(geom) @ rotation_matrix(phi).T


class Arc(NamedTuple):
    """Closed arc on the circle: CCW from ``start`` over ``length`` radians."""

    start: float
    length: float


def arc_contains(arc: Arc, angle: float) -> bool:
    return (angle - arc.start) % TWO_PI <= arc.length


def feasible_arcs_for(azimuths, b: int, beta: float) -> list[Arc]:
    """Feasible arcs for array ``b`` given the other fixed azimuths.

    Returns the circle minus the open exclusion arcs of radius ``beta``
    around every other array, as a sorted list of disjoint closed arcs.
    Raises if the feasible set is empty.
    """
    others = sorted(a for j, a in enumerate(azimuths) if j != b)
    if not others:
        return [Arc(wrap_angle(math.pi), TWO_PI)]
    arcs = []
    for j, cur in enumerate(others):
        nxt = others[(j + 1) % len(others)]
        gap = (nxt - cur) % TWO_PI
        if gap == 0.0:
            gap = TWO_PI  # single neighbour wraps onto itself
        span = gap - 2.0 * beta
        if span >= 0.0:
            arcs.append(Arc(wrap_angle(cur + beta), span))
    if not arcs:
        raise InfeasibleGeometryError(f"no feasible rail position remains for array {b}")
    arcs.sort(key=lambda a: a.start)
    return arcs


def feasible_arcs(b: int, geom: StationGeometry) -> list[Arc]:
    return feasible_arcs_for(geom.array_azimuths_rad, b, geom.min_separation_rad)


def project_to_feasible(phi_tentative: float, arcs) -> float:
    """Nearest feasible azimuth to ``phi_tentative`` over the given arcs.

    Feasible inputs are returned unchanged (arc boundaries are feasible);
    equidistant ties go to the boundary with the smaller wrapped angle.
    """
    arcs = list(arcs)
    if not arcs:
        raise InfeasibleGeometryError("cannot project onto an empty feasible set")
    phi = wrap_angle(phi_tentative)
    for arc in arcs:
        if arc_contains(arc, phi):
            return phi
    candidates = []
    for arc in arcs:
        candidates.append(wrap_angle(arc.start))
        candidates.append(wrap_angle(arc.start + arc.length))
    return min(candidates, key=lambda c: (circular_distance(phi, c), c))


@dataclass(frozen=True)
class LocalPointing:
    """Unit pointing vector expressed in an array's local frame."""

    x: float
    y: float
    z: float
    elevation_rad: float
    azimuth_rad: float


def local_angles(phi_b: float, pointings) -> tuple[np.ndarray, np.ndarray]:
    """Elevation/azimuth of unit pointing vectors in the local frame of an
    array at azimuth ``phi_b``. ``pointings`` has shape (..., 3)."""
    f = np.asarray(pointings, dtype=float)
    local = f @ rotation_matrix(phi_b)  # rows are R(phi)^T f
    x = np.clip(local[..., 0], -1.0, 1.0)
    elevation = -np.arcsin(x)
    azimuth = np.arctan2(local[..., 1], local[..., 2])
    return elevation, azimuth


def local_pointing(phi_b: float, f) -> LocalPointing:
    """Transform a global unit pointing vector into an array's local frame.

    The local azimuth of the degenerate zenith/nadir direction (y = z = 0)
    is 0 by the arctan2(0, 0) convention.
    """
    f = np.asarray(f, dtype=float)
    norm = float(np.linalg.norm(f))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"pointing vector must be unit length, got norm {norm!r}")
    local = rotation_matrix(phi_b).T @ f
    x, y, z = (float(v) for v in local)
    elevation = -math.asin(max(-1.0, min(1.0, x)))
    azimuth = math.atan2(y, z)
    return LocalPointing(x=x, y=y, z=z, elevation_rad=elevation, azimuth_rad=azimuth)
