"""Uplink line-of-sight channel assembly and the Monte-Carlo averaged
multi-user sum-rate objective."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse

from . import geometry
from .geometry import StationGeometry
from .radiation import PatternCodebook

SPEED_OF_LIGHT_M_S = 299_792_458.0


@dataclass(frozen=True)
class PhysicalConfig:
    """Carrier, powers, and the large-scale path-loss law."""

    wavelength_m: float
    tx_power_w: float
    noise_power_w: float
    pathloss_ref: float
    pathloss_exp: float

    def __post_init__(self):
        for name in ("wavelength_m", "tx_power_w", "noise_power_w", "pathloss_ref"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_carrier(cls, carrier_hz: float, *, tx_power_w: float, noise_power_w: float,
                     pathloss_ref: float | None = None, pathloss_exp: float = 2.0) -> "PhysicalConfig":
        """Free-space defaults: the path-loss reference is the 1 m gain
        (wavelength / 4 pi)^2 unless given explicitly."""
        if carrier_hz <= 0.0:
            raise ValueError("carrier_hz must be positive")
        wavelength = SPEED_OF_LIGHT_M_S / carrier_hz
        if pathloss_ref is None:
            pathloss_ref = (wavelength / (4.0 * math.pi)) ** 2
        return cls(
            wavelength_m=wavelength,
            tx_power_w=float(tx_power_w),
            noise_power_w=float(noise_power_w),
            pathloss_ref=float(pathloss_ref),
            pathloss_exp=float(pathloss_exp),
        )

    def power_gain(self, distance_m) -> np.ndarray:
        """Channel power gain pathloss_ref * d^(-pathloss_exp)."""
        return self.pathloss_ref * np.asarray(distance_m, dtype=float) ** (-self.pathloss_exp)


@dataclass(frozen=True)
class UserGeom:
    """One user's direction (unit pointing vector from the origin) and range."""

    pointing: tuple
    distance_m: float

    def __post_init__(self):
        if len(self.pointing) != 3:
            raise ValueError("pointing must be a 3-vector")
        norm = math.sqrt(sum(c * c for c in self.pointing))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"pointing must be unit length, got norm {norm!r}")
        if self.distance_m <= 0.0:
            raise ValueError("distance_m must be positive")

    def position(self) -> np.ndarray:
        return self.distance_m * np.asarray(self.pointing)


@dataclass(frozen=True)
class ChannelSample:
    """One Monte-Carlo user realization; empty samples are allowed."""

    users: tuple
    sample_index: int

    @property
    def user_count(self) -> int:
        return len(self.users)

    def pointing_matrix(self) -> np.ndarray:
        if not self.users:
            return np.zeros((0, 3))
        return np.array([u.pointing for u in self.users], dtype=float)

    def distances(self) -> np.ndarray:
        return np.array([u.distance_m for u in self.users], dtype=float)


class SelectionState:
    """Per-sample, per-array pattern choices.

    Stored as mode indices of shape (samples, arrays, antennas); the
    one-hot selection vector of the binary formulation is exposed through
    :meth:`z_vector` / :meth:`set_from_z`, and the structure guarantees
    each antenna selects exactly one mode.
    """

    __slots__ = ("modes", "mode_count")

    def __init__(self, modes, mode_count: int):
        modes = np.array(modes, dtype=np.int64)
        if modes.ndim != 3:
            raise ValueError("modes must have shape (samples, arrays, antennas)")
        if modes.size and (modes.min() < 0 or modes.max() >= mode_count):
            raise ValueError("mode index out of range")
        self.modes = modes
        self.mode_count = int(mode_count)

    @classmethod
    def default(cls, sample_count: int, array_count: int, antennas_per_array: int,
                mode_index: int, mode_count: int) -> "SelectionState":
        modes = np.full((sample_count, array_count, antennas_per_array), mode_index, dtype=np.int64)
        return cls(modes, mode_count)

    @property
    def sample_count(self) -> int:
        return self.modes.shape[0]

    def copy(self) -> "SelectionState":
        return SelectionState(self.modes.copy(), self.mode_count)

    def z_vector(self, s: int, b: int) -> np.ndarray:
        """Binary selection vector for array b in sample s: entry n*P + p is
        1 iff antenna n selects mode p (column-wise vectorization)."""
        n_antennas = self.modes.shape[2]
        z = np.zeros(n_antennas * self.mode_count)
        z[np.arange(n_antennas) * self.mode_count + self.modes[s, b]] = 1.0
        return z

    def set_from_z(self, s: int, b: int, z) -> None:
        self.modes[s, b] = decode_selection_vector(z, self.modes.shape[2], self.mode_count)


def decode_selection_vector(z, antennas: int, mode_count: int) -> np.ndarray:
    """Mode indices from a one-hot selection vector; rejects anything that
    is not exactly one-hot per antenna with binary entries."""
    z = np.asarray(z, dtype=float)
    if z.shape != (antennas * mode_count,):
        raise ValueError(f"selection vector must have length {antennas * mode_count}")
    if not np.all((z == 0.0) | (z == 1.0)):
        raise ValueError("selection vector entries must be 0 or 1")
    grid = z.reshape(antennas, mode_count)
    if not np.all(grid.sum(axis=1) == 1.0):
        raise ValueError("each antenna must select exactly one mode")
    return np.argmax(grid, axis=1)


def steering_vector(geom: StationGeometry, b: int, pointing, wavelength_m: float) -> np.ndarray:
    """Per-element unit-modulus phase response of array b toward a far-field
    direction: entry n is exp(-j 2 pi / wavelength * f . r_n)."""
    f = np.asarray(pointing, dtype=float)
    norm = float(np.linalg.norm(f))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"pointing must be unit length, got norm {norm!r}")
    positions = geometry.global_element_positions(geom, b)
    phase = (-2.0 * math.pi / wavelength_m) * (positions @ f)
    return np.exp(1j * phase)


def gain_matrix(codebook: PatternCodebook, geom: StationGeometry, b: int, pointing) -> scipy.sparse.csr_matrix:
    """Sparse amplitude-gain matrix of array b toward one user.

    Shape (N, N*P) with exactly N*P nonzeros: entry (n, n*P + p) is the
    square root of mode p's linear gain at the user's local angles, so that
    (gain_matrix @ z) picks each antenna's selected-mode amplitude.
    """
    phi_b = geom.array_azimuths_rad[b]
    theta, azim = geometry.local_angles(phi_b, np.asarray(pointing, dtype=float))
    amps = np.sqrt(10.0 ** (codebook.mode_gains_db(theta, azim) / 10.0))
    n = geom.antennas_per_array
    p = codebook.mode_count
    rows = np.repeat(np.arange(n), p)
    cols = np.arange(n * p)
    return scipy.sparse.csr_matrix((np.tile(amps, n), (rows, cols)), shape=(n, n * p))


def user_channel(codebook: PatternCodebook, geom: StationGeometry, phys: PhysicalConfig,
                 b: int, user: UserGeom, z_b) -> np.ndarray:
    """Uplink channel from one user to array b under a one-hot selection.

    Equals sqrt(power gain) * diag(steering) * gain_matrix @ z_b, computed
    through the selected-mode shortcut.
    """
    selected = decode_selection_vector(z_b, geom.antennas_per_array, codebook.mode_count)
    phi_b = geom.array_azimuths_rad[b]
    theta, azim = geometry.local_angles(phi_b, np.asarray(user.pointing, dtype=float))
    gains_db = codebook.mode_gains_db(theta, azim, modes=selected)
    a = steering_vector(geom, b, user.pointing, phys.wavelength_m)
    v = phys.power_gain(user.distance_m)
    return np.sqrt(v) * a * np.sqrt(10.0 ** (gains_db / 10.0))


def assemble_sample_channels(codebook: PatternCodebook, geom: StationGeometry,
                             phys: PhysicalConfig, sample: ChannelSample,
                             modes_per_array) -> np.ndarray:
    """Stacked channel matrix of one sample, shape (N*B, K): arrays stacked
    in index order, one column per user.

    ``modes_per_array`` holds the selected mode indices, shape (B, N).
    """
    modes_per_array = np.asarray(modes_per_array)
    n = geom.antennas_per_array
    k = sample.user_count
    h = np.zeros((n * geom.array_count, k), dtype=complex)
    if k == 0:
        return h
    pointings = sample.pointing_matrix()
    amp_users = np.sqrt(phys.power_gain(sample.distances()))
    for b in range(geom.array_count):
        phi_b = geom.array_azimuths_rad[b]
        theta, azim = geometry.local_angles(phi_b, pointings)
        gains_db = codebook.mode_gains_db(theta, azim, modes=modes_per_array[b])  # (N, K)
        positions = geometry.global_element_positions(geom, b)
        steer = np.exp(1j * (-2.0 * math.pi / phys.wavelength_m) * (positions @ pointings.T))
        h[b * n:(b + 1) * n] = amp_users[None, :] * steer * np.sqrt(10.0 ** (gains_db / 10.0))
    return h


def sum_rate(phys: PhysicalConfig, channels, user_powers_w=None) -> float:
    """Joint-decoding sum rate of one sample in bits/s/Hz.

    Reduces the NB x NB log-determinant to the K x K Gram form and factors
    it with a Cholesky decomposition; an empty sample rates 0.
    """
    h = np.asarray(channels, dtype=complex)
    if h.ndim != 2:
        raise ValueError("channels must be a matrix (antennas x users)")
    k = h.shape[1]
    if k == 0:
        return 0.0
    if not np.all(np.isfinite(h)):
        raise ValueError("channel matrix has non-finite entries")
    powers = np.full(k, phys.tx_power_w) if user_powers_w is None else np.asarray(user_powers_w, dtype=float)
    scaled = h * np.sqrt(powers / phys.noise_power_w)[None, :]
    gram = scaled.conj().T @ scaled
    factor = np.linalg.cholesky(np.eye(k) + gram)
    return float(2.0 * np.sum(np.log2(np.real(np.diagonal(factor)))))


def average_sum_rate(phys: PhysicalConfig, samples, geom: StationGeometry,
                     codebook: PatternCodebook, selection: SelectionState) -> float:
    """Mean sum rate over the Monte-Carlo samples, accumulated in sample
    index order for bit-reproducibility."""
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one channel sample")
    if selection.modes.shape[:2] != (len(samples), geom.array_count):
        raise ValueError(
            f"selection covers {selection.modes.shape[0]} samples x {selection.modes.shape[1]} arrays, "
            f"need {len(samples)} x {geom.array_count}"
        )
    total = 0.0
    for s, sample in enumerate(samples):
        h = assemble_sample_channels(codebook, geom, phys, sample, selection.modes[s])
        total += sum_rate(phys, h)
    return total / len(samples)
