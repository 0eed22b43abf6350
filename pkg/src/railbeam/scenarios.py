"""Seeded user-distribution models: the static hotspot point process and
the time-varying drifting-hotspot process with survive/arrive population
dynamics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSample, UserGeom
from .seeding import child_rng


class RegionSamplingError(RuntimeError):
    """Rejection sampling failed; the region setup is likely misconfigured."""


@dataclass(frozen=True)
class Cuboid:
    center: tuple
    size: tuple

    def __post_init__(self):
        if any(s <= 0 for s in self.size):
            raise ValueError("cuboid size must be positive")


@dataclass(frozen=True)
class HorizontalDisk:
    center: tuple  # disk lies at z = center[2]
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("disk radius must be positive")


@dataclass(frozen=True)
class Segment:
    start: tuple
    end: tuple


@dataclass(frozen=True)
class Sphere:
    center: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")


@dataclass(frozen=True)
class Shell:
    r_min: float
    r_max: float

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max:
            raise ValueError("shell needs 0 < r_min < r_max")


def region_contains(region, points) -> np.ndarray:
    """Membership mask for an array of points, shape (n, 3).

    Zero-volume regions (disk, segment) never contain a point for the
    purpose of volume-exclusion sampling.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if isinstance(region, Cuboid):
        lo = np.asarray(region.center) - 0.5 * np.asarray(region.size)
        hi = np.asarray(region.center) + 0.5 * np.asarray(region.size)
        return np.all((pts >= lo) & (pts <= hi), axis=1)
    if isinstance(region, Sphere):
        return np.linalg.norm(pts - np.asarray(region.center), axis=1) <= region.radius
    if isinstance(region, Shell):
        r = np.linalg.norm(pts, axis=1)
        return (r >= region.r_min) & (r <= region.r_max)
    if isinstance(region, (HorizontalDisk, Segment)):
        return np.zeros(len(pts), dtype=bool)
    raise TypeError(f"unsupported region type {type(region).__name__}")


def _unit_directions(n: int, rng) -> np.ndarray:
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _draw_batch(region, n: int, rng) -> np.ndarray:
    if isinstance(region, Cuboid):
        offset = (rng.random((n, 3)) - 0.5) * np.asarray(region.size)
        return np.asarray(region.center) + offset
    if isinstance(region, HorizontalDisk):
        r = region.radius * np.sqrt(rng.random(n))
        ang = rng.uniform(0.0, 2.0 * math.pi, n)
        out = np.tile(np.asarray(region.center, dtype=float), (n, 1))
        out[:, 0] += r * np.cos(ang)
        out[:, 1] += r * np.sin(ang)
        return out
    if isinstance(region, Segment):
        u = rng.random((n, 1))
        a = np.asarray(region.start, dtype=float)
        b = np.asarray(region.end, dtype=float)
        return a + u * (b - a)
    if isinstance(region, Sphere):
        r = region.radius * rng.random(n) ** (1.0 / 3.0)
        return np.asarray(region.center) + r[:, None] * _unit_directions(n, rng)
    if isinstance(region, Shell):
        u = rng.random(n)
        r = (region.r_min ** 3 + u * (region.r_max ** 3 - region.r_min ** 3)) ** (1.0 / 3.0)
        return r[:, None] * _unit_directions(n, rng)
    raise TypeError(f"unsupported region type {type(region).__name__}")


def sample_region_many(region, n: int, rng, exclude=(), max_attempts: int = 1000) -> np.ndarray:
    """``n`` points uniform over the region's measure, rejecting any that
    fall inside an excluded (volume) region."""
    if n == 0:
        return np.zeros((0, 3))
    points = _draw_batch(region, n, rng)
    if not exclude:
        return points
    for _ in range(max_attempts):
        bad = np.zeros(n, dtype=bool)
        for ex in exclude:
            bad |= region_contains(ex, points)
        if not bad.any():
            return points
        points[bad] = _draw_batch(region, int(bad.sum()), rng)
    raise RegionSamplingError(
        f"rejection sampling did not converge after {max_attempts} rounds; "
        "excluded regions may cover the sampling region"
    )


def sample_region_uniform(region, rng, exclude=(), max_attempts: int = 1000) -> np.ndarray:
    """One point uniform over the region's measure (volume, area, or length)."""
    return sample_region_many(region, 1, rng, exclude=exclude, max_attempts=max_attempts)[0]


def sample_poisson(mean: float, rng) -> int:
    if mean < 0:
        raise ValueError("Poisson mean must be non-negative")
    return int(rng.poisson(mean))


def clip_to_shell(position, shell: Shell):
    """Radially clamp a position to the nearest shell boundary.

    Returns (position, radius, clipped flag). Directions are preserved.
    """
    pos = np.asarray(position, dtype=float)
    r = float(np.linalg.norm(pos))
    if r == 0.0:
        raise ValueError("cannot clamp a position at the origin")
    if r < shell.r_min:
        return pos * (shell.r_min / r), shell.r_min, True
    if r > shell.r_max:
        return pos * (shell.r_max / r), shell.r_max, True
    return pos, r, False


def _positions_to_sample(tagged_positions, shell: Shell, sample_index: int):
    """Emit a ChannelSample from (region, position) pairs, clamping to the
    coverage shell. Returns (sample, records, clip count); records are
    (user, region, x, y, z, d) with post-clamp coordinates."""
    users = []
    records = []
    clipped = 0
    for u, (region_idx, pos) in enumerate(tagged_positions):
        cpos, r, was_clipped = clip_to_shell(pos, shell)
        clipped += int(was_clipped)
        pointing = tuple(cpos / r)
        users.append(UserGeom(pointing=pointing, distance_m=r))
        records.append((u, region_idx, cpos[0], cpos[1], cpos[2], r))
    return ChannelSample(users=tuple(users), sample_index=sample_index), records, clipped


# ---------------------------------------------------------------------------
# Static hotspot model
# ---------------------------------------------------------------------------

def default_static_hotspots() -> tuple:
    """The three reference hotspots: a building cuboid, a ground disk, and
    an airway segment."""
    return (
        Cuboid(center=(-50.0, -20.0, -30.0), size=(30.0, 30.0, 40.0)),
        HorizontalDisk(center=(80.0, 30.0, -50.0), radius=20.0),
        Segment(start=(10.0, 30.0, 40.0), end=(30.0, 30.0, 70.0)),
    )


@dataclass(frozen=True)
class StaticScenario:
    """Poisson user counts per region, uniform placement within regions.

    The sparsity ratio is the share of the mean user count that falls in
    the regular (non-hotspot) region; hotspots split the rest evenly.
    """

    coverage: Shell
    hotspots: tuple
    mean_total: float
    sparsity: float

    def __post_init__(self):
        if self.mean_total < 0:
            raise ValueError("mean_total must be non-negative")
        if not 0.0 <= self.sparsity <= 1.0:
            raise ValueError("sparsity must lie in [0, 1]")
        if not self.hotspots:
            raise ValueError("need at least one hotspot region")

    def region_means(self) -> tuple:
        """(mu_0, mu_1, ..., mu_H): regular mean then per-hotspot means."""
        mu_regular = self.sparsity * self.mean_total
        mu_hot = (1.0 - self.sparsity) * self.mean_total / len(self.hotspots)
        return (mu_regular,) + (mu_hot,) * len(self.hotspots)


def draw_static_positions(scenario: StaticScenario, sample_index: int, seed: int):
    """(region index, position) pairs of one sample; independent child RNG
    streams per sample and per region keep parallel generation reproducible."""
    counts_rng = child_rng(seed, f"static.s{sample_index}.counts")
    means = scenario.region_means()
    counts = [sample_poisson(mu, counts_rng) for mu in means]
    tagged = []
    for i, count in enumerate(counts):
        rng = child_rng(seed, f"static.s{sample_index}.r{i}")
        if i == 0:
            pts = sample_region_many(scenario.coverage, count, rng, exclude=scenario.hotspots)
        else:
            pts = sample_region_many(scenario.hotspots[i - 1], count, rng)
        tagged.extend((i, pts[j]) for j in range(count))
    return tagged


def generate_static_samples(scenario: StaticScenario, count: int, seed: int) -> list:
    """``count`` independent channel samples, fully determined by the seed."""
    if count < 1:
        raise ValueError("count must be at least 1")
    return [
        _positions_to_sample(draw_static_positions(scenario, s, seed), scenario.coverage, s)[0]
        for s in range(count)
    ]


def generate_static_records(scenario: StaticScenario, count: int, seed: int):
    """Samples plus persistable user records (sample, user, region, x, y, z, d)
    and the total shell-clamp count."""
    samples = []
    rows = []
    clipped = 0
    for s in range(count):
        sample, records, n_clip = _positions_to_sample(
            draw_static_positions(scenario, s, seed), scenario.coverage, s
        )
        samples.append(sample)
        rows.extend((s,) + rec for rec in records)
        clipped += n_clip
    return samples, rows, clipped


# ---------------------------------------------------------------------------
# Time-varying model
# ---------------------------------------------------------------------------

def default_timevarying_centers() -> tuple:
    return ((50.0, -30.0, -40.0), (-50.0, -10.0, 50.0), (-10.0, 60.0, 20.0))


@dataclass(frozen=True)
class TimeVaryingScenario:
    """Drifting spherical hotspots with survive/arrive population dynamics.

    Hotspot centers follow a mean-reverting first-order Gauss-Markov drift;
    users leave each region independently and are replaced by Poisson
    arrivals so the stationary mean count per region is preserved.
    Surviving hotspot users carry a correlated offset process; the regular
    region keeps only count correlation, with positions redrawn uniformly.
    """

    coverage: Shell
    mean_centers: tuple
    hotspot_radius_m: float
    center_persistence: float
    center_noise_std: float
    survival_probs: tuple  # index 0 is the regular region
    offset_persistence: float
    offset_noise_std: float
    mean_total: float
    sparsity: float
    snapshot_interval_s: float
    position_update_period_s: float

    def __post_init__(self):
        if self.hotspot_radius_m <= 0:
            raise ValueError("hotspot_radius_m must be positive")
        for name in ("center_persistence", "offset_persistence"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")
        if len(self.survival_probs) != len(self.mean_centers) + 1:
            raise ValueError("need one survival probability per region (regular first)")
        for rho in self.survival_probs:
            if not 0.0 < rho <= 1.0:
                raise ValueError("survival probabilities must lie in (0, 1]")
        if not 0.0 <= self.sparsity <= 1.0:
            raise ValueError("sparsity must lie in [0, 1]")
        if self.snapshot_interval_s <= 0 or self.position_update_period_s <= 0:
            raise ValueError("timescale periods must be positive")
        ratio = self.position_update_period_s / self.snapshot_interval_s
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("position_update_period_s must be an integer multiple of snapshot_interval_s")

    @property
    def hotspot_count(self) -> int:
        return len(self.mean_centers)

    @property
    def snapshots_per_position_update(self) -> int:
        return int(round(self.position_update_period_s / self.snapshot_interval_s))

    def region_means(self) -> tuple:
        mu_regular = self.sparsity * self.mean_total
        mu_hot = (1.0 - self.sparsity) * self.mean_total / self.hotspot_count
        return (mu_regular,) + (mu_hot,) * self.hotspot_count

    def hotspot_spheres(self, centers) -> tuple:
        return tuple(Sphere(center=tuple(c), radius=self.hotspot_radius_m) for c in centers)


@dataclass
class TimeVaryingState:
    """Mutable snapshot state: hotspot centers, per-region user sets, and
    per-user offsets. Positions are stored unclamped; clamping to the
    coverage shell happens at emission and is counted."""

    scenario: TimeVaryingScenario
    snapshot_index: int
    centers: np.ndarray
    region_ids: list
    region_positions: list
    region_offsets: list
    next_user_id: int
    clip_count: int = 0

    def populations(self) -> list:
        return [len(ids) for ids in self.region_ids]

    def emit(self):
        """(ChannelSample, records, clipped) for the current snapshot; pure.

        Records are (user_id, region, x, y, z, d) with post-clamp
        coordinates; ``clipped`` counts shell clamps in this snapshot.
        """
        users = []
        records = []
        clipped = 0
        for region_idx in range(len(self.region_ids)):
            ids = self.region_ids[region_idx]
            positions = self.region_positions[region_idx]
            for j in range(len(ids)):
                cpos, r, was_clipped = clip_to_shell(positions[j], self.scenario.coverage)
                clipped += int(was_clipped)
                users.append(UserGeom(pointing=tuple(cpos / r), distance_m=r))
                records.append((int(ids[j]), region_idx, cpos[0], cpos[1], cpos[2], r))
        sample = ChannelSample(users=tuple(users), sample_index=self.snapshot_index)
        return sample, records, clipped

    def current_sample(self) -> ChannelSample:
        return self.emit()[0]


def init_time_varying(scenario: TimeVaryingScenario, rng) -> TimeVaryingState:
    """Snapshot-0 state: centers at their long-term means, Poisson counts,
    uniform placement per region."""
    centers = np.array(scenario.mean_centers, dtype=float)
    means = scenario.region_means()
    region_ids, region_positions, region_offsets = [], [], []
    next_id = 0
    spheres = scenario.hotspot_spheres(centers)
    for i, mu in enumerate(means):
        count = sample_poisson(mu, rng)
        if i == 0:
            pts = sample_region_many(scenario.coverage, count, rng, exclude=spheres)
            region_offsets.append(None)
        else:
            pts = sample_region_many(spheres[i - 1], count, rng)
            region_offsets.append(pts - centers[i - 1])
        region_ids.append(np.arange(next_id, next_id + count))
        region_positions.append(pts)
        next_id += count
    state = TimeVaryingState(
        scenario=scenario,
        snapshot_index=0,
        centers=centers,
        region_ids=region_ids,
        region_positions=region_positions,
        region_offsets=region_offsets,
        next_user_id=next_id,
    )
    state.clip_count = state.emit()[2]
    return state


def step_time_varying(state: TimeVaryingState, rng) -> ChannelSample:
    """Advance one snapshot: drift centers, thin survivors, draw arrivals,
    move surviving hotspot users by the correlated offset process, redraw
    the regular region uniformly. Returns the emitted sample."""
    scn = state.scenario
    # Hotspot centers: mean-reverting Gauss-Markov drift.
    mean_centers = np.array(scn.mean_centers, dtype=float)
    for i in range(scn.hotspot_count):
        noise = rng.normal(0.0, scn.center_noise_std, 3)
        state.centers[i] = (
            mean_centers[i]
            + scn.center_persistence * (state.centers[i] - mean_centers[i])
            + noise
        )
    spheres = scn.hotspot_spheres(state.centers)
    means = scn.region_means()
    for i, rho in enumerate(scn.survival_probs):
        ids = state.region_ids[i]
        keep = rng.random(len(ids)) < rho
        arrivals = int(rng.poisson((1.0 - rho) * means[i]))
        new_ids = np.arange(state.next_user_id, state.next_user_id + arrivals)
        state.next_user_id += arrivals
        if i == 0:
            # Regular region: survive/arrive counts only; all positions redrawn.
            total = int(keep.sum()) + arrivals
            pts = sample_region_many(scn.coverage, total, rng, exclude=spheres)
            state.region_ids[0] = np.concatenate([ids[keep], new_ids])
            state.region_positions[0] = pts
        else:
            center = state.centers[i - 1]
            old_offsets = state.region_offsets[i][keep]
            noise = rng.normal(0.0, scn.offset_noise_std, (len(old_offsets), 3))
            surv_offsets = scn.offset_persistence * old_offsets + noise
            new_pts = sample_region_many(spheres[i - 1], arrivals, rng)
            new_offsets = new_pts - center
            state.region_ids[i] = np.concatenate([ids[keep], new_ids])
            state.region_offsets[i] = np.concatenate([surv_offsets, new_offsets], axis=0)
            state.region_positions[i] = center + state.region_offsets[i]
    state.snapshot_index += 1
    sample, _, clipped = state.emit()
    state.clip_count += clipped
    return sample
