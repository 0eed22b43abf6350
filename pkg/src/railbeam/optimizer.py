"""Two-timescale block-coordinate solver: projected gradient ascent over
rail azimuths on the long timescale, greedy per-sample mode selection on
the short one.

The :class:`Workspace` caches per-array channel blocks and per-sample Gram
matrices so single-azimuth trials and single-antenna mode swaps stay cheap;
it mirrors the live :class:`SolverState` after :meth:`Workspace.bind`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .channel import PhysicalConfig, SelectionState
from .geometry import StationGeometry, feasible_arcs_for, project_to_feasible, wrap_angle
from .radiation import PatternCodebook

# Backtracking floor: below this step scale the incumbent point is kept.
_ETA_FLOOR = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    """Iteration budgets and line-search constants for the solver."""

    eps_threshold: float = 5e-4
    max_inner_position: int = 50
    max_outer_position: int = 3
    max_pattern_sweeps: int = 3
    max_cycles: int = 2
    eta_init: float = 0.1
    backtrack_factor: float = 0.5
    armijo_coeff: float = 1e-4
    fd_step: float = 1e-4

    def __post_init__(self):
        for name in ("max_inner_position", "max_outer_position", "max_pattern_sweeps", "max_cycles"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.eps_threshold <= 0.0:
            raise ValueError("eps_threshold must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if not 0.0 < self.armijo_coeff < 1.0:
            raise ValueError("armijo_coeff must lie in (0, 1)")
        if self.eta_init <= 0.0 or self.fd_step <= 0.0:
            raise ValueError("eta_init and fd_step must be positive")


@dataclass
class TraceRow:
    cycle: int
    block: str  # "init", "position", or "pattern"
    index: int  # array index for block rows
    iteration: int
    objective: float


@dataclass
class SolverState:
    """Mutable solver state: azimuths, selections, and the objective trace."""

    azimuths: np.ndarray
    selection: SelectionState
    trace: list = field(default_factory=list)
    cycle_index: int = 0

    def final_objective(self) -> float:
        if not self.trace:
            raise ValueError("no trace recorded yet")
        return self.trace[-1].objective


def initial_state(geom: StationGeometry, selection: SelectionState) -> SolverState:
    return SolverState(azimuths=np.array(geom.array_azimuths_rad, dtype=float), selection=selection)


class Workspace:
    """Incremental evaluator of the Monte-Carlo averaged sum rate.

    Channel rows fold the per-user weight sqrt(p * v / sigma^2) so a
    sample's rate is log2 det(I + H^H H) of its weighted channel block.
    """

    def __init__(self, phys: PhysicalConfig, codebook: PatternCodebook,
                 geom: StationGeometry, samples):
        self.phys = phys
        self.codebook = codebook
        self.geom = geom
        self.samples = list(samples)
        if not self.samples:
            raise ValueError("need at least one channel sample")
        self.sample_count = len(self.samples)
        self.array_count = geom.array_count
        self.antennas = geom.antennas_per_array
        self._wavenumber = -2.0 * math.pi / phys.wavelength_m
        self._local_pos = geometry.local_element_positions(geom)
        self.pointings = [s.pointing_matrix() for s in self.samples]
        self.user_counts = [s.user_count for s in self.samples]
        self.weights = [
            np.sqrt(phys.tx_power_w * phys.power_gain(s.distances()) / phys.noise_power_w)
            for s in self.samples
        ]
        self.azimuths = np.array(geom.array_azimuths_rad, dtype=float)
        self._modes = None
        self._steer = [[None] * self.array_count for _ in range(self.sample_count)]
        self._blocks = [[None] * self.array_count for _ in range(self.sample_count)]
        self._contribs = [[None] * self.array_count for _ in range(self.sample_count)]
        self._grams = [None] * self.sample_count

    # -- state synchronisation -------------------------------------------

    def bind(self, state: SolverState) -> None:
        """Mirror a solver state; azimuths and selection are shared by
        reference so commits through the workspace update the state too."""
        expected = (self.sample_count, self.array_count, self.antennas)
        if state.selection.modes.shape != expected:
            raise ValueError(f"selection shape {state.selection.modes.shape} != {expected}")
        if len(state.azimuths) != self.array_count:
            raise ValueError("azimuth vector length mismatch")
        geometry.validate_separation(state.azimuths, self.geom.min_separation_rad)
        self.azimuths = state.azimuths
        self._modes = state.selection.modes
        for s in range(self.sample_count):
            for b in range(self.array_count):
                self._rebuild_array(s, b)
            self._refresh_gram(s)

    def _array_parts(self, s: int, b: int, phi: float, modes_b):
        """(steering, weighted rows) of array b in sample s at azimuth phi."""
        k = self.user_counts[s]
        if k == 0:
            empty = np.zeros((self.antennas, 0), dtype=complex)
            return empty, empty
        pointings = self.pointings[s]
        rot = geometry.rotation_matrix(phi)
        positions = self.geom.rail_radius_m * geometry.normal_vector(phi) + self._local_pos @ rot.T
        steer = np.exp(1j * self._wavenumber * (positions @ pointings.T))
        local = pointings @ rot
        theta = -np.arcsin(np.clip(local[:, 0], -1.0, 1.0))
        azim = np.arctan2(local[:, 1], local[:, 2])
        gains_db = self.codebook.mode_gains_db(theta, azim, modes=np.asarray(modes_b))
        amp = self.weights[s][None, :] * np.sqrt(10.0 ** (gains_db / 10.0))
        return steer, steer * amp

    def _rebuild_array(self, s: int, b: int) -> None:
        steer, block = self._array_parts(s, b, self.azimuths[b], self._modes[s, b])
        self._steer[s][b] = steer
        self._blocks[s][b] = block
        self._contribs[s][b] = block.conj().T @ block

    def _refresh_gram(self, s: int) -> None:
        k = self.user_counts[s]
        gram = np.zeros((k, k), dtype=complex)
        for b in range(self.array_count):
            gram = gram + self._contribs[s][b]
        self._grams[s] = gram

    # -- objective evaluation --------------------------------------------

    @staticmethod
    def _rate_from_gram(gram) -> float:
        k = gram.shape[0]
        if k == 0:
            return 0.0
        factor = np.linalg.cholesky(np.eye(k) + gram)
        return float(2.0 * np.sum(np.log2(np.real(np.diagonal(factor)))))

    def sample_rate(self, s: int) -> float:
        return self._rate_from_gram(self._grams[s])

    def mean_rate(self) -> float:
        total = 0.0
        for s in range(self.sample_count):
            total += self.sample_rate(s)
        return total / self.sample_count

    # -- long-timescale path ---------------------------------------------

    def trial_azimuth_rate(self, b: int, phi: float) -> float:
        """Mean rate with array b moved to phi; nothing is committed and the
        probe may be infeasible (finite-difference usage)."""
        total = 0.0
        for s in range(self.sample_count):
            if self.user_counts[s] == 0:
                continue
            _, block = self._array_parts(s, b, phi, self._modes[s, b])
            gram = self._grams[s] - self._contribs[s][b] + block.conj().T @ block
            total += self._rate_from_gram(gram)
        return total / self.sample_count

    def commit_azimuth(self, b: int, phi: float) -> None:
        self.azimuths[b] = phi
        for s in range(self.sample_count):
            self._rebuild_array(s, b)
            self._refresh_gram(s)

    # -- short-timescale path --------------------------------------------

    def mode_amp_table(self, s: int, b: int) -> np.ndarray:
        """(P, K) weighted amplitudes of every mode toward sample s's users."""
        pointings = self.pointings[s]
        rot = geometry.rotation_matrix(self.azimuths[b])
        local = pointings @ rot
        theta = -np.arcsin(np.clip(local[:, 0], -1.0, 1.0))
        azim = np.arctan2(local[:, 1], local[:, 2])
        gains_db = self.codebook.mode_gains_db(theta, azim)
        return self.weights[s][None, :] * np.sqrt(10.0 ** (gains_db / 10.0))

    def candidate_rates(self, s: int, b: int, n: int, amp_table):
        """Sample-s rates for every candidate mode of antenna (b, n).

        Returns (rates, rows): the rate per mode and the weighted channel
        row each mode would install, evaluated with all other rows fixed.
        """
        old_row = self._blocks[s][b][n]
        gram_minus = self._grams[s] - np.conj(old_row)[:, None] * old_row[None, :]
        rows = self._steer[s][b][n][None, :] * amp_table
        outers = np.conj(rows)[:, :, None] * rows[:, None, :]
        k = gram_minus.shape[0]
        factors = np.linalg.cholesky(np.eye(k)[None, :, :] + gram_minus[None, :, :] + outers)
        diag = np.einsum("pkk->pk", factors).real
        rates = 2.0 * np.sum(np.log2(diag), axis=1)
        return rates, rows

    def set_antenna_mode(self, s: int, b: int, n: int, p: int, row) -> None:
        self._modes[s, b, n] = p
        self._blocks[s][b][n] = row
        block = self._blocks[s][b]
        self._contribs[s][b] = block.conj().T @ block
        self._refresh_gram(s)


def objective(ws: Workspace, state: SolverState) -> float:
    """Monte-Carlo averaged sum rate of a solver state (rebinds the cache)."""
    ws.bind(state)
    return ws.mean_rate()


def grad_position(ws: Workspace, b: int, fd_step: float) -> float:
    """Central finite difference of the objective in array b's azimuth."""
    phi = float(ws.azimuths[b])
    c_plus = ws.trial_azimuth_rate(b, phi + fd_step)
    c_minus = ws.trial_azimuth_rate(b, phi - fd_step)
    return (c_plus - c_minus) / (2.0 * fd_step)


def position_inner_loop(ws: Workspace, state: SolverState, b: int, cfg: OptimizerConfig,
                        history: list | None = None) -> float:
    """Projected gradient ascent on array b's azimuth with Armijo
    backtracking.

    Never commits an infeasible or objective-decreasing point; when the
    backtracking step underflows the incumbent is kept. Returns the final
    azimuth; ``history`` (if given) collects (azimuth, objective) per
    accepted iterate.
    """
    arcs = feasible_arcs_for(state.azimuths, b, ws.geom.min_separation_rad)
    phi_prev = float(state.azimuths[b])
    c_prev = ws.mean_rate()
    if history is not None:
        history.append((phi_prev, c_prev))
    t = 1
    while t < cfg.max_inner_position:
        grad = grad_position(ws, b, cfg.fd_step)
        eta = cfg.eta_init
        phi_t = project_to_feasible(phi_prev + eta * grad, arcs)
        c_t = c_prev if phi_t == phi_prev else ws.trial_azimuth_rate(b, phi_t)
        while c_t - c_prev < cfg.armijo_coeff * eta * grad * wrap_angle(phi_t - phi_prev):
            eta *= cfg.backtrack_factor
            if eta < _ETA_FLOOR:
                phi_t, c_t = phi_prev, c_prev
                break
            phi_t = project_to_feasible(phi_prev + eta * grad, arcs)
            c_t = c_prev if phi_t == phi_prev else ws.trial_azimuth_rate(b, phi_t)
        if c_t < c_prev:
            # projection can point the accepted step against the gradient
            phi_t, c_t = phi_prev, c_prev
        if phi_t != phi_prev:
            ws.commit_azimuth(b, phi_t)
        delta = abs(c_t - c_prev)
        phi_prev, c_prev = phi_t, c_t
        if history is not None:
            history.append((phi_prev, c_prev))
        t += 1
        if delta <= cfg.eps_threshold:
            break
    return phi_prev


def _append_trace(state: SolverState, cycle: int, block: str, index: int, value: float) -> None:
    state.trace.append(TraceRow(cycle, block, index, len(state.trace), value))


def position_block(ws: Workspace, state: SolverState, cfg: OptimizerConfig, cycle: int = 1) -> None:
    """Full position sweeps over all arrays, one trace row per array visit."""
    for _ in range(cfg.max_outer_position):
        for b in range(ws.array_count):
            position_inner_loop(ws, state, b, cfg)
            _append_trace(state, cycle, "position", b, ws.mean_rate())


def greedy_antenna_select(ws: Workspace, state: SolverState, s: int, b: int, n: int,
                          amp_table=None) -> int:
    """Best mode for antenna (b, n) in sample s with everything else fixed.

    The incumbent mode is kept when it ties the best rate; other ties go to
    the smallest mode index. Updates the state in place.
    """
    cur = int(state.selection.modes[s, b, n])
    if ws.user_counts[s] == 0:
        return cur
    amp = ws.mode_amp_table(s, b) if amp_table is None else amp_table
    rates, rows = ws.candidate_rates(s, b, n, amp)
    best = float(rates.max())
    if rates[cur] == best:
        return cur
    p_star = int(np.argmax(rates))
    ws.set_antenna_mode(s, b, n, p_star, rows[p_star])
    return p_star


def pattern_block(ws: Workspace, state: SolverState, cfg: OptimizerConfig, cycle: int = 1) -> None:
    """Greedy per-sample mode sweeps at fixed azimuths.

    Samples whose sweep improvement drops below the threshold stop
    computing, but a trace row is still emitted for every (sweep, array)
    pair so the trace length is budget-determined.
    """
    active = [ws.user_counts[s] > 0 for s in range(ws.sample_count)]
    prev_rates = [ws.sample_rate(s) for s in range(ws.sample_count)]
    for _ in range(cfg.max_pattern_sweeps):
        for b in range(ws.array_count):
            for s in range(ws.sample_count):
                if not active[s]:
                    continue
                amp = ws.mode_amp_table(s, b)
                for n in range(ws.antennas):
                    greedy_antenna_select(ws, state, s, b, n, amp)
            _append_trace(state, cycle, "pattern", b, ws.mean_rate())
        for s in range(ws.sample_count):
            if not active[s]:
                continue
            new_rate = ws.sample_rate(s)
            rel = abs(new_rate - prev_rates[s]) / max(abs(prev_rates[s]), 1e-12)
            prev_rates[s] = new_rate
            if rel <= cfg.eps_threshold:
                active[s] = False


def solve(state: SolverState, cfg: OptimizerConfig, ws: Workspace,
          optimize_positions: bool = True, optimize_patterns: bool = True) -> SolverState:
    """Alternate position and pattern blocks until the cycle budget or the
    relative-improvement threshold is reached.

    The trace records the initial objective and one row per per-array
    update, reproducing the convergence-curve structure.
    """
    ws.bind(state)
    current = ws.mean_rate()
    state.trace.append(TraceRow(0, "init", 0, 0, current))
    cycle = 0
    while True:
        cycle += 1
        before = current
        if optimize_positions:
            position_block(ws, state, cfg, cycle)
        if optimize_patterns:
            pattern_block(ws, state, cfg, cycle)
        current = ws.mean_rate()
        state.cycle_index = cycle
        rel = abs(current - before) / max(abs(before), 1e-12)
        if cycle >= cfg.max_cycles or rel <= cfg.eps_threshold:
            break
    return state
