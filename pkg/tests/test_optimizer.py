import math
from dataclasses import replace

import numpy as np
import pytest

from railbeam import channel as C
from railbeam import geometry as G
from railbeam import optimizer as O
from railbeam import radiation as R

from helpers import direct_sum_rate, formula_channel

BETA = math.pi / 24.0


def make_geom(azimuths, antennas, spacing, **kw):
    return G.StationGeometry.create(
        rail_radius_m=1.0, array_count=len(azimuths), antennas_per_array=antennas,
        array_azimuths_rad=azimuths, element_spacing_m=spacing,
        min_separation_rad=BETA, **kw,
    )


def random_samples(rng, counts):
    out = []
    for i, k in enumerate(counts):
        users = []
        for _ in range(k):
            f = rng.normal(size=3)
            f /= np.linalg.norm(f)
            users.append(C.UserGeom(pointing=tuple(f), distance_m=float(rng.uniform(50, 120))))
        out.append(C.ChannelSample(users=tuple(users), sample_index=i))
    return out


def user_at(psi, elevation=0.0, distance=80.0):
    return C.UserGeom(pointing=tuple(G.pointing_from_angles(elevation, psi)), distance_m=distance)


def manual_codebook(steer_pairs, g_max=8.0):
    """Hand-built codebook bypassing the grid enumeration (for odd P)."""
    elev = np.array([t for t, _ in steer_pairs], dtype=float)
    azim = np.array([p for _, p in steer_pairs], dtype=float)
    return R.PatternCodebook(
        theta_max_rad=math.pi / 3, dtheta_rad=1.0, dphi_rad=1.0,
        p_v=1, p_h=len(steer_pairs), g_max_dbi=g_max,
        theta3db_rad=math.pi / 6, phi3db_rad=math.pi / 6,
        g_s_db=30.0, g_v_db=30.0,
        steer_elevation_rad=elev, steer_azimuth_rad=azim,
        delta_g_db=np.zeros(len(steer_pairs)),
        p_def=1.0, quadrature_step_rad=math.radians(1.0),
    )


def build_ws(phys, codebook, geom, samples, modes=None):
    ws = O.Workspace(phys, codebook, geom, samples)
    if modes is None:
        modes = np.full((len(samples), geom.array_count, geom.antennas_per_array),
                        codebook.default_mode_index, dtype=np.int64)
    state = O.SolverState(
        azimuths=np.array(geom.array_azimuths_rad, dtype=float),
        selection=C.SelectionState(modes, codebook.mode_count),
    )
    ws.bind(state)
    return ws, state


class TestObjective:
    def test_matches_formula_oracle_two_arrays(self, phys, tiny_codebook):
        # independent from-scratch reconstruction of the objective on a
        # 2-array, 2-antenna, single-sample instance
        rng = np.random.default_rng(1)
        geom = make_geom([0.5, -1.5], 2, phys.wavelength_m / 2, upa_rows=1, upa_cols=2)
        samples = random_samples(rng, [3])
        modes = rng.integers(0, tiny_codebook.mode_count, size=(1, 2, 2))
        ws, state = build_ws(phys, tiny_codebook, geom, samples, modes)
        got = O.objective(ws, state)
        users = [(u.pointing, u.distance_m) for u in samples[0].users]
        h = formula_channel(tiny_codebook, phys, 1.0, geom.array_azimuths_rad,
                            (1, 2), phys.wavelength_m / 2, modes[0], users)
        want = direct_sum_rate(phys, h)
        assert abs(got - want) <= 1e-9 * max(1.0, abs(want))

    def test_matches_reference_average(self, phys, tiny_codebook):
        rng = np.random.default_rng(2)
        geom = make_geom([0.2, 1.4, -2.2], 4, phys.wavelength_m / 2)
        samples = random_samples(rng, [5, 0, 8])
        modes = rng.integers(0, tiny_codebook.mode_count, size=(3, 3, 4))
        ws, state = build_ws(phys, tiny_codebook, geom, samples, modes)
        got = O.objective(ws, state)
        want = C.average_sum_rate(phys, samples, geom, tiny_codebook, state.selection)
        assert abs(got - want) <= 1e-12 * max(1.0, abs(want))

    def test_no_users_rates_zero(self, phys, tiny_codebook):
        geom = make_geom([0.0], 2, phys.wavelength_m / 2)
        samples = random_samples(np.random.default_rng(3), [0, 0])
        ws, state = build_ws(phys, tiny_codebook, geom, samples)
        assert O.objective(ws, state) == 0.0

    def test_infeasible_initialization_rejected(self, phys, tiny_codebook):
        geom = make_geom([0.0, 1.0], 2, phys.wavelength_m / 2)
        samples = random_samples(np.random.default_rng(4), [2])
        ws, state = build_ws(phys, tiny_codebook, geom, samples)
        state.azimuths[1] = BETA / 3
        with pytest.raises(G.InfeasibleGeometryError):
            ws.bind(state)


class TestWorkspaceIncrements:
    def test_trial_matches_rebuild(self, phys, tiny_codebook):
        rng = np.random.default_rng(5)
        geom = make_geom([0.3, -2.4], 3, phys.wavelength_m / 2)
        samples = random_samples(rng, [4, 6])
        ws, state = build_ws(phys, tiny_codebook, geom, samples)
        phi_new = 1.8
        trial = ws.trial_azimuth_rate(0, phi_new)
        geom2 = geom.with_azimuth(0, phi_new)
        want = C.average_sum_rate(phys, samples, geom2, tiny_codebook, state.selection)
        assert abs(trial - want) <= 1e-9 * max(1.0, abs(want))

    def test_commit_matches_rebind(self, phys, tiny_codebook):
        rng = np.random.default_rng(6)
        geom = make_geom([0.3, -2.4], 3, phys.wavelength_m / 2)
        samples = random_samples(rng, [4, 6])
        ws, state = build_ws(phys, tiny_codebook, geom, samples)
        ws.commit_azimuth(1, 0.9)
        after_commit = ws.mean_rate()
        ws2, state2 = build_ws(phys, tiny_codebook, geom.with_azimuth(1, 0.9), samples)
        assert abs(after_commit - ws2.mean_rate()) < 1e-12

    def test_set_antenna_mode_matches_rebind(self, phys, tiny_codebook):
        rng = np.random.default_rng(7)
        geom = make_geom([0.3], 4, phys.wavelength_m / 2)
        samples = random_samples(rng, [5])
        ws, state = build_ws(phys, tiny_codebook, geom, samples)
        amp = ws.mode_amp_table(0, 0)
        rates, rows = ws.candidate_rates(0, 0, 2, amp)
        ws.set_antenna_mode(0, 0, 2, 7, rows[7])
        modes = state.selection.modes.copy()
        assert modes[0, 0, 2] == 7
        ws2, _ = build_ws(phys, tiny_codebook, geom, samples, modes)
        assert abs(ws.sample_rate(0) - ws2.sample_rate(0)) < 1e-9
        assert abs(rates[7] - ws2.sample_rate(0)) < 1e-9


class TestGradient:
    def test_symmetric_users_zero_gradient(self, phys, tiny_codebook):
        # two users mirror-placed about the array normal
        geom = make_geom([0.0], 2, phys.wavelength_m / 2)
        users = (user_at(0.4), user_at(-0.4))
        sample = C.ChannelSample(users=users, sample_index=0)
        ws, state = build_ws(phys, tiny_codebook, geom, [sample])
        assert abs(O.grad_position(ws, 0, 1e-4)) < 1e-6

    def _smooth_instances(self, phys, codebook, count, rng):
        found = []
        while len(found) < count:
            geom = make_geom(list(G.random_feasible_azimuths(2, BETA, rng)), 2,
                             phys.wavelength_m / 2)
            samples = random_samples(rng, [int(rng.integers(2, 6))])
            ws, state = build_ws(phys, codebook, geom, samples)
            g1 = O.grad_position(ws, 0, 1e-4)
            g2 = O.grad_position(ws, 0, 5e-5)
            if abs(g1) > 1e-2 and abs(g2 - g1) / abs(g1) < 1e-3:
                found.append((ws, state, g1))
        return found

    def test_gradient_sign_predicts_ascent(self, phys, tiny_codebook):
        rng = np.random.default_rng(8)
        for ws, state, grad in self._smooth_instances(phys, tiny_codebook, 50, rng):
            phi = float(state.azimuths[0])
            base = ws.mean_rate()
            stepped = ws.trial_azimuth_rate(0, phi + 1e-6 * math.copysign(1.0, grad))
            assert stepped >= base - 1e-12

    def test_fd_refinement_stability(self, phys, tiny_codebook):
        rng = np.random.default_rng(9)
        for ws, state, grad in self._smooth_instances(phys, tiny_codebook, 10, rng):
            g_half = O.grad_position(ws, 0, 0.5e-4)
            assert abs(g_half - grad) / abs(grad) < 1e-3


class TestPositionInnerLoop:
    def test_zero_gradient_fixed_point(self, phys, tiny_codebook):
        geom = make_geom([0.7], 2, phys.wavelength_m / 2)
        samples = random_samples(np.random.default_rng(10), [0])
        ws, state = build_ws(phys, tiny_codebook, geom, samples)
        history = []
        O.position_inner_loop(ws, state, 0, O.OptimizerConfig(), history)
        assert state.azimuths[0] == 0.7
        assert len(history) == 2  # entry point plus the single converged iterate

    def test_objective_never_decreases(self, phys, tiny_codebook):
        rng = np.random.default_rng(11)
        for trial in range(5):
            geom = make_geom(list(G.random_feasible_azimuths(3, BETA, rng)), 2,
                             phys.wavelength_m / 2)
            samples = random_samples(rng, [4, 3])
            ws, state = build_ws(phys, tiny_codebook, geom, samples)
            history = []
            O.position_inner_loop(ws, state, 1, O.OptimizerConfig(), history)
            values = [c for _, c in history]
            assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_result_feasible(self, phys, tiny_codebook):
        rng = np.random.default_rng(12)
        geom = make_geom(list(G.random_feasible_azimuths(4, BETA, rng)), 2,
                         phys.wavelength_m / 2)
        samples = random_samples(rng, [6])
        ws, state = build_ws(phys, tiny_codebook, geom, samples)
        O.position_inner_loop(ws, state, 2, O.OptimizerConfig())
        G.validate_separation(state.azimuths, BETA)

    def test_single_user_alignment(self, phys, tiny_codebook):
        # PS disabled (default boresight mode): azimuth converges to the user
        cfg = O.OptimizerConfig(eps_threshold=1e-7, max_inner_position=100)
        for psi in (0.9, -1.7, 2.4):
            geom = make_geom([psi + 0.3], 4, phys.wavelength_m / 2)
            sample = C.ChannelSample(users=(user_at(psi),), sample_index=0)
            ws, state = build_ws(phys, tiny_codebook, geom, [sample])
            for _ in range(3):
                O.position_inner_loop(ws, state, 0, cfg)
            assert G.circular_distance(state.azimuths[0], psi) < math.radians(1.0)


class TestPositionBlock:
    def test_single_array_equals_repeated_inner(self, phys, tiny_codebook):
        rng = np.random.default_rng(13)
        geom = make_geom([1.2], 2, phys.wavelength_m / 2)
        samples = random_samples(rng, [5])
        cfg = O.OptimizerConfig(max_outer_position=3)
        ws1, state1 = build_ws(phys, tiny_codebook, geom, samples)
        O.position_block(ws1, state1, cfg)
        ws2, state2 = build_ws(phys, tiny_codebook, geom, samples)
        for _ in range(3):
            O.position_inner_loop(ws2, state2, 0, cfg)
        assert state1.azimuths[0] == state2.azimuths[0]
        assert len(state1.trace) == 3

    def test_trace_rows_per_sweep(self, phys, tiny_codebook):
        rng = np.random.default_rng(14)
        geom = make_geom(list(G.random_feasible_azimuths(3, BETA, rng)), 2,
                         phys.wavelength_m / 2)
        samples = random_samples(rng, [4])
        ws, state = build_ws(phys, tiny_codebook, geom, samples)
        cfg = O.OptimizerConfig(max_outer_position=2)
        O.position_block(ws, state, cfg)
        assert len(state.trace) == 2 * 3
        assert all(r.block == "position" for r in state.trace)
        G.validate_separation(state.azimuths, BETA)


class TestGreedySelect:
    def test_single_mode_codebook(self, phys):
        cb = manual_codebook([(0.0, 0.0)])
        geom = make_geom([0.0], 1, phys.wavelength_m / 2)
        samples = random_samples(np.random.default_rng(15), [3])
        ws, state = build_ws(phys, cb, geom, samples)
        assert O.greedy_antenna_select(ws, state, 0, 0, 0) == 0

    def test_boresight_user_picks_least_attenuated_mode(self, phys, tiny_codebook):
        geom = make_geom([0.0], 1, phys.wavelength_m / 2)
        sample = C.ChannelSample(users=(user_at(0.0),), sample_index=0)
        modes = np.array([[[0]]])
        ws, state = build_ws(phys, tiny_codebook, geom, [sample], modes)
        p = O.greedy_antenna_select(ws, state, 0, 0, 0)
        gains = tiny_codebook.mode_gains_db(np.array([0.0]), np.array([0.0]))[:, 0]
        assert gains[p] == gains.max()

    def test_matches_exhaustive_search(self, phys):
        # 9-mode grid codebook, single antenna: greedy equals brute force
        cb = R.build_codebook(
            theta_max_rad=math.pi / 6, dtheta_rad=math.pi / 6, dphi_rad=math.pi / 2,
            g_max_dbi=8.0, theta3db_rad=math.pi / 6, phi3db_rad=math.pi / 6,
            g_s_db=30.0, g_v_db=30.0, quadrature_step_rad=math.radians(1.0),
        )
        assert cb.mode_count == 9
        rng = np.random.default_rng(16)
        geom = make_geom([0.0], 1, phys.wavelength_m / 2)
        for _ in range(20):
            samples = random_samples(rng, [int(rng.integers(1, 4))])
            ws, state = build_ws(phys, cb, geom, samples)
            got = O.greedy_antenna_select(ws, state, 0, 0, 0)
            best_rate, best_p = -1.0, None
            for p in range(cb.mode_count):
                sel = C.SelectionState(np.array([[[p]]]), cb.mode_count)
                rate = C.average_sum_rate(phys, samples, geom, cb, sel)
                if rate > best_rate + 1e-12:
                    best_rate, best_p = rate, p
            assert got == best_p

    def test_empty_sample_keeps_incumbent(self, phys, tiny_codebook):
        geom = make_geom([0.0], 2, phys.wavelength_m / 2)
        samples = random_samples(np.random.default_rng(17), [0])
        modes = np.array([[[4, 9]]])
        ws, state = build_ws(phys, tiny_codebook, geom, samples, modes)
        assert O.greedy_antenna_select(ws, state, 0, 0, 0) == 4
        assert O.greedy_antenna_select(ws, state, 0, 0, 1) == 9


class TestPatternBlock:
    def test_sample_rates_non_decreasing(self, phys, tiny_codebook):
        rng = np.random.default_rng(18)
        geom = make_geom([0.4, -1.9], 2, phys.wavelength_m / 2)
        samples = random_samples(rng, [5, 3])
        ws, state = build_ws(phys, tiny_codebook, geom, samples)
        before = [ws.sample_rate(s) for s in range(2)]
        O.pattern_block(ws, state, O.OptimizerConfig())
        after = [ws.sample_rate(s) for s in range(2)]
        assert all(b >= a - 1e-9 for a, b in zip(before, after))
        values = [r.objective for r in state.trace]
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))

    def test_empty_sample_selection_unchanged(self, phys, tiny_codebook):
        geom = make_geom([0.4], 2, phys.wavelength_m / 2)
        samples = random_samples(np.random.default_rng(19), [0])
        modes = np.array([[[3, 11]]])
        ws, state = build_ws(phys, tiny_codebook, geom, samples, modes.copy())
        O.pattern_block(ws, state, O.OptimizerConfig())
        assert np.array_equal(state.selection.modes, modes)

    def test_reaches_one_swap_local_optimality(self, phys):
        # 5-mode hand-built codebook, two antennas: after convergence no
        # single-antenna change improves the sample rate
        cb = manual_codebook([(0.0, -1.2), (0.0, -0.6), (0.0, 0.0), (0.0, 0.6), (0.0, 1.2)])
        rng = np.random.default_rng(20)
        geom = make_geom([0.0], 2, phys.wavelength_m / 2)
        cfg = O.OptimizerConfig(max_pattern_sweeps=10, eps_threshold=1e-15)
        for _ in range(10):
            samples = random_samples(rng, [int(rng.integers(1, 5))])
            ws, state = build_ws(phys, cb, geom, samples)
            O.pattern_block(ws, state, cfg)
            final = ws.sample_rate(0)
            for n in range(2):
                for p in range(cb.mode_count):
                    alt = state.selection.modes.copy()
                    alt[0, 0, n] = p
                    sel = C.SelectionState(alt, cb.mode_count)
                    rate = C.average_sum_rate(phys, samples, geom, cb, sel)
                    assert rate <= final + 1e-9

    def test_trace_rows_emitted_for_full_budget(self, phys, tiny_codebook):
        rng = np.random.default_rng(21)
        geom = make_geom([0.4, -1.9], 2, phys.wavelength_m / 2)
        samples = random_samples(rng, [4])
        ws, state = build_ws(phys, tiny_codebook, geom, samples)
        cfg = O.OptimizerConfig(max_pattern_sweeps=4)
        O.pattern_block(ws, state, cfg)
        assert len(state.trace) == 4 * 2  # sweeps x arrays, even after convergence


class TestSolve:
    def _solve(self, phys, codebook, seed=22, **kw):
        rng = np.random.default_rng(seed)
        geom = make_geom(list(G.equally_spaced_azimuths(3)), 2, phys.wavelength_m / 2)
        samples = random_samples(rng, [5, 7, 3])
        ws, state = build_ws(phys, codebook, geom, samples)
        out = O.solve(state, O.OptimizerConfig(**kw), ws)
        return out

    def test_trace_monotone_within_slack(self, phys, tiny_codebook):
        out = self._solve(phys, tiny_codebook)
        values = [r.objective for r in out.trace]
        assert all(b >= a - 5e-4 for a, b in zip(values, values[1:]))

    def test_final_exceeds_initial(self, phys, tiny_codebook):
        out = self._solve(phys, tiny_codebook)
        assert out.trace[-1].objective > out.trace[0].objective

    def test_bit_identical_reruns(self, phys, tiny_codebook):
        a = self._solve(phys, tiny_codebook)
        b = self._solve(phys, tiny_codebook)
        assert len(a.trace) == len(b.trace)
        for ra, rb in zip(a.trace, b.trace):
            assert (ra.cycle, ra.block, ra.index, ra.objective) == (rb.cycle, rb.block, rb.index, rb.objective)
        assert np.array_equal(a.selection.modes, b.selection.modes)
        assert np.array_equal(a.azimuths, b.azimuths)

    def test_block_structure_per_cycle(self, phys, tiny_codebook):
        out = self._solve(phys, tiny_codebook)
        for cycle in range(1, out.cycle_index + 1):
            rows = [r for r in out.trace if r.cycle == cycle]
            kinds = [r.block for r in rows]
            n_pos = kinds.count("position")
            n_pat = kinds.count("pattern")
            assert n_pos == 3 * 3 and n_pat == 3 * 3
            assert kinds == ["position"] * n_pos + ["pattern"] * n_pat

    def test_feasible_and_one_hot_throughout(self, phys, tiny_codebook):
        out = self._solve(phys, tiny_codebook)
        G.validate_separation(out.azimuths, BETA)
        assert out.selection.modes.min() >= 0
        assert out.selection.modes.max() < tiny_codebook.mode_count

    def test_disabled_blocks_keep_state(self, phys, tiny_codebook):
        rng = np.random.default_rng(23)
        geom = make_geom(list(G.equally_spaced_azimuths(3)), 2, phys.wavelength_m / 2)
        samples = random_samples(rng, [5])
        ws, state = build_ws(phys, tiny_codebook, geom, samples)
        az0 = state.azimuths.copy()
        modes0 = state.selection.modes.copy()
        out = O.solve(state, O.OptimizerConfig(), ws,
                      optimize_positions=False, optimize_patterns=False)
        assert np.array_equal(out.azimuths, az0)
        assert np.array_equal(out.selection.modes, modes0)
        assert len(out.trace) == 1  # init row only


class TestOptimizerConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            O.OptimizerConfig(eps_threshold=0.0)
        with pytest.raises(ValueError):
            O.OptimizerConfig(max_cycles=0)
        with pytest.raises(ValueError):
            O.OptimizerConfig(backtrack_factor=1.5)
        with pytest.raises(ValueError):
            O.OptimizerConfig(armijo_coeff=0.0)
