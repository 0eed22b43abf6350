"""Experiment execution: convergence runs, sparsity sweeps, time-varying
runs, and the codebook dump, with provenance-stamped CSV outputs and an
optional figure alongside each data file."""

from __future__ import annotations

import json
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import baselines, optimizer, scenarios
from .baselines import SchemeSetup, SchemeSpec
from .channel import SelectionState
from .config import ExperimentConfig
from .optimizer import SolverState, Workspace
from .radiation import codebook_table
from .seeding import child_rng, child_seed


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header, rows, *, seed: int, config_hash: str) -> None:
    """CSV with a provenance comment line, then the header, then the rows."""
    lines = [f"# seed={seed} config_sha256={config_hash}", ",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _echo_config(cfg: ExperimentConfig, out_dir: Path) -> None:
    path = out_dir / "config_resolved.json"
    path.write_text(json.dumps(cfg.resolved_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_manifest(cfg: ExperimentConfig, out_dir: Path, command: str, outputs) -> None:
    manifest = {
        "command": command,
        "seed": cfg.seed,
        "config_sha256": cfg.config_hash(),
        "outputs": sorted(str(p.name) for p in outputs),
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _prepare_out(out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def build_scheme_setup(cfg: ExperimentConfig, codebook, spec: SchemeSpec, sample_count: int,
                       initial_azimuths=None) -> SchemeSetup:
    geo = cfg.geometry
    return baselines.build_setup(
        spec,
        base_array_count=geo.array_count,
        base_antennas_per_array=geo.antennas_per_array,
        sample_count=sample_count,
        codebook=codebook,
        rail_radius_m=geo.rail_radius_m,
        min_separation_rad=geo.min_separation_rad,
        element_spacing_m=geo.resolved_spacing(cfg.physical.wavelength_m),
        optimizer_cfg=cfg.optimizer,
        upa_rows=geo.upa_rows,
        upa_cols=geo.upa_cols,
        initial_azimuths=initial_azimuths,
    )


def solve_scheme(cfg: ExperimentConfig, codebook, phys, samples, spec: SchemeSpec,
                 initial_azimuths=None) -> SolverState:
    setup = build_scheme_setup(cfg, codebook, spec, len(samples), initial_azimuths)
    ws = Workspace(phys, codebook, setup.geom, samples)
    state = optimizer.initial_state(setup.geom, setup.selection)
    return optimizer.solve(
        state, setup.optimizer, ws,
        optimize_positions=spec.optimize_positions,
        optimize_patterns=spec.optimize_patterns,
    )


# ---------------------------------------------------------------------------
# converge
# ---------------------------------------------------------------------------

def run_convergence(cfg: ExperimentConfig, out_dir, *, plot: bool = True, threads: int = 1,
                    dump_users: bool = False):
    """Optimize the configured scheme on a fresh static sample set and write
    the per-update objective trace; optionally persist the generated users
    for replay."""
    del threads  # single solve; kept for a uniform CLI surface
    out_dir = _prepare_out(out_dir)
    codebook = cfg.codebook.build()
    phys = cfg.physical.build()
    scenario = cfg.scenario.build_static()
    samples, user_rows, _ = scenarios.generate_static_records(
        scenario, cfg.scenario.sample_count, child_seed(cfg.seed, "samples")
    )
    state = solve_scheme(cfg, codebook, phys, samples, cfg.scheme())
    rows = [
        (row.cycle, row.block, row.index, row.iteration, row.objective)
        for row in state.trace
    ]
    trace_path = out_dir / "trace.csv"
    write_csv(trace_path, ("cycle", "block", "array_or_sample", "iteration", "objective_bps_hz"),
              rows, seed=cfg.seed, config_hash=cfg.config_hash())
    _echo_config(cfg, out_dir)
    outputs = [trace_path, out_dir / "config_resolved.json"]
    if dump_users:
        users_path = out_dir / "users.csv"
        write_csv(users_path, ("sample", "user", "region", "x", "y", "z", "d"), user_rows,
                  seed=cfg.seed, config_hash=cfg.config_hash())
        outputs.append(users_path)
    if plot:
        from . import report
        figure = out_dir / "trace.png"
        report.render_trace(rows, figure)
        outputs.append(figure)
    _write_manifest(cfg, out_dir, "converge", outputs)
    return {"final_objective_bps_hz": state.final_objective(), "trace_rows": len(rows),
            "trace_path": trace_path}


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def _sweep_point(cfg, codebook, phys, eta_index, eta, spec):
    scenario = cfg.scenario.build_static(sparsity=eta)
    samples = scenarios.generate_static_samples(
        scenario, cfg.scenario.sample_count, child_seed(cfg.seed, f"sweep.eta{eta_index}")
    )
    start = time.perf_counter()
    state = solve_scheme(cfg, codebook, phys, samples, spec)
    elapsed = time.perf_counter() - start
    return state.final_objective(), elapsed


def run_sparsity_sweep(cfg: ExperimentConfig, out_dir, *, plot: bool = True, threads: int = 1):
    """Optimize every configured scheme at every sparsity value; samples are
    regenerated per sparsity point from a derived seed shared by all
    schemes at that point."""
    out_dir = _prepare_out(out_dir)
    codebook = cfg.codebook.build()
    phys = cfg.physical.build()
    specs = cfg.sweep.scheme_specs()
    points = [
        (ei, eta, spec)
        for ei, eta in enumerate(cfg.sweep.sparsity_values)
        for spec in specs
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(
                lambda args: _sweep_point(cfg, codebook, phys, args[0], args[1], args[2]), points
            ))
    else:
        results = [_sweep_point(cfg, codebook, phys, ei, eta, spec) for ei, eta, spec in points]
    rows = [
        (spec.label, eta, final, elapsed)
        for (ei, eta, spec), (final, elapsed) in zip(points, results)
    ]
    sweep_path = out_dir / "sweep.csv"
    write_csv(sweep_path, ("scheme", "eta", "final_objective_bps_hz", "wall_time_s"),
              rows, seed=cfg.seed, config_hash=cfg.config_hash())
    _echo_config(cfg, out_dir)
    outputs = [sweep_path, out_dir / "config_resolved.json"]
    if plot:
        from . import report
        figure = out_dir / "sweep.png"
        report.render_sweep(rows, figure)
        outputs.append(figure)
    _write_manifest(cfg, out_dir, "sweep", outputs)
    return {"rows": rows, "sweep_path": sweep_path}


# ---------------------------------------------------------------------------
# timevary
# ---------------------------------------------------------------------------

@dataclass
class _SchemeTracker:
    setup: SchemeSetup
    azimuths: np.ndarray
    modes: np.ndarray  # (B, N) current warm-start selection
    window: deque  # trailing (sample, modes) pairs for position updates


def run_time_varying(cfg: ExperimentConfig, out_dir, *, plot: bool = True, threads: int = 1):
    """Step the drifting-hotspot scenario, re-running the pattern block every
    snapshot and the position block every long-timescale period; all schemes
    see the same user stream."""
    del threads
    out_dir = _prepare_out(out_dir)
    codebook = cfg.codebook.build()
    phys = cfg.physical.build()
    tv = cfg.timevary.build(cfg.scenario.shell())
    snapshot_count = cfg.timevary.snapshot_count
    period = tv.snapshots_per_position_update

    rng = child_rng(cfg.seed, "timevary")
    state = scenarios.init_time_varying(tv, rng)
    snapshots = []
    trajectory_rows = []
    sample, records, _ = state.emit()
    snapshots.append(sample)
    trajectory_rows.extend((0,) + rec for rec in records)
    for snap in range(1, snapshot_count):
        scenarios.step_time_varying(state, rng)
        sample, records, _ = state.emit()
        snapshots.append(sample)
        trajectory_rows.extend((snap,) + rec for rec in records)

    specs = cfg.sweep.scheme_specs()
    trackers = []
    for spec in specs:
        setup = build_scheme_setup(cfg, codebook, spec, sample_count=1)
        trackers.append(_SchemeTracker(
            setup=setup,
            azimuths=np.array(setup.geom.array_azimuths_rad, dtype=float),
            modes=setup.selection.modes[0].copy(),
            window=deque(maxlen=period),
        ))

    rate_rows = []
    position_rows = []
    for snap, sample in enumerate(snapshots):
        for spec, tracker in zip(specs, trackers):
            tracker.window.append((sample, tracker.modes.copy()))
            if spec.optimize_positions and snap % period == 0:
                _update_positions(phys, codebook, tracker)
            if spec.optimize_patterns:
                _update_patterns(phys, codebook, tracker, sample)
            rate = _snapshot_rate(phys, codebook, tracker, sample)
            rate_rows.append((spec.label, snap, rate))
            for b, azimuth in enumerate(tracker.azimuths):
                position_rows.append((spec.label, snap, b, float(azimuth)))

    config_hash = cfg.config_hash()
    rates_path = out_dir / "rates.csv"
    write_csv(rates_path, ("scheme", "snapshot", "sum_rate_bps_hz"), rate_rows,
              seed=cfg.seed, config_hash=config_hash)
    traj_path = out_dir / "trajectories.csv"
    write_csv(traj_path, ("snapshot", "user", "region", "x", "y", "z", "d"), trajectory_rows,
              seed=cfg.seed, config_hash=config_hash)
    pos_path = out_dir / "positions.csv"
    write_csv(pos_path, ("scheme", "snapshot", "array", "azimuth_rad"), position_rows,
              seed=cfg.seed, config_hash=config_hash)
    _echo_config(cfg, out_dir)
    outputs = [rates_path, traj_path, pos_path, out_dir / "config_resolved.json"]
    if plot:
        from . import report
        rates_fig = out_dir / "rates.png"
        report.render_timevary_rates(rate_rows, rates_fig)
        traj_fig = out_dir / "trajectories.png"
        report.render_trajectories(trajectory_rows, traj_fig)
        outputs.extend([rates_fig, traj_fig])
    _write_manifest(cfg, out_dir, "timevary", outputs)
    mean_rates = {}
    for spec in specs:
        values = [r[2] for r in rate_rows if r[0] == spec.label]
        mean_rates[spec.label] = float(np.mean(values))
    return {"mean_rates": mean_rates, "clip_count": state.clip_count, "rates_path": rates_path}


def _update_positions(phys, codebook, tracker: _SchemeTracker) -> None:
    """Long-timescale update: optimize azimuths over the trailing snapshot
    window, each snapshot paired with the selection it last used."""
    window_samples = [sample for sample, _ in tracker.window]
    window_modes = np.stack([modes for _, modes in tracker.window])
    geom = tracker.setup.geom.with_azimuths(tracker.azimuths)
    ws = Workspace(phys, codebook, geom, window_samples)
    state = SolverState(
        azimuths=tracker.azimuths,
        selection=SelectionState(window_modes, codebook.mode_count),
    )
    ws.bind(state)
    optimizer.position_block(ws, state, tracker.setup.optimizer)


def _update_patterns(phys, codebook, tracker: _SchemeTracker, sample) -> None:
    """Short-timescale update: greedy selection on the current snapshot,
    warm-started from the previous snapshot's selection."""
    geom = tracker.setup.geom.with_azimuths(tracker.azimuths)
    ws = Workspace(phys, codebook, geom, [sample])
    state = SolverState(
        azimuths=tracker.azimuths,
        selection=SelectionState(tracker.modes[None, :, :].copy(), codebook.mode_count),
    )
    ws.bind(state)
    optimizer.pattern_block(ws, state, tracker.setup.optimizer)
    tracker.modes = state.selection.modes[0]
    tracker.window[-1] = (tracker.window[-1][0], tracker.modes.copy())


def _snapshot_rate(phys, codebook, tracker: _SchemeTracker, sample) -> float:
    geom = tracker.setup.geom.with_azimuths(tracker.azimuths)
    ws = Workspace(phys, codebook, geom, [sample])
    state = SolverState(
        azimuths=tracker.azimuths,
        selection=SelectionState(tracker.modes[None, :, :].copy(), codebook.mode_count),
    )
    return optimizer.objective(ws, state)


# ---------------------------------------------------------------------------
# dump-codebook
# ---------------------------------------------------------------------------

def run_dump_codebook(cfg: ExperimentConfig, out_dir, *, plot: bool = True, threads: int = 1):
    """Write the calibrated mode table (p, theta_p_rad, phi_p_rad, delta_g_db)."""
    del threads
    out_dir = _prepare_out(out_dir)
    codebook = cfg.codebook.build()
    rows = codebook_table(codebook)
    table_path = out_dir / "codebook.csv"
    write_csv(table_path, ("p", "theta_p_rad", "phi_p_rad", "delta_g_db"), rows,
              seed=cfg.seed, config_hash=cfg.config_hash())
    _echo_config(cfg, out_dir)
    outputs = [table_path, out_dir / "config_resolved.json"]
    if plot:
        from . import report
        figure = out_dir / "codebook.png"
        report.render_codebook(codebook, figure)
        outputs.append(figure)
    _write_manifest(cfg, out_dir, "dump-codebook", outputs)
    return {"mode_count": codebook.mode_count, "table_path": table_path}
