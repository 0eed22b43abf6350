"""Figure rendering for the CSV outputs. PNGs are written without software
metadata so re-runs stay byte-identical."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SAVE_KW = {"dpi": 120, "metadata": {"Software": None}}

_BLOCK_COLORS = {"init": "k", "position": "tab:blue", "pattern": "tab:orange"}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def render_trace(rows, path) -> None:
    """Objective vs update index, colored by block."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for block in ("init", "position", "pattern"):
        pts = [(r[3], r[4]) for r in rows if r[1] == block]
        if pts:
            x, y = zip(*pts)
            ax.plot(x, y, ".", ms=4, color=_BLOCK_COLORS[block], label=block)
    ax.plot([r[3] for r in rows], [r[4] for r in rows], "-", lw=0.7, color="0.6", zorder=0)
    ax.set_xlabel("update")
    ax.set_ylabel("average sum rate (bits/s/Hz)")
    ax.legend(loc="lower right")
    _save(fig, path)


def render_sweep(rows, path) -> None:
    """Final objective vs sparsity, one line per scheme."""
    fig, ax = plt.subplots(figsize=(6, 4))
    schemes = sorted({r[0] for r in rows})
    for scheme in schemes:
        pts = sorted((r[1], r[2]) for r in rows if r[0] == scheme)
        x, y = zip(*pts)
        ax.plot(x, y, "o-", label=scheme)
    ax.set_xlabel("sparsity ratio")
    ax.set_ylabel("average sum rate (bits/s/Hz)")
    ax.legend()
    _save(fig, path)


def render_timevary_rates(rows, path) -> None:
    """Per-snapshot sum rate, one line per scheme."""
    fig, ax = plt.subplots(figsize=(7, 4))
    schemes = sorted({r[0] for r in rows})
    for scheme in schemes:
        pts = sorted((r[1], r[2]) for r in rows if r[0] == scheme)
        x, y = zip(*pts)
        ax.plot(x, y, lw=1.0, label=scheme)
    ax.set_xlabel("snapshot")
    ax.set_ylabel("sum rate (bits/s/Hz)")
    ax.legend()
    _save(fig, path)


def render_trajectories(rows, path) -> None:
    """Top view of user positions over snapshots, colored by region."""
    fig, ax = plt.subplots(figsize=(5.5, 5))
    rows = list(rows)
    regions = sorted({r[2] for r in rows})
    cmap = plt.get_cmap("tab10")
    for region in regions:
        xs = [r[3] for r in rows if r[2] == region]
        ys = [r[4] for r in rows if r[2] == region]
        label = "regular" if region == 0 else f"hotspot {region}"
        ax.plot(xs, ys, ".", ms=2, color=cmap(region % 10), label=label)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_aspect("equal")
    ax.legend(markerscale=4, fontsize=8)
    _save(fig, path)


def render_codebook(codebook, path) -> None:
    """Power-correction terms over the steering grid."""
    grid = np.asarray(codebook.delta_g_db).reshape(codebook.p_v, codebook.p_h)
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(
        grid,
        origin="lower",
        aspect="auto",
        extent=(
            np.degrees(codebook.steer_azimuth_rad.min()),
            np.degrees(codebook.steer_azimuth_rad.max()),
            np.degrees(codebook.steer_elevation_rad.min()),
            np.degrees(codebook.steer_elevation_rad.max()),
        ),
    )
    fig.colorbar(im, ax=ax, label="power correction (dB)")
    ax.set_xlabel("steer azimuth (deg)")
    ax.set_ylabel("steer elevation (deg)")
    _save(fig, path)
