"""Independent oracles used across the test suite.

These deliberately re-derive results from the raw formulas (dense
determinants, explicit per-element loops, grid scans) instead of calling
the production fast paths they check.
"""

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def direct_sum_rate(phys, channels, user_powers_w=None) -> float:
    """Dense log2 det(I_NB + (1/noise) * sum_k p_k h_k h_k^H)."""
    h = np.asarray(channels, dtype=complex)
    nb, k = h.shape
    if k == 0:
        return 0.0
    powers = np.full(k, phys.tx_power_w) if user_powers_w is None else np.asarray(user_powers_w)
    acc = np.eye(nb, dtype=complex)
    for i in range(k):
        acc += (powers[i] / phys.noise_power_w) * np.outer(h[:, i], h[:, i].conj())
    sign, logdet = np.linalg.slogdet(acc)
    assert sign.real > 0
    return float(logdet / math.log(2.0))


def formula_channel(codebook, phys, rail_radius, azimuths, upa, spacing, mode_indices, users):
    """Channel matrix built from scratch: explicit rotation entries, scalar
    per-element phase and gain evaluation, no shared production code.

    ``users`` is a list of (pointing 3-tuple, distance); ``mode_indices``
    has shape (B, N). Returns the stacked (N*B, K) matrix.
    """
    rows_n, cols_n = upa
    n_ant = rows_n * cols_n
    b_cnt = len(azimuths)
    k_cnt = len(users)
    out = np.zeros((n_ant * b_cnt, k_cnt), dtype=complex)
    for b, phi in enumerate(azimuths):
        rot = np.array([
            [0.0, -math.sin(phi), math.cos(phi)],
            [0.0, math.cos(phi), math.sin(phi)],
            [-1.0, 0.0, 0.0],
        ])
        center = rail_radius * np.array([math.cos(phi), math.sin(phi), 0.0])
        for k, (pointing, dist) in enumerate(users):
            f = np.asarray(pointing, dtype=float)
            local = rot.T @ f
            theta = -math.asin(max(-1.0, min(1.0, local[0])))
            azim = math.atan2(local[1], local[2])
            v = phys.pathloss_ref * dist ** (-phys.pathloss_exp)
            for r in range(rows_n):
                for c in range(cols_n):
                    n = r * cols_n + c
                    local_pos = np.array([
                        (r - (rows_n - 1) / 2.0) * spacing,
                        (c - (cols_n - 1) / 2.0) * spacing,
                        0.0,
                    ])
                    pos = center + rot @ local_pos
                    phase = -TWO_PI / phys.wavelength_m * float(f @ pos)
                    p = int(mode_indices[b][n])
                    ah = -min(12.0 * ((azim - codebook.steer_azimuth_rad[p]) / codebook.phi3db_rad) ** 2,
                              codebook.g_s_db)
                    av = -min(12.0 * ((theta - codebook.steer_elevation_rad[p]) / codebook.theta3db_rad) ** 2,
                              codebook.g_v_db)
                    gain_db = (codebook.g_max_dbi + codebook.delta_g_db[p]
                               - min(-(ah + av), codebook.g_s_db))
                    out[b * n_ant + n, k] = (
                        math.sqrt(v) * math.sqrt(10.0 ** (gain_db / 10.0))
                        * complex(math.cos(phase), math.sin(phase))
                    )
    return out


def wrap(angle):
    w = np.mod(angle, TWO_PI)
    return np.where(w > math.pi, w - TWO_PI, w)


def circ_dist(a, b):
    # both inputs in (-pi, pi]: the literal two-branch circular distance
    d = np.abs(np.subtract(a, b))
    return np.minimum(d, TWO_PI - d)


_PROJECTION_GRID = None
_PROJECTION_BUFS = None


def projection_grid(step=1e-5):
    global _PROJECTION_GRID, _PROJECTION_BUFS
    if _PROJECTION_GRID is None or abs(_PROJECTION_GRID[1] - _PROJECTION_GRID[0] - step) > 1e-12:
        _PROJECTION_GRID = np.arange(-math.pi + step, math.pi + step / 2, step)
        _PROJECTION_BUFS = (
            _PROJECTION_GRID.astype(np.float32),
            np.empty_like(_PROJECTION_GRID, dtype=np.float32),
            np.empty_like(_PROJECTION_GRID, dtype=np.float32),
        )
    return _PROJECTION_GRID


def _circ_dist_grid(angle, out, tmp):
    # in-place two-branch circular distance against the float32 grid copy
    grid32 = _PROJECTION_BUFS[0]
    np.subtract(grid32, np.float32(angle), out=out)
    np.abs(out, out=out)
    np.subtract(np.float32(TWO_PI), out, out=tmp)
    np.minimum(out, tmp, out=out)
    return out


def brute_force_project(phi, neighbors, beta, step=1e-5):
    """Nearest feasible grid angle by exhaustive scan of a uniform grid.

    Distances run in float32 (2e-7 rounding, far below the grid step).
    """
    grid = projection_grid(step)
    _, buf, tmp = _PROJECTION_BUFS
    feasible = np.ones(grid.shape, dtype=bool)
    for a in neighbors:
        feasible &= _circ_dist_grid(wrap(a), buf, tmp) >= np.float32(beta)
    assert feasible.any(), "brute-force grid found no feasible angle"
    dist = _circ_dist_grid(wrap(phi), buf, tmp)
    dist[~feasible] = np.inf
    return float(grid[int(np.argmin(dist))])


def grid_feasibility_mask(grid, neighbors, beta):
    mask = np.ones(grid.shape, dtype=bool)
    for a in neighbors:
        mask &= circ_dist(grid, wrap(a)) >= beta
    return mask
