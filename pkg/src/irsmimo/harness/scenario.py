"""Scenario construction from a :class:`ScenarioConfig`.

Geometry: the BS sits at the origin, users are dropped uniformly in a disk
and IRS unit ``i`` defaults to ``(35, 5 i)`` m.  Every node lies in the
z = 0 plane; the BS and user arrays are linear along y and the IRS units
are planar in the xoy-plane.

Channels are returned noise-normalised (divided by ``sqrt(sigma^2)``) so
the optimisers see O(1) numbers; the problems built here therefore carry a
unit noise power and SINRs are unchanged.
"""

import math

import numpy as np

from ..channel import (ArrayGeometry, PathSpec, PathKind, link_path_loss,
                       saleh_valenzuela, steering_vector)
from ..errors import ConfigError
from ..rng import complex_normal
from ..slot_opt import SlotProblem
from ..two_timescale import FrameConfig, StatisticalCsi

__all__ = [
    "bs_geometry", "irs_geometry", "irs_positions", "draw_users", "direction",
    "slot_problem", "rank_one_links", "statistical_csi", "frame_config",
    "path_gain",
]


def bs_geometry(cfg, n=None):
    """Linear BS array along y with half-wavelength spacing."""
    n = cfg.system.bs_antennas if n is None else n
    return ArrayGeometry.upa(1, n, cfg.system.wavelength)


def irs_geometry(cfg, n=None):
    """Planar IRS with ``N = N_x N_y`` elements, ``N_y`` the largest divisor <= sqrt(N)."""
    n = cfg.system.elements_per_unit if n is None else n
    ny = max(d for d in range(1, int(math.isqrt(n)) + 1) if n % d == 0)
    return ArrayGeometry.upa(n // ny, ny, cfg.system.wavelength)


def irs_positions(cfg, units=None):
    units = cfg.system.irs_units if units is None else units
    if cfg.geometry.irs_positions is not None:
        pos = [list(p) for p in cfg.geometry.irs_positions]
        if len(pos) < units:
            raise ConfigError(f"{units} IRS units but {len(pos)} positions configured")
        pos = pos[:units]
    else:
        pos = [[35.0, 5.0 * (i + 1)] for i in range(units)]
    return np.array([[x, y, 0.0] for x, y in pos])


def draw_users(cfg, rng, k=None):
    """Uniform user positions in the configured disk, shape ``(K, 3)``."""
    k = cfg.system.users if k is None else k
    r = cfg.geometry.user_radius * np.sqrt(rng.random(k))
    phi = 2.0 * np.pi * rng.random(k)
    cx, cy = cfg.geometry.user_center
    return np.stack([cx + r * np.cos(phi), cy + r * np.sin(phi), np.zeros(k)], axis=1)


def direction(src, dst):
    d = np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)
    return d / np.linalg.norm(d), float(np.linalg.norm(d))


def path_gain(cfg, alpha, distance):
    """Power gain ``c0 (d / d0)^-alpha``, clipping distances below ``d0``."""
    pl = cfg.pathloss
    c0 = 10.0 ** (pl.c0_db / 10.0)
    return link_path_loss(c0, alpha, max(distance, pl.d0), pl.d0)


def _rician_column(cfg, geom, e, gain, rng):
    kappa = cfg.fading.kappa
    los = steering_vector(geom, e)
    nlos = complex_normal(rng, geom.n_elements)
    return math.sqrt(gain) * (kappa * los + math.sqrt(1.0 - kappa ** 2) * nlos)


def _random_in_plane(rng):
    phi = rng.uniform(-np.pi, np.pi)
    return np.array([math.cos(phi), math.sin(phi), 0.0])


def _bs_irs_channel(cfg, bs, irs, irs_pos, rng, paths):
    """Sparse BS-IRS channel: the geometric LoS path plus scattered paths."""
    e, d = direction(np.zeros(3), irs_pos)
    gain = path_gain(cfg, cfg.pathloss.alpha_bs_irs, d)
    specs = [(PathSpec(e, 1.0, PathKind.LOS), PathSpec(e))]
    for _ in range(paths - 1):
        dep = _random_in_plane(rng)
        arr = _random_in_plane(rng)
        nu = complex_normal(rng, (), 0.1)
        specs.append((PathSpec(dep, complex(nu)), PathSpec(arr)))
    return math.sqrt(gain) * saleh_valenzuela(bs, irs, specs)


def slot_problem(cfg, rng, n_elements=None, units=None, direct=None, paths=None):
    """Noise-normalised multi-user MISO slot with distributed IRS units.

    Draw order (fixed for pairing across sweep points): user positions,
    the direct-link columns, then per unit the BS-IRS scatterers and the
    IRS-user columns.  Everything that does not depend on the IRS size is
    drawn first, so it is shared across sweep points.
    """
    units = cfg.system.irs_units if units is None else units
    direct = cfg.sumrate.direct_link if direct is None else direct
    paths = cfg.fading.bs_irs_paths if paths is None else paths
    scale = 1.0 / math.sqrt(cfg.noise)
    users = draw_users(cfg, rng)
    bs = bs_geometry(cfg)
    irs = irs_geometry(cfg, n_elements)
    h_d = None
    if direct:
        cols = []
        for u in users:
            e, d = direction(np.zeros(3), u)
            cols.append(_rician_column(cfg, bs, e, path_gain(cfg, cfg.pathloss.alpha_bs_user, d), rng))
        h_d = scale * np.stack(cols, axis=1)
    links = []
    for pos in irs_positions(cfg, units):
        g = _bs_irs_channel(cfg, bs, irs, pos, rng, paths)
        cols = []
        for u in users:
            e, d = direction(pos, u)
            cols.append(_rician_column(cfg, irs, e, path_gain(cfg, cfg.pathloss.alpha_irs_user, d), rng))
        links.append((scale * g, np.stack(cols, axis=1)))
    return SlotProblem(links, np.ones(cfg.system.users), 1.0, cfg.p_max, h_d)


def rank_one_links(cfg, rng, units):
    """Per-unit ``(G_i, H_i)`` with single-path (rank-one) BS-IRS channels.

    The angles of ``G_i`` are those of the BS-to-unit line of sight, so the
    units' positions set how well separated the rank-one components are.
    """
    return list(slot_problem(cfg, rng, units=units, direct=False, paths=1).links)


def statistical_csi(cfg, rng, rho, n_elements=None):
    """Frame statistics for one multi-antenna user and the first IRS unit.

    The user array has ``system.users`` antennas; gains are
    noise-normalised (the BS-IRS channel carries the normalisation of the
    reflected path).
    """
    scale2 = 1.0 / cfg.noise
    bs = bs_geometry(cfg)
    irs = irs_geometry(cfg, cfg.aasr.elements if n_elements is None else n_elements)
    mu = ArrayGeometry.upa(1, cfg.system.users, cfg.system.wavelength)
    user = draw_users(cfg, rng, 1)[0]
    pos = irs_positions(cfg, 1)[0]
    e_bi, d_bi = direction(np.zeros(3), pos)
    g = math.sqrt(path_gain(cfg, cfg.pathloss.alpha_bs_irs, d_bi) * scale2) * np.outer(
        steering_vector(bs, e_bi), steering_vector(irs, e_bi).conj())
    e_bu, d_bu = direction(np.zeros(3), user)
    hd_los = np.outer(steering_vector(bs, e_bu), steering_vector(mu, e_bu).conj())
    e_iu, d_iu = direction(pos, user)
    hr_los = np.outer(steering_vector(irs, e_iu), steering_vector(mu, e_iu).conj())
    return StatisticalCsi(
        g, hd_los, hr_los,
        l_bu=path_gain(cfg, cfg.pathloss.alpha_bs_user, d_bu) * scale2,
        l_ur=path_gain(cfg, cfg.pathloss.alpha_irs_user, d_iu),
        kappa=cfg.fading.kappa, rho=rho)


def frame_config(cfg):
    """Frame with ``T = I_iter`` slots and unit (normalised) noise."""
    return FrameConfig(slots=cfg.pso.iterations, delay=cfg.fading.delay_slots,
                       streams=cfg.system.streams, p_tot=cfg.p_max, noise=1.0)
