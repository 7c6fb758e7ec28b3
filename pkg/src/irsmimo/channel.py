"""Array geometry, steering vectors, path loss and channel models.

Phase convention: the response of an element at offset ``b`` to a plane
wave travelling along the unit vector ``e`` is ``exp(-j 2 pi b.e / lambda)``.
Planar arrays are flattened with the x index running fastest.
"""

from dataclasses import dataclass, replace
import enum
import math

import numpy as np

from .errors import InputDomainError
from .rng import complex_normal

__all__ = [
    "ArrayGeometry", "PathKind", "PathSpec", "PathLossParams", "RicianProcess",
    "ChannelEnsemble", "unit_direction", "ula_direction", "steering_vector",
    "saleh_valenzuela", "rank_one_bs_irs", "product_path_loss", "link_path_loss",
    "bessel_j0", "jakes_correlation", "ar_step", "sample_channel",
    "numerical_rank",
]

_UNIT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Element positions of a uniform linear or planar array.

    Parameters
    ----------
    element_offsets : ndarray, shape (N, 3)
        Offset of each element from the reference point in metres, ordered
        with the x index fastest.
    wavelength : float
        Carrier wavelength in metres.
    shape : tuple of int
        ``(N_x, N_y)``; ``N_y == 1`` is a linear array.
    """

    element_offsets: np.ndarray
    wavelength: float
    shape: tuple

    def __post_init__(self):
        offsets = np.asarray(self.element_offsets, dtype=float)
        object.__setattr__(self, "element_offsets", offsets)
        nx, ny = self.shape
        if nx < 1 or ny < 1:
            raise InputDomainError("array needs at least one element")
        if offsets.shape != (nx * ny, 3):
            raise InputDomainError(
                f"offsets shape {offsets.shape} does not match {nx}x{ny} array")
        if not self.wavelength > 0:
            raise InputDomainError("wavelength must be positive")

    @property
    def n_elements(self):
        return self.shape[0] * self.shape[1]

    @classmethod
    def ula(cls, n, wavelength, spacing=None):
        """Linear array along the x axis, ``spacing`` defaults to lambda/2."""
        return cls.upa(n, 1, wavelength, spacing)

    @classmethod
    def upa(cls, nx, ny, wavelength, spacing=None):
        """Rectangular array on the xoy-plane with the first element at the origin."""
        if spacing is None:
            spacing = wavelength / 2.0
        ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="xy")
        offsets = np.zeros((nx * ny, 3))
        offsets[:, 0] = spacing * ix.ravel()
        offsets[:, 1] = spacing * iy.ravel()
        return cls(offsets, wavelength, (nx, ny))


def unit_direction(elevation, azimuth):
    """Unit vector with polar angle ``elevation`` from +z and ``azimuth`` from +x."""
    se = math.sin(elevation)
    return np.array([se * math.cos(azimuth), se * math.sin(azimuth), math.cos(elevation)])


def ula_direction(angle):
    """Direction in the xoy-plane at ``angle`` from the broadside (+y) of an x-axis ULA."""
    return np.array([math.sin(angle), math.cos(angle), 0.0])


def steering_vector(geom, direction):
    """Array response of ``geom`` to a plane wave along ``direction``."""
    e = np.asarray(direction, dtype=float)
    if e.shape != (3,) or abs(np.linalg.norm(e) - 1.0) > _UNIT_TOL:
        raise InputDomainError("direction must be a unit 3-vector")
    phase = 2.0 * np.pi * (geom.element_offsets @ e) / geom.wavelength
    return np.exp(-1j * phase)


class PathKind(enum.Enum):
    LOS = "los"
    NLOS = "nlos"


@dataclass(frozen=True, eq=False)
class PathSpec:
    """One propagation path seen from one end of a link."""

    direction: np.ndarray
    gain: complex = 1.0
    kind: PathKind = PathKind.NLOS

    def __post_init__(self):
        e = np.asarray(self.direction, dtype=float)
        if e.shape != (3,) or abs(np.linalg.norm(e) - 1.0) > 1e-12:
            raise InputDomainError("path direction must be a unit 3-vector")
        object.__setattr__(self, "direction", e)


def saleh_valenzuela(bs_geom, irs_geom, paths):
    """Sparse BS-IRS channel ``sum_l nu_l a_B(e_l) a_I(e_l)^H``.

    ``paths`` is a sequence of ``(departure, arrival)`` PathSpec pairs; the
    complex gain of a path is the product of the two ends' gains, so the
    usual call leaves the arrival gain at 1.
    """
    paths = list(paths)
    if not paths:
        raise InputDomainError("Saleh-Valenzuela channel needs at least one path")
    g = np.zeros((bs_geom.n_elements, irs_geom.n_elements), dtype=complex)
    for dep, arr in paths:
        a_b = steering_vector(bs_geom, dep.direction)
        a_i = steering_vector(irs_geom, arr.direction)
        g += dep.gain * arr.gain * np.outer(a_b, a_i.conj())
    return g


def rank_one_bs_irs(bs_geom, irs_geom, aod, aoa_elev, aoa_azim, l_br):
    """Line-of-sight BS-IRS channel ``sqrt(L) a(aod) b(elev, azim)^H``."""
    if not l_br > 0:
        raise InputDomainError("large-scale gain must be positive")
    a = steering_vector(bs_geom, ula_direction(aod))
    b = steering_vector(irs_geom, unit_direction(aoa_elev, aoa_azim))
    return math.sqrt(l_br) * np.outer(a, b.conj())


@dataclass(frozen=True)
class PathLossParams:
    """Reference-distance loss ``c`` (linear) and exponent ``alpha`` per hop."""

    c1: float
    c2: float
    alpha1: float
    alpha2: float
    d0: float = 1.0

    def __post_init__(self):
        if min(self.c1, self.c2, self.alpha1, self.alpha2, self.d0) <= 0:
            raise InputDomainError("path-loss parameters must be positive")


def product_path_loss(p, d1, d2):
    """Received-power factor of a cascaded link with hop lengths ``d1``, ``d2``."""
    if d1 < p.d0 or d2 < p.d0:
        raise InputDomainError("distances must be at least the reference distance")
    return p.c1 * p.c2 * (d1 / p.d0) ** (-p.alpha1) * (d2 / p.d0) ** (-p.alpha2)


def link_path_loss(c, alpha, d, d0=1.0):
    """Single-hop counterpart of :func:`product_path_loss`."""
    if d < d0:
        raise InputDomainError("distance must be at least the reference distance")
    return c * (d / d0) ** (-alpha)


def _j0_series(x):
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    k = 0
    while True:
        k += 1
        term *= -q / (k * k)
        total += term
        if k > 4 and abs(term) < 1e-18:
            return total


def _j0_asymptotic(x):
    # Hankel expansion truncated at its smallest term.
    coeffs = [1.0]
    a = 1.0
    for k in range(1, 60):
        a *= -((2 * k - 1) ** 2) / (k * 8.0 * x)
        coeffs.append(a)
    stop = min(range(len(coeffs)), key=lambda i: abs(coeffs[i]))
    p = sum(coeffs[i] * (-1) ** (i // 2) for i in range(0, stop, 2))
    q = sum(coeffs[i] * (-1) ** ((i - 1) // 2) for i in range(1, stop, 2))
    w = x - math.pi / 4.0
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(w) - q * math.sin(w))


def bessel_j0(x):
    """Bessel function of the first kind, order zero (absolute error < 1e-10)."""
    x = abs(float(x))
    if x <= 12.0:
        return _j0_series(x)
    return _j0_asymptotic(x)


def jakes_correlation(f_d, tau):
    """Temporal correlation ``J0(2 pi f_d tau)`` of Jakes' Doppler spectrum."""
    if f_d < 0 or tau < 0:
        raise InputDomainError("Doppler frequency and delay must be non-negative")
    return bessel_j0(2.0 * math.pi * f_d * tau)


@dataclass(frozen=True, eq=False)
class RicianProcess:
    """Rician link whose NLoS part follows a first-order AR process.

    The realised channel is ``sqrt(L) (kappa H_los + sqrt(1 - kappa^2) H_nlos)``
    and each AR step draws ``H_nlos <- rho H_nlos + Delta`` with
    ``Delta ~ CN(0, (1 - rho^2) I)``, which keeps unit-variance entries
    stationary.
    """

    kappa: float
    large_scale: float
    los: np.ndarray
    nlos: np.ndarray
    rho: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.kappa <= 1.0:
            raise InputDomainError("kappa must lie in [0, 1]")
        if not 0.0 <= self.rho <= 1.0:
            raise InputDomainError("rho must lie in [0, 1]")
        if self.large_scale < 0:
            raise InputDomainError("large-scale gain must be non-negative")
        los = np.asarray(self.los, dtype=complex)
        nlos = np.asarray(self.nlos, dtype=complex)
        if los.shape != nlos.shape:
            raise InputDomainError("LoS and NLoS components differ in shape")
        object.__setattr__(self, "los", los)
        object.__setattr__(self, "nlos", nlos)

    @property
    def shape(self):
        return self.los.shape

    @classmethod
    def stationary(cls, kappa, large_scale, los, rho, rng):
        """Start the process from a draw of its stationary CN(0, I) NLoS law."""
        los = np.asarray(los, dtype=complex)
        return cls(kappa, large_scale, los, complex_normal(rng, los.shape), rho)


def ar_step(proc, rng):
    """Advance the NLoS state of ``proc`` by one AR step."""
    innovation = complex_normal(rng, proc.shape, 1.0 - proc.rho ** 2)
    return replace(proc, nlos=proc.rho * proc.nlos + innovation)


def sample_channel(proc):
    """Current channel matrix of a Rician process."""
    scatter = math.sqrt(max(0.0, 1.0 - proc.kappa ** 2))
    return math.sqrt(proc.large_scale) * (proc.kappa * proc.los + scatter * proc.nlos)


@dataclass(frozen=True, eq=False)
class ChannelEnsemble:
    """BS-IRS channel ``g`` (N_t x N) with direct and reflected Rician links."""

    g: np.ndarray
    h_d: RicianProcess
    h_r: RicianProcess

    def __post_init__(self):
        nt, n = np.shape(self.g)
        if self.h_r.shape[0] != n:
            raise InputDomainError("IRS dimension of g and h_r disagree")
        if self.h_d.shape[0] != nt:
            raise InputDomainError("BS dimension of g and h_d disagree")
        if self.h_d.shape[1] != self.h_r.shape[1]:
            raise InputDomainError("user dimension of h_d and h_r disagree")


def numerical_rank(m, rel_tol=1e-8):
    """Number of singular values above ``rel_tol`` times the largest."""
    s = np.linalg.svd(np.atleast_2d(m), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))
