"""Reflection patterns, array gain and effective channels.

All channels use the transmit-side orientation: ``G_i`` is ``N_t x N`` and
``H_i`` is ``N x K``, so the effective channel ``H_d + sum_i G_i Phi_i H_i``
is ``N_t x K`` and column ``k`` is the vector ``h_k`` whose Hermitian
transpose multiplies the precoders.  The receive-side form used for the
received signal model is its conjugate transpose.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import InputDomainError

__all__ = [
    "ReflectionPattern", "ReactanceElement", "DistributedIrs",
    "scattering_coefficient", "array_gain", "optimal_pattern", "quantize",
    "effective_channel", "dof_spectrum",
]

TWO_PI = 2.0 * np.pi


def _wrap(phases):
    wrapped = np.mod(np.asarray(phases, dtype=float), TWO_PI)
    # mod can round up to exactly 2 pi for tiny negative inputs
    wrapped[wrapped >= TWO_PI] = 0.0
    return wrapped


@dataclass(frozen=True, eq=False)
class ReflectionPattern:
    """Per-element phase shifts of one IRS, stored in radians on [0, 2 pi).

    ``resolution`` is ``None`` for continuous phases or the number of bits
    of a uniform phase grid.
    """

    phases: np.ndarray
    resolution: int = None

    def __post_init__(self):
        phases = _wrap(np.atleast_1d(self.phases))
        if phases.ndim != 1:
            raise InputDomainError("phases must be a vector")
        object.__setattr__(self, "phases", phases)
        if self.resolution is not None:
            levels = 2 ** self.resolution
            idx = phases * levels / TWO_PI
            if np.any(np.abs(idx - np.round(idx)) > 1e-9):
                raise InputDomainError(f"phases are not on the {self.resolution}-bit grid")

    def __len__(self):
        return self.phases.size

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n))

    @classmethod
    def from_vector(cls, values):
        """Pattern from complex reflection coefficients (only the angle is kept)."""
        return cls(np.angle(np.asarray(values)))

    @property
    def vector(self):
        """Reflection coefficients ``exp(j theta)``."""
        return np.exp(1j * self.phases)

    @property
    def matrix(self):
        """Diagonal scattering matrix ``Phi``."""
        return np.diag(self.vector)


@dataclass(frozen=True)
class ReactanceElement:
    """Purely reactive load ``jX`` on a port with reference impedance ``Z0``."""

    reactance: float
    reference_impedance: float = 50.0


def scattering_coefficient(elem):
    """Reflection coefficient ``(jX - Z0) / (jX + Z0)`` of a reactive port."""
    z0 = elem.reference_impedance
    if not z0 > 0:
        raise InputDomainError("reference impedance must be positive")
    jx = 1j * elem.reactance
    return (jx - z0) / (jx + z0)


@dataclass(frozen=True, eq=False)
class DistributedIrs:
    """Several IRS units driven by one controller."""

    units: tuple

    def __post_init__(self):
        units = tuple(self.units)
        sizes = {len(pattern) for _, pattern in units}
        if len(sizes) > 1:
            raise InputDomainError("all IRS units must have the same element count")
        for geom, pattern in units:
            if geom is not None and geom.n_elements != len(pattern):
                raise InputDomainError("pattern length differs from its unit's geometry")
        object.__setattr__(self, "units", units)

    @property
    def patterns(self):
        return [pattern for _, pattern in self.units]


def _pattern_phases(pattern):
    if isinstance(pattern, ReflectionPattern):
        return pattern.phases
    return np.asarray(pattern, dtype=float)


def array_gain(pattern, incident_phases, departure_phases):
    """Power gain ``|sum_n exp(j(phi_i + theta - phi_d))|^2`` of one IRS."""
    theta = _pattern_phases(pattern)
    phi_i = np.asarray(incident_phases, dtype=float)
    phi_d = np.asarray(departure_phases, dtype=float)
    if not theta.shape == phi_i.shape == phi_d.shape:
        raise InputDomainError("pattern and phase vectors differ in length")
    return float(abs(np.sum(np.exp(1j * (phi_i + theta - phi_d)))) ** 2)


def optimal_pattern(incident_phases, departure_phases):
    """Pattern aligning every element's phasor, reaching gain ``N^2``."""
    phi_i = np.asarray(incident_phases, dtype=float)
    phi_d = np.asarray(departure_phases, dtype=float)
    if phi_i.shape != phi_d.shape:
        raise InputDomainError("phase vectors differ in length")
    return ReflectionPattern(phi_d - phi_i)


def quantize(pattern, bits):
    """Snap each phase to the nearest point of the ``bits``-bit uniform grid.

    Ties go to the smaller grid index; the top of the circle wraps to 0.
    """
    if bits < 1:
        raise InputDomainError("phase resolution needs at least one bit")
    levels = 2 ** int(bits)
    pos = _pattern_phases(pattern) * levels / TWO_PI
    idx = np.ceil(pos - 0.5).astype(np.int64) % levels
    return ReflectionPattern(idx * TWO_PI / levels, resolution=int(bits))


def _as_patterns(patterns):
    if isinstance(patterns, DistributedIrs):
        return patterns.patterns
    if isinstance(patterns, ReflectionPattern):
        return [patterns]
    return list(patterns)


def effective_channel(links, patterns, direct=None):
    """Effective ``N_t x K`` channel ``H_d + sum_i G_i Phi_i H_i``.

    Parameters
    ----------
    links : sequence of (G_i, H_i)
        Per-unit BS-IRS (``N_t x N``) and IRS-user (``N x K``) channels.
    patterns : DistributedIrs, ReflectionPattern or sequence of them
        One pattern per unit.
    direct : ndarray, optional
        BS-user channel ``H_d`` (``N_t x K``); omitted when ``None``.
    """
    links = list(links)
    patterns = _as_patterns(patterns)
    if len(links) != len(patterns):
        raise InputDomainError(f"{len(links)} links but {len(patterns)} patterns")
    if not links and direct is None:
        raise InputDomainError("need a direct link or at least one IRS unit")
    total = None if direct is None else np.array(direct, dtype=complex)
    for (g, h), pattern in zip(links, patterns):
        g = np.asarray(g)
        h = np.asarray(h)
        if g.shape[1] != len(pattern) or h.shape[0] != len(pattern):
            raise InputDomainError("unit channel dimensions do not match its pattern")
        term = (g * _phase_vector(pattern)) @ h
        if total is None:
            total = term.astype(complex)
        elif total.shape != term.shape:
            raise InputDomainError("unit channels disagree on N_t x K shape")
        else:
            total = total + term
    return total


def _phase_vector(pattern):
    if isinstance(pattern, ReflectionPattern):
        return pattern.vector
    return np.asarray(pattern)


def dof_spectrum(effective):
    """Eigenvalues of ``H H^H`` in descending order, divided by the largest."""
    h = np.asarray(effective)
    gram = h @ h.conj().T
    eig = np.linalg.eigvalsh(gram)[::-1]
    if eig[0] <= 0 or not math.isfinite(eig[0]):
        raise InputDomainError("channel matrix is zero")
    return np.clip(eig / eig[0], 0.0, None)
