"""Two-timescale design: frame-level IRS phases, slot-level SVD-ZF beamforming.

The IRS pattern is fixed for a frame of ``T`` slots and chosen from
statistical CSI by a recursive-sampling particle swarm (rsPSO).  In each
slot the BS precodes with the ``M`` dominant left singular vectors ``V`` of
the effective channel observed ``tau`` slots earlier; the user estimates
the combined channel ``V^H H_eff`` from precoded pilots, applies a
zero-forcing combiner and the BS water-fills the stream powers.

Channel samples are stacked in arrays of shape ``(B, T + tau, ., .)``.
Slot ``s`` of the stack corresponds to frame slot ``t = s - tau + 1``, so
the first ``tau`` entries are the warm-up slots whose channels are the
outdated CSI of the first slots of the frame.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .channel import RicianProcess, ar_step, sample_channel
from .errors import InputDomainError, RankDeficiencyError

__all__ = [
    "FrameConfig", "PsoParams", "Particle", "StatisticalCsi", "ChannelSamples",
    "AasrDiagnostics", "SampleCounter", "RsPsoResult", "combined_channel",
    "zf_receiver", "stream_noise_factors", "water_filling", "per_slot_rate",
    "svd_precoder", "generate_samples", "slot_rates", "aasr", "aasr_per_sample",
    "pso_step", "surrogate_fitness", "run_rspso", "flops_f1", "clamp_phases",
    "COND_LIMIT", "SCHEMES",
]

COND_LIMIT = 1e12
SCHEMES = ("svd-zf", "svd", "upper-bound")
_LOWER = math.nextafter(-math.pi, 0.0)


@dataclass(frozen=True)
class FrameConfig:
    """Frame of ``slots`` slots with CSI delay ``delay`` and ``streams`` data streams."""

    slots: int
    delay: int = 1
    streams: int = 1
    p_tot: float = 1.0
    noise: float = 1.0

    def __post_init__(self):
        if self.slots < 1 or self.delay < 0 or self.streams < 1:
            raise InputDomainError("slots and streams must be positive, delay non-negative")
        if not self.p_tot > 0 or not self.noise > 0:
            raise InputDomainError("power budget and noise must be positive")

    def check_dims(self, n_tx, n_users):
        if self.streams > min(n_tx, n_users):
            raise InputDomainError(
                f"{self.streams} streams exceed min(N_t, K) = {min(n_tx, n_users)}")


@dataclass(frozen=True)
class PsoParams:
    """Swarm size, PSO coefficients and the mini-batch layout.

    ``batches`` defaults to ``iterations`` (one fresh mini-batch per
    iteration); the total sample count is ``batches * batch_size``.
    """

    swarm: int = 30
    inertia: float = 0.7
    c1: float = 1.5
    c2: float = 1.5
    iterations: int = 50
    batch_size: int = 20
    batches: int = None

    def __post_init__(self):
        if self.batches is None:
            object.__setattr__(self, "batches", self.iterations)
        if self.swarm < 1 or self.iterations < 1 or self.batch_size < 1:
            raise InputDomainError("swarm, iterations and batch size must be positive")
        if self.inertia < 0 or self.c1 < 0 or self.c2 < 0:
            raise InputDomainError("PSO coefficients must be non-negative")
        if self.batches < self.iterations:
            raise InputDomainError("need at least one mini-batch per iteration")

    @property
    def total_samples(self):
        return self.batches * self.batch_size


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray = None
    best_fitness: float = -np.inf
    surrogate: float = 0.0


@dataclass(frozen=True, eq=False)
class StatisticalCsi:
    """Frame-level channel statistics.

    ``g`` is the fixed BS-IRS channel (``N_t x N``); the BS-user and
    IRS-user links are Rician with LoS parts ``hd_los`` (``N_t x K``) and
    ``hr_los`` (``N x K``), large-scale gains ``l_bu`` and ``l_ur``, a
    common factor ``kappa`` and temporal correlation ``rho`` over the CSI
    delay.
    """

    g: np.ndarray
    hd_los: np.ndarray
    hr_los: np.ndarray
    l_bu: float
    l_ur: float
    kappa: float
    rho: float

    def __post_init__(self):
        for name in ("g", "hd_los", "hr_los"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=complex))
        nt, n = self.g.shape
        if self.hd_los.shape[0] != nt or self.hr_los.shape[0] != n:
            raise InputDomainError("LoS components do not match the BS-IRS channel")
        if self.hd_los.shape[1] != self.hr_los.shape[1]:
            raise InputDomainError("LoS components disagree on the user dimension")
        if not 0.0 <= self.kappa <= 1.0 or not 0.0 <= self.rho <= 1.0:
            raise InputDomainError("kappa and rho must lie in [0, 1]")
        if self.l_bu < 0 or self.l_ur < 0:
            raise InputDomainError("large-scale gains must be non-negative")

    @property
    def n_tx(self):
        return self.g.shape[0]

    @property
    def n_elements(self):
        return self.g.shape[1]

    @property
    def n_users(self):
        return self.hd_los.shape[1]


@dataclass(frozen=True, eq=False)
class ChannelSamples:
    """Stacked sample trajectories ``h_d[b, s]`` and ``h_r[b, s]``."""

    g: np.ndarray
    h_d: np.ndarray
    h_r: np.ndarray
    delay: int

    @property
    def n_samples(self):
        return self.h_d.shape[0]

    @property
    def slots(self):
        return self.h_d.shape[1] - self.delay

    def subset(self, start, stop):
        return ChannelSamples(self.g, self.h_d[start:stop], self.h_r[start:stop], self.delay)

    def effective(self, theta):
        """Effective channels ``H_d + G diag(exp(j theta)) H_r`` for every sample and slot."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.g.shape[1],):
            raise InputDomainError("phase vector length differs from the IRS size")
        gp = self.g * np.exp(1j * theta)
        return self.h_d + gp @ self.h_r


def generate_samples(s_csi, frame, n_samples, rng):
    """Draw ``n_samples`` channel trajectories covering ``T + tau`` slots.

    The NLoS parts start from their stationary law and follow the AR(1)
    recursion with per-slot coefficient ``rho^(1/tau)``, so the
    correlation between a slot and its CSI ``tau`` slots earlier is
    ``rho``.
    """
    if n_samples < 1:
        raise InputDomainError("need at least one sample")
    tau = frame.delay
    per_slot = s_csi.rho ** (1.0 / tau) if tau > 0 else 1.0
    n_slots = frame.slots + tau
    procs = []
    for los, gain in ((s_csi.hd_los, s_csi.l_bu), (s_csi.hr_los, s_csi.l_ur)):
        stack = np.broadcast_to(los, (n_samples,) + los.shape)
        procs.append(RicianProcess.stationary(s_csi.kappa, gain, stack, per_slot, rng))
    h_d = np.empty((n_samples, n_slots) + s_csi.hd_los.shape, dtype=complex)
    h_r = np.empty((n_samples, n_slots) + s_csi.hr_los.shape, dtype=complex)
    for s in range(n_slots):
        if s > 0:
            procs = [ar_step(p, rng) for p in procs]
        h_d[:, s] = sample_channel(procs[0])
        h_r[:, s] = sample_channel(procs[1])
    return ChannelSamples(s_csi.g, h_d, h_r, tau)


def svd_precoder(h_old, m):
    """``M`` dominant left singular vectors of ``h_old`` (``N_t x M``), batched."""
    u, _, _ = np.linalg.svd(h_old, full_matrices=False)
    if m > u.shape[-1]:
        raise InputDomainError("more streams than the channel dimension")
    return u[..., :, :m]


def combined_channel(h_eff, v):
    """Combined channel ``V^H H_eff`` (``M x K``) seen through the precoder."""
    return np.swapaxes(np.conj(v), -1, -2) @ h_eff


def _gram(hc):
    return hc @ np.swapaxes(np.conj(hc), -1, -2)


def _check_conditioning(r):
    eig = np.linalg.eigvalsh(r)
    if not eig[-1] > 0 or eig[0] <= eig[-1] / COND_LIMIT:
        raise RankDeficiencyError(
            "combined channel is rank deficient; reduce the stream count")


def zf_receiver(combined):
    """ZF combiner ``(H_c H_c^H)^{-1} H_c`` (``M x K``); ``W_r H_c^H = I``."""
    hc = np.asarray(combined, dtype=complex)
    r = _gram(hc)
    _check_conditioning(r)
    return np.linalg.solve(r, hc)


def stream_noise_factors(combined):
    """Diagonal of ``(H_c H_c^H)^{-1}``: noise amplification per stream."""
    hc = np.asarray(combined, dtype=complex)
    r = _gram(hc)
    _check_conditioning(r)
    return np.real(np.diag(np.linalg.inv(r))).copy()


def water_filling(f, noise, p_tot):
    """Powers ``[level - noise f_m]^+`` summing to ``p_tot``.

    Exact active-set solution: with the noise levels sorted ascending the
    active set is the largest prefix whose common level exceeds its last
    member.  Works along the last axis of ``f``; infinite entries
    (dropped streams) receive no power, and a row with no finite entry
    gets none at all.

    >>> water_filling([1.0, 3.0], 1.0, 2.0)
    array([2., 0.])
    """
    if not p_tot > 0 or not noise > 0:
        raise InputDomainError("power budget and noise must be positive")
    a = noise * np.asarray(f, dtype=float)
    if np.any(a <= 0) or np.any(np.isnan(a)):
        raise InputDomainError("noise factors must be positive")
    order = np.argsort(a, axis=-1)
    srt = np.take_along_axis(a, order, axis=-1)
    count = np.arange(1, a.shape[-1] + 1)
    with np.errstate(invalid="ignore"):
        levels = (p_tot + np.cumsum(srt, axis=-1)) / count
        n_active = np.sum(levels > srt, axis=-1)
    idx = np.maximum(n_active - 1, 0)[..., None]
    level = np.take_along_axis(levels, idx, axis=-1)
    with np.errstate(invalid="ignore"):
        p = np.maximum(level - a, 0.0)
    p[np.isinf(a)] = 0.0
    p[n_active == 0] = 0.0
    return p


def per_slot_rate(f, p, noise):
    """``sum_m log2(1 + p_m / (noise f_m))`` along the last axis."""
    f = np.asarray(f, dtype=float)
    p = np.asarray(p, dtype=float)
    if f.shape != p.shape:
        raise InputDomainError("noise factors and powers differ in shape")
    with np.errstate(divide="ignore"):
        snr = np.where(np.isinf(f), 0.0, p / (noise * f))
    return np.sum(np.log2(1.0 + snr), axis=-1)


@dataclass
class AasrDiagnostics:
    """Slot count and number of streams dropped for ill-conditioning."""

    slots: int = 0
    dropped_streams: int = 0


def _zf_noise_factors(hc, diag):
    """Batched noise factors with ill-conditioned streams dropped (``inf``).

    A slot whose ``M x M`` gram is ill-conditioned keeps the largest
    leading block ``M' < M`` that is well conditioned.
    """
    r = _gram(hc)
    m = r.shape[-1]
    eig = np.linalg.eigvalsh(r)
    bad = ~(eig[..., -1] > 0) | (eig[..., 0] <= eig[..., -1] / COND_LIMIT)
    f = np.full(r.shape[:-1], np.inf)
    good = ~bad
    if np.any(good):
        f[good] = np.real(np.diagonal(np.linalg.inv(r[good]), axis1=-2, axis2=-1))
    for idx in zip(*np.nonzero(bad)):
        block = r[idx]
        for keep in range(m - 1, 0, -1):
            sub = block[:keep, :keep]
            e = np.linalg.eigvalsh(sub)
            if e[-1] > 0 and e[0] > e[-1] / COND_LIMIT:
                f[idx][:keep] = np.real(np.diag(np.linalg.inv(sub)))
                break
    if diag is not None:
        diag.slots += int(np.prod(r.shape[:-2]))
        diag.dropped_streams += int(np.sum(np.isinf(f)))
    return f


def _svd_rates(h_now, frame):
    s = np.linalg.svd(h_now, compute_uv=False)[..., :frame.streams]
    with np.errstate(divide="ignore"):
        f = np.where(s > 0, 1.0 / np.maximum(s, 1e-300) ** 2, np.inf)
    p = water_filling(f, frame.noise, frame.p_tot)
    return per_slot_rate(f, p, frame.noise)


def _outdated_svd_rates(h_now, h_old, frame):
    # precoder, combiner and powers all from the outdated channel
    m = frame.streams
    u, s, vh = np.linalg.svd(h_old, full_matrices=False)
    v_tx = u[..., :, :m]
    u_rx = np.swapaxes(np.conj(vh), -1, -2)[..., :, :m]
    s = s[..., :m]
    with np.errstate(divide="ignore"):
        f = np.where(s > 0, 1.0 / np.maximum(s, 1e-300) ** 2, np.inf)
    p = water_filling(f, frame.noise, frame.p_tot)
    e = np.swapaxes(np.conj(u_rx), -1, -2) @ np.swapaxes(np.conj(h_now), -1, -2) @ v_tx
    power = np.abs(e) ** 2 * p[..., None, :]
    signal = np.diagonal(power, axis1=-2, axis2=-1)
    sinr = signal / (power.sum(axis=-1) - signal + frame.noise)
    return np.sum(np.log2(1.0 + sinr), axis=-1)


def slot_rates(h_eff, delay, frame, scheme="svd-zf", diag=None):
    """Per-slot sum rates, shape ``(B, T)``, for stacked effective channels.

    ``scheme`` is ``"svd-zf"`` (outdated SVD precoder, ZF combiner on the
    current combined channel, water-filling on its noise factors),
    ``"svd"`` (precoder, combiner and powers all from the outdated SVD,
    with the resulting inter-stream interference) or ``"upper-bound"``
    (SVD water-filling on the current channel).
    """
    h_eff = np.asarray(h_eff)
    frame.check_dims(h_eff.shape[-2], h_eff.shape[-1])
    n_slots = h_eff.shape[1] - delay
    h_now = h_eff[:, delay:]
    h_old = h_eff[:, :n_slots]
    if scheme == "svd-zf":
        v = svd_precoder(h_old, frame.streams)
        f = _zf_noise_factors(combined_channel(h_now, v), diag)
        p = water_filling(f, frame.noise, frame.p_tot)
        return per_slot_rate(f, p, frame.noise)
    if scheme == "svd":
        return _outdated_svd_rates(h_now, h_old, frame)
    if scheme == "upper-bound":
        return _svd_rates(h_now, frame)
    raise InputDomainError(f"unknown scheme {scheme!r}")


def aasr_per_sample(theta, samples, frame, scheme="svd-zf", diag=None):
    """Slot-averaged sum rate of every sample trajectory (shape ``(B,)``)."""
    h = samples.effective(theta)
    return slot_rates(h, samples.delay, frame, scheme, diag).mean(axis=1)


def aasr(theta, samples, frame, scheme="svd-zf", diag=None):
    """Achievable average sum-rate over all samples and slots (bit/s/Hz)."""
    return float(np.mean(aasr_per_sample(theta, samples, frame, scheme, diag)))


def clamp_phases(x):
    """Clamp to ``(-pi, pi]``: above ``pi`` to ``pi``, at or below ``-pi`` to
    the nearest float above ``-pi``."""
    x = np.minimum(np.asarray(x, dtype=float), math.pi)
    return np.where(x <= -math.pi, _LOWER, x)


def pso_step(particle, global_best, params, rng):
    """Velocity and position update of one particle (returns a new Particle)."""
    eps1, eps2 = rng.random(2)
    x = particle.position
    v = (params.inertia * particle.velocity
         + params.c1 * eps1 * (particle.best_position - x)
         + params.c2 * eps2 * (np.asarray(global_best) - x))
    return Particle(clamp_phases(x + v), v, particle.best_position,
                    particle.best_fitness, particle.surrogate)


def surrogate_fitness(prev, batch_rate, i):
    """Recursive estimate ``(1 - mu) prev + mu batch_rate`` with ``mu = i^-0.2``."""
    if i < 1:
        raise InputDomainError("iteration index starts at 1")
    mu = i ** -0.2
    return (1.0 - mu) * prev + mu * batch_rate


def flops_f1(n_tx, n_users, n_elements, streams):
    """Per-sample fitness cost ``4(N_t+K)N^2 + 4 M N_t K + 4 M^2 K + 4M^3 + M^2 + M``."""
    nt, k, n, m = (int(v) for v in (n_tx, n_users, n_elements, streams))
    if min(nt, k, n, m) < 1:
        raise InputDomainError("dimensions must be positive")
    return 4 * (nt + k) * n * n + 4 * m * nt * k + 4 * m * m * k + (4 * m ** 3 + m * m + m)


@dataclass
class SampleCounter:
    """Fitness-evaluation cost: sample trajectories and FLOPs per iteration.

    Index 0 holds the swarm initialisation.
    """

    samples: list = field(default_factory=list)
    flops: list = field(default_factory=list)

    def record(self, iteration, n_samples, f1):
        while len(self.samples) <= iteration:
            self.samples.append(0)
            self.flops.append(0)
        self.samples[iteration] += n_samples
        self.flops[iteration] += n_samples * f1


@dataclass
class RsPsoResult:
    best_theta: np.ndarray
    fitness_trace: list
    particles: list
    counter: SampleCounter
    diagnostics: AasrDiagnostics


def run_rspso(frame, s_csi, params, rng, samples=None, full_batch=False):
    """Frame-level IRS phases maximising the AASR by recursive-sampling PSO.

    Particle ``p`` at iteration ``i`` is scored on mini-batch ``i``
    (``B_s`` samples) and its surrogate fitness is updated recursively;
    with ``full_batch`` every iteration scores all ``B`` samples and the
    fitness is the plain AASR.  A particle's best is replaced when its
    new fitness beats the recorded best, so recorded bests never
    decrease; the global best is the first particle (by index) with the
    highest recorded best.

    Returns
    -------
    RsPsoResult
        ``fitness_trace[i]`` is the global-best fitness after iteration
        ``i`` (entry 0 after initialisation).
    """
    if frame.slots != params.iterations:
        raise InputDomainError("the frame length T must equal the PSO iteration count")
    frame.check_dims(s_csi.n_tx, s_csi.n_users)
    if samples is None:
        samples = generate_samples(s_csi, frame, params.total_samples, rng)
    elif samples.n_samples < params.total_samples:
        raise InputDomainError("fewer samples than batches * batch_size")
    n = s_csi.n_elements
    f1 = flops_f1(s_csi.n_tx, s_csi.n_users, n, frame.streams)
    bs = params.batch_size
    counter = SampleCounter()
    diag = AasrDiagnostics()

    def score(theta, i):
        if full_batch:
            batch = samples.subset(0, params.total_samples)
        else:
            # initialisation shares the first mini-batch with iteration 1
            k = max(i, 1) - 1
            batch = samples.subset(k * bs, (k + 1) * bs)
        counter.record(i, batch.n_samples, f1)
        return aasr(theta, batch, frame, "svd-zf", diag)

    start = clamp_phases(rng.uniform(-math.pi, math.pi, size=(params.swarm, n)))
    swarm = []
    for p in range(params.swarm):
        j0 = score(start[p], 0)
        swarm.append(Particle(start[p], np.zeros(n), start[p].copy(), j0, j0))
    best = int(np.argmax([q.best_fitness for q in swarm]))
    g_pos = swarm[best].best_position.copy()
    trace = [swarm[best].best_fitness]
    for i in range(1, params.iterations + 1):
        for p in range(params.swarm):
            q = pso_step(swarm[p], g_pos, params, rng)
            rate = score(q.position, i)
            q.surrogate = rate if full_batch else surrogate_fitness(q.surrogate, rate, i)
            if q.surrogate > q.best_fitness:
                q.best_position = q.position.copy()
                q.best_fitness = q.surrogate
            swarm[p] = q
        best = int(np.argmax([q.best_fitness for q in swarm]))
        g_pos = swarm[best].best_position.copy()
        trace.append(swarm[best].best_fitness)
    return RsPsoResult(g_pos, trace, swarm, counter, diag)
