"""Slot-by-slot weighted sum-rate maximisation for distributed-IRS downlinks.

Alternating optimisation over three blocks:

1. SINR auxiliaries ``alpha = gamma`` (closed form),
2. the precoder ``W`` through a quadratic transform with auxiliaries
   ``beta`` and a Lagrange multiplier on the power budget,
3. the stacked reflection vector through a second quadratic transform
   (auxiliaries ``rho``), leaving the unit-modulus quadratic program
   ``max -x^H A x + 2 Re{x^H b}``.  It is solved either by a coordinate
   fixed point on the dual variables (:func:`solve_reflection_dual`) or by
   manifold gradient ascent (:mod:`irsmimo.ucmo`).

Each block is solved exactly given the others, so the weighted sum-rate
recorded after every outer iteration never decreases.

Notation: ``C = H_eff^H W`` is the ``K x K`` matrix with ``C[k, j]`` the
gain of precoder ``j`` at user ``k``.  When a direct link is present the
reflection vector is augmented with a trailing unit entry that carries the
direct-path term; the SINRs are invariant to a common phase of the
augmented vector, so the solver output is rotated back to make that entry
exactly 1.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ConvergenceError, InputDomainError
from .reflection import effective_channel
from . import ucmo

__all__ = [
    "SlotProblem", "AoState", "DualResult", "ReflectionSolve", "solve_reflection", "sinr", "weighted_sum_rate",
    "update_alpha", "update_beta", "update_precoder", "update_rho",
    "assemble_reflection_quadratic", "solve_reflection_dual", "run_ao",
    "initial_state", "zf_precoder", "f2_objective", "f5_objective",
    "f8_objective", "reflection_objective", "dual_function",
]

LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class SlotProblem:
    """Channels, user weights, noise power and power budget of one slot.

    ``links`` holds ``(G_i, H_i)`` per IRS unit with ``G_i`` of shape
    ``N_t x N`` and ``H_i`` of shape ``N x K``; ``direct`` is an optional
    ``N_t x K`` BS-user channel.
    """

    links: tuple
    weights: np.ndarray
    noise: float
    p_max: float
    direct: np.ndarray = None

    def __post_init__(self):
        links = tuple((np.asarray(g, dtype=complex), np.asarray(h, dtype=complex))
                      for g, h in self.links)
        object.__setattr__(self, "links", links)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", weights)
        if np.any(weights <= 0):
            raise InputDomainError("user weights must be positive")
        if not self.noise > 0 or not self.p_max > 0:
            raise InputDomainError("noise power and power budget must be positive")
        if not links and self.direct is None:
            raise InputDomainError("problem has neither IRS units nor a direct link")
        shapes = {g.shape[1] for g, _ in links}
        if len(shapes) > 1:
            raise InputDomainError("IRS units must share one element count")
        for g, h in links:
            if g.shape[1] != h.shape[0] or h.shape[1] != weights.size:
                raise InputDomainError("link dimensions are inconsistent")
        if self.direct is not None:
            d = np.asarray(self.direct, dtype=complex)
            object.__setattr__(self, "direct", d)
            if d.shape[1] != weights.size:
                raise InputDomainError("direct link has the wrong user count")

    @property
    def n_users(self):
        return self.weights.size

    @property
    def n_tx(self):
        if self.links:
            return self.links[0][0].shape[0]
        return self.direct.shape[0]

    @property
    def n_units(self):
        return len(self.links)

    @property
    def n_elements(self):
        return self.links[0][0].shape[1] if self.links else 0

    @property
    def n_reflect(self):
        return self.n_units * self.n_elements

    def split(self, theta):
        """Per-unit reflection vectors from the stacked vector."""
        theta = np.asarray(theta)
        if theta.shape != (self.n_reflect,):
            raise InputDomainError(
                f"stacked reflection vector must have length {self.n_reflect}")
        return [theta[i * self.n_elements:(i + 1) * self.n_elements]
                for i in range(self.n_units)]

    def effective(self, theta):
        """Effective ``N_t x K`` channel for the stacked reflection vector."""
        return effective_channel(self.links, self.split(theta), self.direct)

    def without_irs(self):
        """The same slot with every IRS unit switched off."""
        if self.direct is None:
            raise InputDomainError("no direct link to fall back on")
        return SlotProblem((), self.weights, self.noise, self.p_max, self.direct)


def _stacked(problem, patterns):
    if patterns is None:
        return np.zeros(0, dtype=complex)
    if isinstance(patterns, np.ndarray):
        if np.iscomplexobj(patterns):
            return patterns
        return np.exp(1j * patterns)
    vectors = [p.vector if hasattr(p, "vector") else np.asarray(p) for p in patterns]
    if not vectors:
        return np.zeros(0, dtype=complex)
    return np.concatenate(vectors).astype(complex)


def _gains(problem, w, theta):
    h = problem.effective(_stacked(problem, theta))
    return h.conj().T @ w


def _sinr_from_gains(c, noise):
    power = np.abs(c) ** 2
    signal = np.diag(power)
    return signal / (power.sum(axis=1) - signal + noise)


def sinr(problem, w, patterns):
    """Per-user SINR ``|h_k^H w_k|^2 / (sum_{j != k} |h_k^H w_j|^2 + noise)``."""
    return _sinr_from_gains(_gains(problem, w, patterns), problem.noise)


def weighted_sum_rate(problem, w, patterns):
    """``sum_k omega_k log2(1 + gamma_k)`` in bit/s/Hz."""
    gamma = sinr(problem, w, patterns)
    return float(np.sum(problem.weights * np.log2(1.0 + gamma)))


def update_alpha(gamma):
    """Optimal SINR auxiliaries, equal to the current SINRs."""
    return np.array(gamma, dtype=float, copy=True)


def f2_objective(problem, w, patterns, alpha):
    """Lagrangian-dual reformulation of the weighted sum-rate (bits)."""
    gamma = sinr(problem, w, patterns)
    om = problem.weights
    val = om * np.log1p(alpha) - om * alpha + om * (1.0 + alpha) * gamma / (1.0 + gamma)
    return float(np.sum(val) / LN2)


def _qt_auxiliary(c, weights, alpha, noise):
    wt = weights * (1.0 + alpha)
    denom = (np.abs(c) ** 2).sum(axis=1) + noise
    return np.sqrt(wt) * np.diag(c) / denom


def update_beta(problem, w, patterns, alpha):
    """Quadratic-transform auxiliaries for the precoder block."""
    c = _gains(problem, w, patterns)
    return _qt_auxiliary(c, problem.weights, np.asarray(alpha, dtype=float), problem.noise)


def f5_objective(problem, w, patterns, alpha, beta):
    c = _gains(problem, w, patterns)
    wt = problem.weights * (1.0 + np.asarray(alpha))
    denom = (np.abs(c) ** 2).sum(axis=1) + problem.noise
    return float(np.sum(2.0 * np.sqrt(wt) * np.real(np.conj(beta) * np.diag(c))
                        - np.abs(beta) ** 2 * denom))


def update_precoder(problem, patterns, alpha, beta, rel_tol=1e-14):
    """Precoder maximising the quadratic-transform objective under the budget.

    ``w_k = sqrt(w~_k) beta_k (mu I + sum_i |beta_i|^2 h_i h_i^H)^{-1} h_k``
    with ``mu`` found by bisection so that the budget is met with equality,
    or ``mu = 0`` when the minimum-norm unconstrained solution already fits.
    """
    h = problem.effective(_stacked(problem, patterns))
    beta = np.asarray(beta, dtype=complex)
    wt = problem.weights * (1.0 + np.asarray(alpha, dtype=float))
    m = (h * np.abs(beta) ** 2) @ h.conj().T
    rhs = h * (np.sqrt(wt) * beta)
    lam, u = np.linalg.eigh(m)
    lam = np.clip(lam, 0.0, None)
    proj = u.conj().T @ rhs
    keep = lam > 1e-12 * max(lam.max(), 1e-300)
    # rhs lies in range(m); components on the numerical null space are noise
    proj[~keep] = 0.0
    weight_sq = np.sum(np.abs(proj) ** 2, axis=1)

    def power(mu):
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(keep, weight_sq / (lam + mu) ** 2, 0.0)
        return float(terms.sum())

    def precoder(mu):
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(keep, 1.0 / (lam + mu), 0.0)
        return u @ (scale[:, None] * proj)

    if power(0.0) <= problem.p_max:
        return precoder(0.0)
    lo, hi = 0.0, 1.0
    while power(hi) > problem.p_max:
        lo, hi = hi, 2.0 * hi
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if power(mid) > problem.p_max:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rel_tol * hi:
            break
    # hi always satisfies the budget
    return precoder(hi)


def _reflection_vectors(problem, w, augment):
    """Array ``V[k, :, j]`` of stacked vectors ``v~_{k,j}``."""
    k = problem.n_users
    parts = []
    for g, h in problem.links:
        gw = g.conj().T @ w                      # N x K(j)
        parts.append(h.conj().T[:, :, None] * gw[None, :, :])   # K(k) x N x K(j)
    if augment:
        parts.append((problem.direct.conj().T @ w)[:, None, :])
    if not parts:
        return np.zeros((k, 0, k), dtype=complex)
    return np.concatenate(parts, axis=1)


def assemble_reflection_quadratic(problem, w, alpha, rho, augment=None):
    """Matrix ``A`` and vector ``b`` of the reflection subproblem.

    With ``augment`` (default: whenever a direct link exists) the returned
    quantities have one extra trailing coordinate for the direct path.
    """
    if augment is None:
        augment = problem.direct is not None
    v = _reflection_vectors(problem, w, augment)
    rho = np.asarray(rho, dtype=complex)
    wt = problem.weights * (1.0 + np.asarray(alpha, dtype=float))
    weighted = v * np.abs(rho)[:, None, None]
    flat = weighted.transpose(1, 0, 2).reshape(v.shape[1], -1)
    a = flat @ flat.conj().T
    a = 0.5 * (a + a.conj().T)
    diag_v = v[np.arange(problem.n_users), :, np.arange(problem.n_users)]  # K x IN
    b = (np.sqrt(wt) * np.conj(rho)) @ diag_v
    return a, b


def _augmented(problem, theta):
    theta = _stacked(problem, theta)
    if problem.direct is not None:
        return np.concatenate([theta, [1.0 + 0j]])
    return theta


def update_rho(problem, w, patterns, alpha):
    """Quadratic-transform auxiliaries for the reflection block."""
    theta = _augmented(problem, patterns)
    v = _reflection_vectors(problem, w, problem.direct is not None)
    c = np.einsum("n,knj->kj", theta.conj(), v)
    return _qt_auxiliary(c, problem.weights, np.asarray(alpha, dtype=float), problem.noise)


def f8_objective(problem, w, patterns, alpha, rho):
    theta = _augmented(problem, patterns)
    v = _reflection_vectors(problem, w, problem.direct is not None)
    c = np.einsum("n,knj->kj", theta.conj(), v)
    wt = problem.weights * (1.0 + np.asarray(alpha))
    denom = (np.abs(c) ** 2).sum(axis=1) + problem.noise
    return float(np.sum(2.0 * np.sqrt(wt) * np.real(np.conj(rho) * np.diag(c))
                        - np.abs(rho) ** 2 * denom))


def reflection_objective(a, b, x):
    """``-x^H A x + 2 Re{x^H b}``."""
    return ucmo.objective(a, b, x)


def dual_function(a, b, zeta):
    """Dual objective ``b^H (A + diag zeta)^{-1} b + sum(zeta)``."""
    m = a + np.diag(zeta)
    return float(np.real(np.vdot(b, np.linalg.solve(m, b))) + np.sum(zeta))


@dataclass
class DualResult:
    """Output of :func:`solve_reflection_dual`.

    ``theta = (A + diag(zeta))^{-1} b``; ``residual`` is the largest
    deviation of ``|theta_n|`` from one.
    """

    theta: np.ndarray
    zeta: np.ndarray
    sweeps: int
    residual: float


def _dual_state(a, b, zeta):
    """``(theta, value)`` at ``zeta``, or ``None`` outside the PD cone."""
    m = a + np.diag(zeta)
    try:
        low = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return None
    y = np.linalg.solve(low, b)
    theta = np.linalg.solve(low.conj().T, y)
    return theta, float(np.real(np.vdot(y, y))) + float(np.sum(zeta))


def _newton_step(a, b, zeta, theta, value):
    """Damped Newton step on the dual; ``None`` when it makes no progress."""
    d = np.linalg.inv(a + np.diag(zeta))
    grad = 1.0 - np.abs(theta) ** 2
    hess = 2.0 * np.real(np.conj(theta)[:, None] * d * theta[None, :])
    try:
        step = np.linalg.solve(hess, -grad)
    except np.linalg.LinAlgError:
        return None
    slope = float(grad @ step)
    if not slope < 0:
        return None
    t = 1.0
    while t > 1e-10:
        trial = zeta + t * step
        state = _dual_state(a, b, trial)
        if state is not None and state[1] <= value + 1e-4 * t * slope:
            return trial, state[0], state[1]
        t *= 0.5
    return None


def _coordinate_sweep(a, b, zeta):
    """One pass of exact coordinate minimisation of the dual."""
    d = np.linalg.inv(a + np.diag(zeta))
    d = 0.5 * (d + d.conj().T)
    theta = d @ b
    for i in range(b.size):
        mag = abs(theta[i])
        dii = d[i, i].real
        if mag == 0.0 or dii <= 0.0:
            continue
        delta = (mag - 1.0) / dii
        col = d[:, i].copy()
        factor = delta / mag           # 1 + delta * dii == mag
        d -= (factor * col)[:, None] * col.conj()
        theta -= factor * col * theta[i]
        zeta[i] += delta
    return zeta


def solve_reflection_dual(a, b, tol=1e-10, max_sweeps=500, stall_sweeps=3, zeta0=None):
    """Unit-modulus maximiser of ``-x^H A x + 2 Re{x^H b}`` via its dual.

    The dual function ``b^H (A + diag zeta)^{-1} b + sum(zeta)`` is convex
    on the cone where ``A + diag(zeta)`` is positive definite, and its
    stationary points are exactly the ``zeta`` for which every entry of
    ``theta = (A + diag zeta)^{-1} b`` has unit modulus.  Each iteration
    takes a damped Newton step (gradient ``1 - |theta|^2``, Hessian
    ``2 Re{conj(theta) theta^T * D}`` with ``D`` the inverse) with
    backtracking that stays inside the cone.  When the Newton step cannot
    lower the dual value it is replaced by a sweep of exact coordinate
    minimisations: changing ``zeta_n`` by ``delta`` scales ``theta_n`` by
    ``1 / (1 + delta D_nn)``, so ``delta = (|theta_n| - 1) / D_nn``.

    ``zeta`` is not forced to be non-negative.  At the fixed point
    ``f(theta)`` equals the dual value, which bounds ``f`` at every
    unit-modulus point, so the result is a global maximiser.

    When a duality gap exists the dual infimum sits on the boundary of the
    cone and no fixed point exists.  This shows up as a dual value whose
    decrease over ``stall_sweeps`` iterations is negligible, either in
    absolute terms or next to the gap between it and the best projected
    primal value; the iteration then stops early.

    ``zeta0`` warm-starts the iteration (ignored unless ``A + diag(zeta0)``
    is positive definite); by default ``zeta = |b|``.

    Raises
    ------
    ConvergenceError
        If some ``|theta_n|`` still differs from 1 by more than ``tol``
        after ``max_sweeps`` iterations or once the dual value stalls.  The
        error carries the best entrywise-normalised iterate seen (highest
        primal objective) as ``last_iterate``, the current dual value as
        ``bound`` and the dual variables as ``zeta``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    n = b.size
    if a.shape != (n, n):
        raise InputDomainError("A and b dimensions disagree")
    bmax = float(np.max(np.abs(b))) if n else 0.0
    if bmax == 0.0:
        raise InputDomainError("b must be nonzero")
    zeta = np.maximum(np.abs(b), 1e-9 * bmax)
    state = None
    if zeta0 is not None:
        zeta0 = np.asarray(zeta0, dtype=float)
        if zeta0.shape == zeta.shape:
            state = _dual_state(a, b, zeta0)
            if state is not None:
                zeta = zeta0.copy()
    if state is None:
        state = _dual_state(a, b, zeta)
        if state is None:
            raise InputDomainError("A must be Hermitian positive semidefinite")
    theta, value = state
    residual = np.inf
    history = []
    best, best_f = None, -np.inf
    sweep = 0
    for sweep in range(1, max_sweeps + 1):
        stepped = _newton_step(a, b, zeta, theta, value)
        if stepped is not None:
            zeta, theta, value = stepped
        else:
            zeta = _coordinate_sweep(a, b, zeta)
            state = _dual_state(a, b, zeta)
            if state is None:
                break
            theta, value = state
        residual = float(np.max(np.abs(np.abs(theta) - 1.0)))
        if residual <= tol:
            return DualResult(theta, zeta, sweep, residual)
        mags = np.abs(theta)
        proj = theta / np.where(mags > 0, mags, 1.0)
        proj[mags == 0] = 1.0
        f_proj = ucmo.objective(a, b, proj)
        if f_proj > best_f:
            best, best_f = proj, f_proj
        history.append(value)
        if len(history) > stall_sweeps:
            old = history[-1 - stall_sweeps]
            gap = value - best_f
            if old - value <= max(1e-12 * max(1.0, abs(old)), 1e-3 * gap):
                break
    err = ConvergenceError(
        f"dual fixed point not reached after {sweep} iterations (residual {residual:.3g})",
        last_iterate=best, residual=residual)
    err.bound = history[-1] if history else np.inf
    err.zeta = zeta
    raise err


def _is_pd(m):
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return False
    return True


@dataclass
class AoState:
    """Iterate of the alternating optimisation.

    ``theta`` is the stacked unit-modulus reflection vector (length
    ``I * N``); ``objective_trace`` holds the weighted sum-rate before the
    first and after every outer iteration.
    """

    w: np.ndarray
    theta: np.ndarray
    alpha: np.ndarray = None
    beta: np.ndarray = None
    rho: np.ndarray = None
    objective_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    fallbacks: int = 0

    @property
    def objective(self):
        return self.objective_trace[-1] if self.objective_trace else None


def initial_state(problem, theta=None):
    """Matched-filter precoder with equal power split and the given phases.

    ``theta`` defaults to all-zero phases.
    """
    if theta is None:
        theta = np.ones(problem.n_reflect, dtype=complex)
    theta = _stacked(problem, theta)
    h = problem.effective(theta)
    norms = np.linalg.norm(h, axis=0)
    scale = np.where(norms > 0, math.sqrt(problem.p_max / problem.n_users)
                     / np.where(norms > 0, norms, 1.0), 0.0)
    return AoState(w=h * scale, theta=theta)


def zf_precoder(problem, patterns):
    """Zero-forcing precoder scaled to the power budget."""
    h = problem.effective(_stacked(problem, patterns))
    w = np.linalg.pinv(h.conj().T)
    total = np.sum(np.abs(w) ** 2)
    if total == 0:
        return w
    return w * math.sqrt(problem.p_max / total)


@dataclass
class ReflectionSolve:
    """Result of :func:`solve_reflection`.

    ``certified`` is true when the dual fixed point was reached, in which
    case ``bound`` equals ``objective`` and the point is a global maximiser.
    Otherwise ``bound`` is the best dual upper bound found (``inf`` for
    UCMO) and ``fallback`` records that the point came from polishing.
    """

    point: np.ndarray
    objective: float
    certified: bool = False
    bound: float = np.inf
    fallback: bool = False
    zeta: np.ndarray = None


def solve_reflection(a, b, method="dual", init=None, ucmo_cfg=None, zeta0=None):
    """Unit-modulus maximiser of ``-x^H A x + 2 Re{x^H b}``.

    ``method="dual"`` runs :func:`solve_reflection_dual`; if its fixed
    point does not exist (duality gap) manifold ascent is run from both
    the best projected iterate and ``init`` and the better end point kept.
    ``method="ucmo"`` runs manifold ascent from ``init`` (default: the
    phases of ``b``).  The result never scores below ``init``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if init is None:
        init = np.exp(1j * np.angle(b))
    init = np.asarray(init, dtype=complex)
    ucmo_cfg = ucmo_cfg or ucmo.UcmoConfig(max_iters=5000)
    f_init = ucmo.objective(a, b, init)
    if not np.any(b):
        # f = -x^H A x: no ascent direction is certified without b; polish only
        res = ucmo.run_ucmo(a, b, init, ucmo_cfg, raise_on_cap=False)
        return ReflectionSolve(res.point, res.objective, fallback=method == "dual")
    if method == "dual":
        try:
            res = solve_reflection_dual(a, b, zeta0=zeta0)
        except ConvergenceError as err:
            # ascend from both the dual rounding and the incumbent
            starts = [init] if err.last_iterate is None else [err.last_iterate, init]
            pol = max((ucmo.run_ucmo(a, b, x, ucmo_cfg, raise_on_cap=False) for x in starts),
                      key=lambda r: r.objective)
            out = ReflectionSolve(pol.point, pol.objective, False, err.bound, True, err.zeta)
        else:
            point = res.theta / np.abs(res.theta)
            f = ucmo.objective(a, b, point)
            out = ReflectionSolve(point, f, True, f, False, res.zeta)
    elif method == "ucmo":
        pol = ucmo.run_ucmo(a, b, init, ucmo_cfg, raise_on_cap=False)
        out = ReflectionSolve(pol.point, pol.objective)
    else:
        raise InputDomainError(f"unknown reflection solver {method!r}")
    if out.objective < f_init:
        out.point, out.objective, out.fallback = init, f_init, True
    return out


def run_ao(problem, init=None, solver="dual", tol=1e-6, max_iters=200, ucmo_cfg=None):
    """Alternate SINR auxiliaries, precoder and reflection updates.

    Parameters
    ----------
    problem : SlotProblem
    init : AoState, optional
        Feasible start; defaults to :func:`initial_state`.
    solver : {"dual", "ucmo", None}
        Reflection solver; ``None`` freezes the reflection pattern and
        optimises the precoder only.
    tol : float
        Stop when the relative change of the weighted sum-rate drops below
        ``tol``.
    """
    state = init if init is not None else initial_state(problem)
    w = np.array(state.w, dtype=complex)
    theta = np.array(state.theta, dtype=complex)
    if theta.shape != (problem.n_reflect,):
        raise InputDomainError("initial reflection vector has the wrong length")
    if np.sum(np.abs(w) ** 2) > problem.p_max * (1 + 1e-9):
        raise InputDomainError("initial precoder exceeds the power budget")
    if theta.size and not ucmo.on_manifold(theta, 1e-8):
        raise InputDomainError("initial reflection vector is not unit-modulus")
    # inner solves only need ascent; a relative tolerance keeps AO cheap
    # whatever the scale of the reflection objective
    ucmo_cfg = ucmo_cfg or ucmo.UcmoConfig(tol=1e-10, max_iters=1000, relative=True)
    optimise_theta = solver is not None and problem.n_reflect > 0

    f = weighted_sum_rate(problem, w, theta)
    trace = [f]
    alpha = beta = rho = None
    fallbacks = 0
    zeta = None
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        alpha = update_alpha(sinr(problem, w, theta))
        beta = update_beta(problem, w, theta, alpha)
        w = update_precoder(problem, theta, alpha, beta)
        if optimise_theta:
            rho = update_rho(problem, w, theta, alpha)
            a, b = assemble_reflection_quadratic(problem, w, alpha, rho)
            current = _augmented(problem, theta)
            res = solve_reflection(a, b, solver, current, ucmo_cfg, zeta)
            cand, zeta = res.point, res.zeta
            fallbacks += res.fallback
            if problem.direct is not None:
                cand = cand[:-1] * np.conj(cand[-1])
            theta = cand / np.abs(cand)
        f_new = weighted_sum_rate(problem, w, theta)
        trace.append(f_new)
        if abs(f_new - f) <= tol * max(1.0, abs(f)):
            converged = True
            break
        f = f_new
    return AoState(w=w, theta=theta, alpha=alpha, beta=beta, rho=rho,
                   objective_trace=trace, iterations=it, converged=converged,
                   fallbacks=fallbacks)
