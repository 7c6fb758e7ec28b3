"""Riemannian gradient ascent on the product of unit circles.

Solves ``max -x^H A x + 2 Re{x^H b}`` subject to ``|x_n| = 1`` for a
Hermitian PSD ``A``.  Writing the problem as a maximisation (rather than
minimising the same expression) fixes the step direction: each iteration
moves along the projected Euclidean gradient ``-2Ax + 2b`` and normalises
every entry back onto its circle.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DegenerateStepError, InputDomainError

__all__ = [
    "UcmoConfig", "UcmoResult", "objective", "euclidean_gradient",
    "project_to_tangent", "retract", "largest_eigenvalue", "run_ucmo",
    "on_manifold",
]


def on_manifold(x, tol=1e-10):
    return bool(np.all(np.abs(np.abs(x) - 1.0) <= tol))


def objective(a, b, x):
    return float(-np.real(np.vdot(x, a @ x)) + 2.0 * np.real(np.vdot(x, b)))


def euclidean_gradient(a, b, x):
    """Gradient ``-2Ax + 2b``; the directional derivative along ``d`` is ``Re{grad^H d}``."""
    return -2.0 * (a @ x) + 2.0 * b


def project_to_tangent(x, v):
    """Remove the radial component of ``v`` at every entry of ``x``."""
    return v - np.real(np.conj(v) * x) * x


def retract(x, step):
    """Entrywise normalisation of ``x + step`` back onto the unit circles."""
    y = x + step
    mag = np.abs(y)
    if np.any(mag < 1e-14):
        raise DegenerateStepError("retraction hit a zero-magnitude entry")
    return y / mag


def largest_eigenvalue(a, iters=50, tol=1e-8, rng=None):
    """Power-iteration estimate of the largest eigenvalue of a Hermitian PSD matrix."""
    n = a.shape[0]
    # deterministic start unless the caller supplies a stream
    v = np.ones(n, dtype=complex) if rng is None else rng.standard_normal(n) + 0j
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = a @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        new = float(np.real(np.vdot(v, w)))
        v = w / norm
        if abs(new - lam) <= tol * max(abs(new), 1e-300):
            lam = new
            break
        lam = new
    # both the Rayleigh quotient and ||A v|| bound lambda_max from below; keep the tighter
    return max(lam, float(np.linalg.norm(a @ v)))


@dataclass
class UcmoConfig:
    """Step size (``None`` picks ``0.9 / lambda_max(A)``), tolerance on the
    objective change, and an iteration cap.

    With ``relative`` the stopping test is ``|df| < tol * max(1, |f|)``
    instead of ``|df| < tol``.
    """

    step_size: float = None
    tol: float = 1e-10
    max_iters: int = 20000
    relative: bool = False

    def __post_init__(self):
        if self.step_size is not None and not self.step_size > 0:
            raise InputDomainError("step size must be positive")
        if self.max_iters < 1:
            raise InputDomainError("max_iters must be positive")


@dataclass
class UcmoResult:
    point: np.ndarray
    objective: float
    iterations: int
    step_size: float
    objective_trace: list = field(default_factory=list)
    op_count: int = 0
    halvings: int = 0


def _default_step(a, b):
    lam = largest_eigenvalue(a)
    if lam > 1e-12 * max(1.0, float(np.max(np.abs(b)))):
        return 0.9 / lam
    # A = 0 admits any step; scale by b so the angle updates contract
    return 0.9 / max(2.0 * float(np.max(np.abs(b))), 1e-300)


def run_ucmo(a, b, init, cfg=None, raise_on_cap=True):
    """Maximise ``-x^H A x + 2 Re{x^H b}`` over unit-modulus ``x`` from ``init``.

    A step that would lower the objective is retried at half the step size
    (and the smaller size is kept), so the returned trace never decreases.
    ``op_count`` tallies complex multiply-adds: ``N^2`` per matrix-vector
    product and ``N`` per elementwise pass.

    Raises
    ------
    ConvergenceError
        When ``max_iters`` passes without the change falling below ``tol``
        (unless ``raise_on_cap`` is false, in which case the last iterate is
        returned).
    """
    cfg = cfg or UcmoConfig()
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    x = np.asarray(init, dtype=complex)
    n = b.size
    if a.shape != (n, n) or x.shape != (n,):
        raise InputDomainError("dimension mismatch between A, b and the initial point")
    if not on_manifold(x, 1e-8):
        raise InputDomainError("initial point is not unit-modulus")
    x = x / np.abs(x)
    step = cfg.step_size if cfg.step_size is not None else _default_step(a, b)

    ops = 0
    halvings = 0
    ax = a @ x
    ops += n * n
    f = float(-np.real(np.vdot(x, ax)) + 2.0 * np.real(np.vdot(x, b)))
    trace = [f]
    change = np.inf
    for it in range(1, cfg.max_iters + 1):
        grad = -2.0 * ax + 2.0 * b
        rgrad = project_to_tangent(x, grad)
        ops += 4 * n
        while True:
            x_new = retract(x, step * rgrad)
            ax_new = a @ x_new
            ops += n * n + 2 * n
            f_new = float(-np.real(np.vdot(x_new, ax_new)) + 2.0 * np.real(np.vdot(x_new, b)))
            if f_new >= f:
                break
            if f - f_new <= 1e-13 * max(1.0, abs(f)) or halvings >= 60:
                # no representable ascent left: stationary to rounding
                return UcmoResult(x, f, it, step, trace, ops, halvings)
            step *= 0.5
            halvings += 1
        change = f_new - f
        x, ax, f = x_new, ax_new, f_new
        trace.append(f)
        if change < (cfg.tol * max(1.0, abs(f)) if cfg.relative else cfg.tol):
            return UcmoResult(x, f, it, step, trace, ops, halvings)
    if raise_on_cap:
        raise ConvergenceError(
            f"UCMO did not converge in {cfg.max_iters} iterations",
            last_iterate=x, residual=abs(change))
    return UcmoResult(x, f, cfg.max_iters, step, trace, ops, halvings)
