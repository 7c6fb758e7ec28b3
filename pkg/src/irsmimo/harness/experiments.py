"""Seeded experiment runners for the four figure families.

Each trial draws from ``stream(seed, experiment, trial, purpose)``; the
sweep index is deliberately left out of the key so that every sweep point
sees the same user drop and fading draws (paired trials).  Trials may run
on a thread pool but results are always gathered in (sweep index, trial
index) order, so the output does not depend on the thread count.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..channel import jakes_correlation
from ..reflection import dof_spectrum, quantize, ReflectionPattern
from ..rng import stream
from ..slot_opt import initial_state, run_ao, weighted_sum_rate, zf_precoder
from ..two_timescale import (PsoParams, aasr_per_sample, generate_samples,
                             run_rspso, AasrDiagnostics, SCHEMES)
from .. import __version__
from .config import config_hash
from .output import ExperimentResult
from . import scenario

__all__ = ["run_sumrate_vs_elements", "run_rank_analysis", "run_aasr_vs_rho",
           "run_ao_trace", "EXPERIMENTS", "rho_grid"]

_SUMRATE, _RANK, _AASR, _TRACE = 1, 2, 3, 4


def _map(fn, tasks, threads):
    if threads <= 1:
        return [fn(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: fn(*t), tasks))


def _metadata(cfg, name):
    return {"seed": cfg.seed, "config_hash": config_hash(cfg), "experiment": name,
            "trials": cfg.trials, "version": __version__}


def _sumrate_trial(cfg, n, trial):
    """All schemes on one paired channel draw with ``n`` elements per unit."""
    problem = scenario.slot_problem(cfg, stream(cfg.seed, _SUMRATE, trial, 0), n_elements=n)
    tol, iters = cfg.ao.tol, cfg.ao.max_iters
    out = {}
    dual = run_ao(problem, solver="dual", tol=tol, max_iters=iters)
    out["ao-dual"] = dual.objective
    out["ao-ucmo"] = run_ao(problem, solver="ucmo", tol=tol, max_iters=iters).objective
    if problem.direct is not None:
        bare = problem.without_irs()
        out["no-irs"] = run_ao(bare, solver=None, tol=tol, max_iters=iters).objective
    rng = stream(cfg.seed, _SUMRATE, trial, 1)
    theta_rand = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, problem.n_reflect))
    out["random-zf"] = weighted_sum_rate(problem, zf_precoder(problem, theta_rand), theta_rand)
    for bits in cfg.sumrate.phase_bits:
        q = quantize(ReflectionPattern.from_vector(dual.theta), bits).vector
        st = run_ao(problem, init=initial_state(problem, q), solver=None, tol=tol, max_iters=iters)
        out[f"{bits}-bit"] = st.objective
    out["fallbacks"] = dual.fallbacks
    return out


def run_sumrate_vs_elements(cfg, threads=1):
    """Weighted sum-rate against the number of elements per IRS unit."""
    elements = list(cfg.sumrate.elements)
    tasks = [(cfg, n, t) for n in elements for t in range(cfg.trials)]
    results = _map(_sumrate_trial, tasks, threads)
    res = ExperimentResult("sumrate", "elements", metadata=_metadata(cfg, "sumrate"))
    schemes = [s for s in results[0] if s != "fallbacks"]
    fallbacks = []
    for i, n in enumerate(elements):
        block = results[i * cfg.trials:(i + 1) * cfg.trials]
        for s in schemes:
            res.add(n, s, [r[s] for r in block])
        fallbacks.append(int(sum(r["fallbacks"] for r in block)))
    res.extras["dual_fallback_steps"] = dict(zip(map(str, elements), fallbacks))
    return res


def _rank_trial(cfg, units, trial):
    links = scenario.rank_one_links(cfg, stream(cfg.seed, _RANK, trial, 0), units)
    h = sum(g @ hr for g, hr in links)         # all-zero phases
    return dof_spectrum(h)


def run_rank_analysis(cfg, threads=1):
    """Normalised eigenvalue spectra of ``H H^H`` for ``I = 1..I_max`` units."""
    units = list(range(1, cfg.rank.max_units + 1))
    tasks = [(cfg, i, t) for i in units for t in range(cfg.trials)]
    spectra = _map(_rank_trial, tasks, threads)
    res = ExperimentResult("rank", "irs_units", metadata=_metadata(cfg, "rank"))
    for j, i in enumerate(units):
        block = np.array(spectra[j * cfg.trials:(j + 1) * cfg.trials])
        for e in range(block.shape[1]):
            res.add(i, f"eig{e + 1}", block[:, e])
        res.add(i, "significant", np.sum(block > cfg.rank.threshold, axis=1))
    return res


def rho_grid(cfg):
    """Sweep values of rho; normalised Doppler values are mapped through J0."""
    if cfg.fading.normalized_doppler is not None:
        return [jakes_correlation(fd, 1.0) for fd in cfg.fading.normalized_doppler]
    return [float(r) for r in cfg.fading.rho_values]


def _aasr_trial(cfg, rho, trial):
    s_csi = scenario.statistical_csi(cfg, stream(cfg.seed, _AASR, trial, 0), rho)
    frame = scenario.frame_config(cfg)
    pso = cfg.pso
    params = PsoParams(swarm=pso.swarm, inertia=pso.inertia, c1=pso.c1, c2=pso.c2,
                       iterations=pso.iterations, batch_size=pso.batch_size)
    found = run_rspso(frame, s_csi, params, stream(cfg.seed, _AASR, trial, 1))
    fresh = generate_samples(s_csi, frame, cfg.aasr.eval_samples, stream(cfg.seed, _AASR, trial, 2))
    diag = AasrDiagnostics()
    out = {s: float(np.mean(aasr_per_sample(found.best_theta, fresh, frame, s, diag)))
           for s in SCHEMES}
    out["dropped"] = diag.dropped_streams + found.diagnostics.dropped_streams
    return out


def run_aasr_vs_rho(cfg, threads=1):
    """AASR of SVD-ZF, plain outdated SVD and the upper bound against rho."""
    rhos = rho_grid(cfg)
    tasks = [(cfg, r, t) for r in rhos for t in range(cfg.trials)]
    results = _map(_aasr_trial, tasks, threads)
    res = ExperimentResult("aasr", "rho", metadata=_metadata(cfg, "aasr"))
    dropped = []
    for i, r in enumerate(rhos):
        block = results[i * cfg.trials:(i + 1) * cfg.trials]
        for s in SCHEMES:
            res.add(r, s, [b[s] for b in block])
        dropped.append(int(sum(b["dropped"] for b in block)))
    res.extras["dropped_streams"] = dropped
    return res


def run_ao_trace(cfg, threads=1):
    """Per-iteration weighted sum-rate of AO with both reflection solvers.

    ``extras`` records the largest per-step decrease of each trace and the
    relative gap between the two final objectives.
    """
    problem = scenario.slot_problem(cfg, stream(cfg.seed, _TRACE, 0, 0))
    solvers = ("dual", "ucmo")
    states = _map(lambda s: run_ao(problem, solver=s, tol=cfg.ao.tol, max_iters=cfg.ao.max_iters),
                  [(s,) for s in solvers], threads)
    res = ExperimentResult("ao-trace", "iteration", metadata=_metadata(cfg, "ao-trace"))
    worst = {}
    for s, st in zip(solvers, states):
        for it, f in enumerate(st.objective_trace):
            res.add(it, s, [f])
        steps = np.diff(st.objective_trace)
        worst[s] = max(float(-steps.min()), 0.0) if steps.size else 0.0
    finals = [st.objective for st in states]
    gap = abs(finals[0] - finals[1]) / max(abs(finals[0]), abs(finals[1]), 1e-300)
    res.extras.update({"max_decrease": worst, "relative_gap": gap,
                       "final": dict(zip(solvers, finals)),
                       "iterations": {s: st.iterations for s, st in zip(solvers, states)},
                       "dual_fallback_steps": states[0].fallbacks})
    return res


EXPERIMENTS = {
    "sumrate": run_sumrate_vs_elements,
    "rank": run_rank_analysis,
    "aasr": run_aasr_vs_rho,
    "ao-trace": run_ao_trace,
}
