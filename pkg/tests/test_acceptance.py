"""Acceptance suite: each test checks one criterion at its stated tolerance
and runtime budget and records a PASS/FAIL line for the terminal summary."""

import itertools
import os
import time

import numpy as np
import pytest
import yaml

from irsmimo.harness import cli, load_config
from irsmimo.harness import scenario
from irsmimo.harness.experiments import run_aasr_vs_rho, run_rank_analysis, run_sumrate_vs_elements
from irsmimo.reflection import array_gain, optimal_pattern
from irsmimo.rng import complex_normal, stream
from irsmimo.slot_opt import run_ao, solve_reflection
from irsmimo.two_timescale import (FrameConfig, PsoParams, StatisticalCsi, flops_f1,
                                   per_slot_rate, run_rspso, water_filling)
from irsmimo.ucmo import euclidean_gradient, objective

from helpers import crandn, report

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def _slack_ge(a_mean, a_se, b_mean, b_se):
    """``a >= b`` allowing one standard error (the larger of the two)."""
    return a_mean + max(a_se, b_se) >= b_mean


def test_criterion_01_optimal_pattern_gain():
    t0 = time.perf_counter()
    ok, details = True, []
    for n in (4, 16, 64):
        rng = stream(101, n)
        phi_i, phi_d = rng.uniform(0, 2 * np.pi, (2, n))
        g = array_gain(optimal_pattern(phi_i, phi_d), phi_i, phi_d)
        rand = rng.uniform(0, 2 * np.pi, (10_000, n))
        best = float(np.max(np.abs(np.exp(1j * (phi_i + rand - phi_d)).sum(axis=1)) ** 2))
        exact = abs(g - n * n) <= 1e-9 * n * n
        ok &= exact and g > best
        details.append(f"N={n}: gain {g:.6g} vs N^2 {n * n}, best random {best:.4g}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 1.0
    report(1, "optimal pattern reaches N^2", ok, "; ".join(details), elapsed, 1)
    assert ok


def test_criterion_02_rank_of_distributed_irs():
    cfg = load_config(os.path.join(CONFIGS, "rank.yaml"))
    assert cfg.system.bs_antennas == cfg.system.users == 4
    t0 = time.perf_counter()
    res = run_rank_analysis(cfg)
    elapsed = time.perf_counter() - t0
    spectra = {}
    for r in res.rows:
        if r.scheme.startswith("eig"):
            spectra.setdefault(int(r.value), []).append(r)
    ok, details = True, []
    for units in (1, 2, 3):
        # recompute per-trial counts from the same seeded draws
        from irsmimo.harness.experiments import _rank_trial
        counts = [int(np.sum(_rank_trial(cfg, units, t) > cfg.rank.threshold))
                  for t in range(cfg.trials)]
        ok &= min(counts) >= units
        details.append(f"I={units}: min count {min(counts)} over {cfg.trials} trials")
    ok &= elapsed < 1.0
    report(2, "significant eigenvalues >= I", ok, "; ".join(details), elapsed, 1)
    assert ok


def test_criterion_03_ao_monotone():
    cfg = load_config()
    assert (cfg.system.bs_antennas, cfg.system.elements_per_unit, cfg.system.users,
            cfg.system.irs_units) == (8, 16, 3, 2)
    t0 = time.perf_counter()
    worst = {"dual": 0.0, "ucmo": 0.0}
    for s in range(20):
        problem = scenario.slot_problem(cfg, stream(103, s))
        for solver in worst:
            trace = np.array(run_ao(problem, solver=solver).objective_trace)
            worst[solver] = max(worst[solver], float(np.max(trace[:-1] - trace[1:], initial=0.0)))
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-9 and elapsed < 120
    report(3, "AO trace non-decreasing", ok,
           f"20 scenarios, largest per-step drop dual {worst['dual']:.2e}, ucmo {worst['ucmo']:.2e}",
           elapsed, 120)
    assert ok


def test_criterion_04_cross_solver_agreement():
    t0 = time.perf_counter()
    rel, certified = [], 0
    for s in range(20):
        rng = stream(104, s)
        n = int(rng.integers(4, 33))
        rank = n if s % 2 == 0 else max(1, n // 4)
        x = complex_normal(rng, (n, rank))
        a = x @ x.conj().T / rank
        b = complex_normal(rng, n)
        dual = solve_reflection(a, b, "dual")
        manifold = solve_reflection(a, b, "ucmo")
        certified += dual.certified
        rel.append(abs(dual.objective - manifold.objective) / abs(manifold.objective))
    elapsed = time.perf_counter() - t0
    ok = max(rel) <= 0.01 and elapsed < 30
    report(4, "dual vs UCMO within 1%", ok,
           f"max relative gap {max(rel):.2e}, dual certified on {certified}/20", elapsed, 30)
    assert ok


def _simplex_grid(streams, steps):
    idx = np.array([c for c in itertools.product(range(steps + 1), repeat=streams - 1)
                    if sum(c) <= steps])
    return np.column_stack([idx, steps - idx.sum(axis=1)]) / steps


def test_criterion_05_water_filling():
    t0 = time.perf_counter()
    grid = _simplex_grid(4, 37)
    assert len(grid) >= 9_800
    worst_rel, worst_kkt, beaten = 0.0, 0.0, False
    for s in range(50):
        rng = stream(105, s)
        f = rng.uniform(0.05, 5.0, 4)
        noise, p_tot = rng.uniform(0.1, 2.0), rng.uniform(0.1, 20.0)
        p = water_filling(f, noise, p_tot)
        rate = per_slot_rate(f, p, noise)
        oracle = float(np.max(np.log2(1 + grid * p_tot / (noise * f)).sum(axis=1)))
        beaten |= oracle > rate + 1e-12
        worst_rel = max(worst_rel, abs(rate - oracle) / rate)
        a = noise * f
        active = p > 0
        level = (p + a)[active]
        kkt = max(abs(p.sum() - p_tot) / p_tot, float(np.ptp(level)) / level[0],
                  float(np.max(level[0] - a[~active], initial=0.0)) / level[0],
                  float(-np.min(p)))
        worst_kkt = max(worst_kkt, kkt)
    elapsed = time.perf_counter() - t0
    ok = worst_rel <= 1e-3 and worst_kkt <= 1e-8 and not beaten and elapsed < 10
    report(5, "water-filling vs grid oracle and KKT", ok,
           f"max relative rate gap {worst_rel:.2e}, max KKT violation {worst_kkt:.1e}",
           elapsed, 10)
    assert ok


def test_criterion_06_sumrate_trends():
    cfg = load_config(os.path.join(CONFIGS, "sumrate.yaml"))
    assert cfg.trials >= 30
    t0 = time.perf_counter()
    res = run_sumrate_vs_elements(cfg)
    elapsed = time.perf_counter() - t0
    s = {name: res.series(name) for name in ("ao-dual", "no-irs", "2-bit", "1-bit", "random-zf")}
    _, best, best_se = s["ao-dual"]
    failures = []
    if not np.all(best > s["no-irs"][1]):
        failures.append("with-IRS <= no-IRS")
    for i in range(len(best) - 1):
        if not _slack_ge(best[i + 1], best_se[i + 1], best[i], best_se[i]):
            failures.append(f"decrease at sweep point {i + 1}")
    order = ["ao-dual", "2-bit", "1-bit", "random-zf"]
    for hi, lo in zip(order, order[1:]):
        for i in range(len(best)):
            if not _slack_ge(s[hi][1][i], s[hi][2][i], s[lo][1][i], s[lo][2][i]):
                failures.append(f"{hi} < {lo} at N={int(s[hi][0][i])}")
    ok = not failures and elapsed < 600
    means = ", ".join(f"N={int(n)}: {m:.2f}" for n, m in zip(s["ao-dual"][0], best))
    report(6, "sum-rate trends", ok,
           (f"AO means {means}; " + ("all orderings hold" if not failures else "; ".join(failures))),
           elapsed, 600)
    assert ok


def test_criterion_07_aasr_trends():
    cfg = load_config(os.path.join(CONFIGS, "aasr.yaml"))
    assert cfg.trials >= 30
    assert [round(r, 10) for r in cfg.fading.rho_values] == [round(0.1 * i, 10) for i in range(11)]
    t0 = time.perf_counter()
    res = run_aasr_vs_rho(cfg)
    elapsed = time.perf_counter() - t0
    rho, zf, zf_se = res.series("svd-zf")
    _, svd, _ = res.series("svd")
    _, ub, _ = res.series("upper-bound")
    failures = []
    for i in range(len(rho) - 1):
        if not _slack_ge(zf[i + 1], zf_se[i + 1], zf[i], zf_se[i]):
            failures.append(f"SVD-ZF decreases at rho={rho[i + 1]:g}")
    for i in np.nonzero(rho <= 0.3 + 1e-12)[0]:
        if not zf[i] >= svd[i]:
            failures.append(f"SVD-ZF < SVD at rho={rho[i]:g}")
    gap = abs(svd[-1] - ub[-1]) / ub[-1]
    if not (rho[-1] == 1.0 and gap <= 0.01):
        failures.append(f"SVD vs bound gap {gap:.2e} at rho=1")
    ok = not failures and elapsed < 600
    report(7, "AASR trends", ok,
           f"SVD-ZF {zf[0]:.2f} -> {zf[-1]:.2f}, SVD at rho=0 {svd[0]:.2f}, gap at rho=1 {gap:.1e}; "
           + ("all trends hold" if not failures else "; ".join(failures)), elapsed, 600)
    assert ok


def test_criterion_08_rspso_complexity():
    t0 = time.perf_counter()
    rng = stream(108, 0)
    nt, k, n, m = 4, 2, 8, 2
    csi = StatisticalCsi(crandn(rng, nt, n), np.ones((nt, k)), np.ones((n, k)), 1.0, 1.0, 0.5, 0.8)
    params = PsoParams(swarm=6, iterations=5, batch_size=4)
    frame = FrameConfig(slots=5, delay=1, streams=m)
    mini = run_rspso(frame, csi, params, stream(108, 1)).counter
    full = run_rspso(frame, csi, params, stream(108, 1), full_batch=True).counter
    per_particle_mini = [s / params.swarm for s in mini.samples[1:]]
    per_particle_full = [s / params.swarm for s in full.samples[1:]]
    f1 = flops_f1(nt, k, n, m)
    ok = (all(v == params.batch_size for v in per_particle_mini)
          and all(v == params.total_samples for v in per_particle_full)
          and all(fl == s * f1 for fl, s in zip(mini.flops, mini.samples))
          and full.samples[1] == params.batches * mini.samples[1]
          and f1 == 1670)
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 1.0
    report(8, "rsPSO sample and FLOP accounting", ok,
           f"samples/particle/iteration {per_particle_mini[0]:g} (B_s) vs {per_particle_full[0]:g} (B), "
           f"factor {per_particle_full[0] / per_particle_mini[0]:g} = N_B, F1 = {f1}", elapsed, 1)
    assert ok


def test_criterion_09_gradient_check():
    t0 = time.perf_counter()
    worst = 0.0
    for s in range(20):
        rng = stream(109, s)
        n = int(rng.integers(2, 33))
        x = crandn(rng, n, n)
        a, b = x @ x.conj().T / n, crandn(rng, n)
        theta = np.exp(1j * rng.uniform(0, 2 * np.pi, n))
        d = crandn(rng, n)
        h = 1e-6
        fd = (objective(a, b, theta + h * d) - objective(a, b, theta - h * d)) / (2 * h)
        an = float(np.real(np.vdot(d, euclidean_gradient(a, b, theta))))
        worst = max(worst, abs(fd - an) / abs(an))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-5 and elapsed < 5
    report(9, "Euclidean gradient vs central differences", ok,
           f"max relative error {worst:.2e} over 20 instances", elapsed, 5)
    assert ok


SMALL_CONFIGS = {
    "sumrate": {"trials": 3, "system": {"bs_antennas": 4, "users": 2, "irs_units": 1, "streams": 1},
                "sumrate": {"elements": [4, 8]}, "ao": {"max_iters": 20}},
    "rank": {"trials": 6, "system": {"bs_antennas": 4, "users": 4}},
    "aasr": {"trials": 2, "system": {"bs_antennas": 4, "users": 4, "streams": 2},
             "fading": {"rho_values": [0.0, 0.5, 1.0]},
             "pso": {"swarm": 4, "iterations": 4, "batch_size": 2},
             "aasr": {"elements": 4, "eval_samples": 4}},
    "ao-trace": {"system": {"bs_antennas": 4, "users": 3, "irs_units": 1, "elements_per_unit": 8},
                 "ao": {"max_iters": 30}},
}


def test_criterion_10_determinism(tmp_path):
    t0 = time.perf_counter()
    ok, details = True, []
    for command, data in SMALL_CONFIGS.items():
        path = tmp_path / f"{command}.yaml"
        path.write_text(yaml.safe_dump(data))
        blobs = []
        for run, threads in enumerate((1, 1, 8)):
            out = tmp_path / f"{command}-{run}"
            code = cli.main([command, "--config", str(path), "--seed", "77",
                             "--threads", str(threads), "--out", str(out)])
            ok &= code == 0
            name = "ao-trace" if command == "ao-trace" else command
            blobs.append((out / f"{name}.csv").read_bytes())
        same = blobs[0] == blobs[1] == blobs[2]
        ok &= same
        details.append(f"{command}: {'identical' if same else 'DIFFERENT'}")
    elapsed = time.perf_counter() - t0
    report(10, "byte-identical CSVs at 1 and 8 threads", ok, "; ".join(details), elapsed)
    assert ok
