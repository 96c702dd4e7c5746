"""Exit criteria.  Each test records one PASS/FAIL line, printed in the
pytest terminal summary under "acceptance criteria"."""

import math
import time

import numpy as np
import pytest
from scipy.stats import spearmanr

from conftest import ACCEPTANCE
from ddsplit.decomposition import (
    DecompositionLayout,
    OperatorVariant,
    PartitionOfUnity,
    assemble_subdomain_operators,
    build_partition,
)
from ddsplit.experiments import ExactSolution, build_operators, fit_loglog_slope, paper_sweep, run_sweep, thirds
from ddsplit.linalg_fem import (
    Mesh1D,
    ProblemSpec,
    TriDiag,
    apply,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    binv_norm,
    interpolate,
    solve_tridiag,
)
from ddsplit.schemes import (
    Operators,
    SchemeConfig,
    factorized_matrix_step,
    factorized_two_stage_step,
    iter_scheme,
    run_scheme,
    weighted_step,
)

import oracles

EXACT = ExactSolution()


def record(name, ok, detail):
    ACCEPTANCE.append((name, bool(ok), detail))
    assert ok, f"{name}: {detail}"


def rel(a, b):
    nb = np.linalg.norm(b)
    return np.linalg.norm(a - b) / nb if nb else np.linalg.norm(a)


def random_case(rng, N):
    a, b, c = rng.uniform(0.5, 2.0), rng.uniform(-0.8, 0.8), rng.uniform(1.0, 10.0)
    spec = ProblemSpec(k=lambda x: a * (1 + b * np.sin(c * x)), f=lambda x, t: 0.0,
                       u0=lambda x: 0.0, T=1.0, kappa_min=a * (1 - abs(b)))
    H_inv = int(rng.choice([h for h in (1, 2, 4, 8) if N // (2 * h) >= 2 and N % (2 * h) == 0]))
    piece = N // (2 * H_inv)
    layout = DecompositionLayout(1.0 / H_inv, int(rng.integers(1, piece)) / N)
    return spec, layout


def slope(result, scheme, window=None):
    series = result.series(scheme)
    pts = [(r.param, r.epsilon) for r in series]
    if window is None:
        return fit_loglog_slope(pts)
    return fit_loglog_slope(pts, thirds(len(series))[{"first": 0, "middle": 1, "last": 2}[window]])


@pytest.fixture(scope="module")
def mesh_sweep():
    return run_sweep(paper_sweep("h"))


@pytest.fixture(scope="module")
def subdomain_sweep():
    return run_sweep(paper_sweep("H"))


@pytest.fixture(scope="module")
def overlap_sweep():
    return run_sweep(paper_sweep("q"))


# 1 ---------------------------------------------------------------------------

def test_c1_stability_estimate_every_step():
    start = time.perf_counter()
    mesh = Mesh1D(1024)
    spec = EXACT.problem()
    ops = build_operators(mesh, spec, DecompositionLayout(0.5, mesh.h))
    y0 = interpolate(mesh, spec.u0)
    grid = paper_sweep("tau")
    worst, steps, bad = 0.0, 0, 0
    for sigma in (0.5, 1.0):
        for g in grid.gammas:
            tau = grid.point(g).tau
            cfg = SchemeConfig("factorized", sigma, tau, round(EXACT.T / tau))
            for rec in iter_scheme(cfg, ops, y0):
                steps += 1
                ok = rec.stability_lhs <= rec.stability_rhs * (1 + 1e-10) + 1e-13
                bad += not ok
                worst = max(worst, rec.stability_lhs / rec.stability_rhs)
    elapsed = time.perf_counter() - start
    record("C1 stability estimate, N=1024, sigma in {1/2, 1}, full tau grid",
           bad == 0 and elapsed < 60,
           f"{steps} steps, {bad} violations, max lhs/rhs={worst:.12f}, {elapsed:.1f}s")


# 2 ---------------------------------------------------------------------------

def test_c2_two_stage_equals_matrix_form():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for i in range(20):
        N = (8, 32)[i % 2]
        spec, layout = random_case(rng, N)
        mesh = Mesh1D(N)
        ops = build_operators(mesh, spec, layout)
        sigma = float(rng.choice([0.5, 0.75, 1.0]))
        steps = int(rng.integers(1, 65))
        tau = float(rng.choice([1e-4, 1e-2, 0.5])) / steps
        y0 = rng.standard_normal(N - 1)
        a = run_scheme(SchemeConfig("factorized-two-stage", sigma, tau, steps), ops, y0)
        b = run_scheme(SchemeConfig("factorized", sigma, tau, steps), ops, y0)
        worst = max(worst, max(rel(x.y, y.y) for x, y in zip(a, b)))
    record("C2 two-stage vs matrix-form, 20 random runs at N in {8, 32}",
           worst <= 1e-10, f"max relative difference {worst:.2e}")


# 3 ---------------------------------------------------------------------------

def test_c3_operator_completeness():
    rng = np.random.default_rng(3)
    worst, sym_ok, psd_ok = 0.0, True, True
    for _ in range(30):
        N = int(rng.choice([8, 16, 32, 64, 128, 256]))
        spec, layout = random_case(rng, N)
        mesh = Mesh1D(N)
        A = assemble_stiffness(mesh, spec)
        pou = build_partition(mesh, layout)
        for variant in OperatorVariant:
            A1, A2 = assemble_subdomain_operators(mesh, spec, pou, variant)
            worst = max(worst, (A1 + A2 - A).norm_inf() / A.norm_inf())
            if variant is OperatorVariant.STANDARD:
                for Aa in (A1, A2):
                    sym_ok &= Aa.is_symmetric()
                    V = rng.standard_normal((100, N - 1))
                    psd_ok &= all(v @ apply(Aa, v) >= -1e-12 * (v @ v) for v in V)
    record("C3 A1 + A2 = A for all variants; standard A_alpha symmetric PSD",
           worst <= 1e-12 and sym_ok and psd_ok,
           f"max relative defect {worst:.2e}, symmetric={sym_ok}, psd={psd_ok}")


# 4 ---------------------------------------------------------------------------

@pytest.mark.parametrize("scheme", ["dr", "pr"])
def test_c4_factorized_large_tau_slope(tau_sweep, scheme):
    s = slope(tau_sweep, scheme, "first")
    record(f"C4 tau sweep, {scheme} slope on largest-tau third >= 1.6", s >= 1.6, f"slope {s:+.3f}")


@pytest.mark.parametrize("scheme", ["dr", "pr"])
def test_c4_factorized_small_tau_slope(tau_sweep, scheme):
    s = slope(tau_sweep, scheme, "last")
    record(f"C4 tau sweep, {scheme} slope on smallest-tau third in [0.7, 1.3]",
           0.7 <= s <= 1.3, f"slope {s:+.3f}")


def test_c4_crank_nicolson_second_order(tau_sweep):
    s = slope(tau_sweep, "cn", "first")
    record("C4 tau sweep, cn slope 2.0 +- 0.2 before the spatial floor (largest-tau third)",
           abs(s - 2.0) <= 0.2, f"slope {s:+.3f}")


def test_c4_implicit_first_order(tau_sweep):
    s = slope(tau_sweep, "implicit")
    record("C4 tau sweep, implicit slope 1.0 +- 0.2 (whole grid)", abs(s - 1.0) <= 0.2, f"slope {s:+.3f}")


# 5 ---------------------------------------------------------------------------

@pytest.mark.parametrize("scheme", ["dr", "pr"])
def test_c5_overlap_penalty(mesh_sweep, scheme):
    s = slope(mesh_sweep, scheme, "last")
    record(f"C5 mesh sweep, {scheme} slope on smallest-h third in [-1.3, -0.7]",
           -1.3 <= s <= -0.7, f"slope {s:+.3f}")


def test_c5_implicit_baseline(mesh_sweep):
    coarse = slope(mesh_sweep, "implicit", "first")
    fine = slope(mesh_sweep, "implicit", "last")
    record("C5 mesh sweep, implicit slope in [1.7, 2.3] then in [-0.2, 0.2]",
           1.7 <= coarse <= 2.3 and -0.2 <= fine <= 0.2, f"slopes {coarse:+.3f}, {fine:+.3f}")


# 6 ---------------------------------------------------------------------------

def rank_correlation(result, scheme):
    rows = [r for r in result.series(scheme) if r.flag == "ok"]
    return spearmanr([r.param for r in rows], [r.epsilon for r in rows])[0], len(rows)


@pytest.mark.parametrize("scheme", ["dr", "pr"])
def test_c6_subdomain_size_trend(subdomain_sweep, scheme):
    rho, n = rank_correlation(subdomain_sweep, scheme)
    record(f"C6 H sweep, {scheme} rank correlation of eps with H <= -0.9", rho <= -0.9,
           f"spearman {rho:+.3f} over {n} valid points")


@pytest.mark.parametrize("scheme", ["dr", "pr"])
def test_c6_overlap_width_trend(overlap_sweep, scheme):
    rho, n = rank_correlation(overlap_sweep, scheme)
    record(f"C6 q sweep, {scheme} rank correlation of eps with q <= -0.9", rho <= -0.9,
           f"spearman {rho:+.3f} over {n} valid points")


# 7 ---------------------------------------------------------------------------

def test_c7_single_domain_collapse():
    worst = 0.0
    for N in (16, 64, 256):
        mesh = Mesh1D(N)
        spec = EXACT.problem()
        A1, A2 = assemble_subdomain_operators(mesh, spec, PartitionOfUnity.single_domain(mesh))
        ops = Operators(assemble_mass(mesh), assemble_stiffness(mesh, spec), A1, A2)
        y0 = interpolate(mesh, spec.u0)
        for sigma in (0.5, 1.0):
            for steps in (1, 16, 256):
                tau = EXACT.T / steps
                ref = run_scheme(SchemeConfig("weighted", sigma, tau, steps), ops, y0)
                for family in ("factorized", "factorized-two-stage"):
                    run = run_scheme(SchemeConfig(family, sigma, tau, steps), ops, y0)
                    worst = max(worst, max(rel(a.y, b.y) for a, b in zip(run, ref)))
    record("C7 single-domain partition: factorized runs equal weighted runs",
           worst <= 1e-11, f"max relative difference {worst:.2e}")


# 8 ---------------------------------------------------------------------------

def test_c8_dense_oracles():
    rng = np.random.default_rng(8)
    errs = {}
    k = lambda x: 1.0 + x
    for N in (4, 8, 16, 32):
        mesh = Mesh1D(N)
        spec = ProblemSpec(k=k, f=lambda x, t: np.sin(np.pi * x), u0=lambda x: 0.0, T=1.0)
        B, A = assemble_mass(mesh), assemble_stiffness(mesh, spec)
        errs["mass"] = max(errs.get("mass", 0), np.abs(B.to_dense() - oracles.dense_mass(N)).max() / B.norm_inf())
        errs["stiffness"] = max(errs.get("stiffness", 0),
                                np.abs(A.to_dense() - oracles.dense_stiffness(N, k)).max() / A.norm_inf())

        n = N - 1
        M = TriDiag(rng.standard_normal(n - 1), np.abs(rng.standard_normal(n)) + 2.5, rng.standard_normal(n - 1))
        r = rng.standard_normal(n)
        errs["solve"] = max(errs.get("solve", 0), rel(solve_tridiag(M, r), np.linalg.solve(M.to_dense(), r)))
        errs["apply"] = max(errs.get("apply", 0), np.abs(apply(M, r) - oracles.dense_matvec(M.to_dense(), r)).max())
        e1 = np.eye(n)[0]
        errs["binv_norm"] = max(errs.get("binv_norm", 0), abs(
            binv_norm(B, e1) - math.sqrt(e1 @ np.linalg.inv(B.to_dense()) @ e1)) / binv_norm(B, e1))

        if N >= 8:
            layout = DecompositionLayout(0.5, max(1, N // 8) / N)
            pou = build_partition(mesh, layout)
            k1 = lambda x: 1.0
            for variant in OperatorVariant:
                A1, _ = assemble_subdomain_operators(mesh, ProblemSpec(k1, spec.f, spec.u0, 1.0), pou, variant)
                ref = oracles.dense_weighted_split(N, k1, pou.eta1, variant.value)
                errs["split operators"] = max(errs.get("split operators", 0),
                                              np.abs(A1.to_dense() - ref).max() / A1.norm_inf())
            ops = build_operators(mesh, EXACT.problem(), layout)
            y = rng.standard_normal(n)
            Bd, A1d, A2d = (X.to_dense() for X in (ops.B, ops.A1, ops.A2))
            for sigma in (0.5, 1.0):
                tau = 0.01
                w = weighted_step(ops.B, ops.A, y, np.zeros(n), sigma, tau)
                w_ref = oracles.dense_weighted_run(Bd, A1d + A2d, y, sigma, tau, 1)[1]
                f = factorized_matrix_step(ops.B, ops.A1, ops.A2, ops.A, y, np.zeros(n), sigma, tau)
                t = factorized_two_stage_step(ops.B, ops.A1, ops.A2, y, np.zeros(n), sigma, tau)
                f_ref = oracles.dense_factorized_run(Bd, A1d, A2d, y, sigma, tau, 1)[1]
                errs["weighted step"] = max(errs.get("weighted step", 0), rel(w, w_ref))
                errs["factorized steps"] = max(errs.get("factorized steps", 0), rel(f, f_ref), rel(t, f_ref))

    # the load example is itemized at N=64, just above the N <= 32 band
    N = 64
    spec = ProblemSpec(k=k, f=lambda x, t: np.sin(np.pi * x), u0=lambda x: 0.0, T=1.0)
    load = assemble_load(Mesh1D(N), spec, 0.0)
    ref = oracles.simpson_load(N, lambda x: np.sin(np.pi * x))
    errs["load"] = float(np.max(np.abs(load - ref) / np.abs(ref)))

    limits = {"mass": 1e-12, "stiffness": 1e-12, "load": 1e-6, "solve": 1e-10, "apply": 0.0,
              "binv_norm": 1e-12, "split operators": 1e-10, "weighted step": 1e-12,
              "factorized steps": 1e-11}
    failed = [key for key, lim in limits.items() if errs[key] > lim]
    record("C8 assembly and solves match dense oracles at N <= 32", not failed,
           ", ".join(f"{key}={errs[key]:.1e}" for key in limits) + (f"; failed: {failed}" if failed else ""))
