"""Fast self-checks of the structural invariants, used by ``ddsplit verify``."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .decomposition import (
    DecompositionLayout,
    OperatorVariant,
    PartitionOfUnity,
    assemble_subdomain_operators,
    build_partition,
)
from .experiments import ExactSolution, build_operators
from .linalg_fem import (
    Mesh1D,
    ProblemSpec,
    TriDiag,
    apply,
    assemble_mass,
    assemble_stiffness,
    interpolate,
    solve_tridiag,
)
from .schemes import Operators, SchemeConfig, SchemeFamily, run_scheme

CHECKS: list[tuple[str, Callable[[np.random.Generator], None]]] = []


def check(name):
    def deco(fn):
        CHECKS.append((name, fn))
        return fn
    return deco


def _random_problem(rng) -> ProblemSpec:
    a, b, c = rng.uniform(1.0, 3.0), rng.uniform(-0.9, 0.9), rng.uniform(0.5, 8.0)
    return ProblemSpec(k=lambda x: a * (1 + b * np.sin(c * x)), f=lambda x, t: 0.0,
                       u0=lambda x: np.sin(np.pi * x), T=1.0, kappa_min=a * (1 - abs(b)))


def _random_layout(rng, N):
    H_inv = int(rng.choice([h for h in (1, 2, 4) if N % (2 * h) == 0 and N // (2 * h) >= 2]))
    piece = N // (2 * H_inv)
    return DecompositionLayout(1.0 / H_inv, int(rng.integers(1, piece)) / N)


@check("mass and stiffness are symmetric positive definite")
def _spd(rng):
    for N in (2, 3, 17, 64):
        mesh = Mesh1D(N)
        for M in (assemble_mass(mesh), assemble_stiffness(mesh, _random_problem(rng))):
            assert M.is_symmetric()
            for _ in range(20):
                v = rng.standard_normal(M.order)
                assert v @ apply(M, v) > 0


@check("tridiagonal solve/apply round trip")
def _round_trip(rng):
    for n in (1, 2, 31, 200):
        off = rng.standard_normal((2, max(n - 1, 0)))
        diag = np.abs(rng.standard_normal(n)) + 2.5
        M = TriDiag(off[0], diag, off[1])
        r = rng.standard_normal(n)
        x = solve_tridiag(M, r)
        assert np.linalg.norm(apply(M, x) - r) <= 1e-10 * np.linalg.norm(r)


@check("partition of unity sums to one")
def _partition(rng):
    for N in (8, 64, 256):
        pou = build_partition(Mesh1D(N), _random_layout(rng, N))
        assert np.all(pou.eta1 + pou.eta2 == 1.0)
        assert pou.eta1.min() >= 0 and pou.eta1.max() <= 1


@check("A1 + A2 = A for every operator variant")
def _completeness(rng):
    for N in (8, 32, 128):
        mesh = Mesh1D(N)
        spec = _random_problem(rng)
        A = assemble_stiffness(mesh, spec)
        pou = build_partition(mesh, _random_layout(rng, N))
        for variant in OperatorVariant:
            A1, A2 = assemble_subdomain_operators(mesh, spec, pou, variant)
            assert (A1 + A2 - A).norm_inf() <= 1e-12 * A.norm_inf()
        t1, t2 = assemble_subdomain_operators(mesh, spec, pou, OperatorVariant.TEST_WEIGHTED)
        r1, r2 = assemble_subdomain_operators(mesh, spec, pou, OperatorVariant.TRIAL_WEIGHTED)
        assert np.array_equal(t1.T.to_dense(), r1.to_dense())
        assert np.array_equal(t2.T.to_dense(), r2.to_dense())


@check("two-stage and matrix-form factorized schemes agree")
def _equivalence(rng):
    exact = ExactSolution()
    for N in (8, 32):
        mesh = Mesh1D(N)
        ops = build_operators(mesh, _random_problem(rng), _random_layout(rng, N))
        for sigma in (0.5, 0.75, 1.0):
            y0 = rng.standard_normal(N - 1)
            runs = [run_scheme(SchemeConfig(fam, sigma, exact.T / 16, 16), ops, y0)
                    for fam in (SchemeFamily.FACTORIZED_TWO_STAGE, SchemeFamily.FACTORIZED_MATRIX)]
            for a, b in zip(*runs):
                assert np.linalg.norm(a.y - b.y) <= 1e-10 * np.linalg.norm(b.y)


@check("single-domain partition collapses to the weighted scheme")
def _collapse(rng):
    exact = ExactSolution()
    mesh = Mesh1D(32)
    spec = exact.problem()
    A1, A2 = assemble_subdomain_operators(mesh, spec, PartitionOfUnity.single_domain(mesh))
    B, A = assemble_mass(mesh), assemble_stiffness(mesh, spec)
    ops = Operators(B, A, A1, A2)
    y0 = interpolate(mesh, spec.u0)
    for sigma in (0.5, 1.0):
        w = run_scheme(SchemeConfig(SchemeFamily.WEIGHTED, sigma, exact.T / 32, 32), ops, y0)
        f = run_scheme(SchemeConfig(SchemeFamily.FACTORIZED_MATRIX, sigma, exact.T / 32, 32), ops, y0)
        for a, b in zip(w, f):
            assert np.linalg.norm(a.y - b.y) <= 1e-11 * np.linalg.norm(a.y)


@check("stability estimate holds for sigma >= 1/2")
def _stability(rng):
    exact = ExactSolution()
    mesh = Mesh1D(128)
    spec = exact.problem()
    ops = build_operators(mesh, spec, DecompositionLayout(0.5, mesh.h))
    y0 = interpolate(mesh, spec.u0)
    for sigma in (0.5, 1.0):
        for steps in (1, 4, 64, 512):
            cfg = SchemeConfig(SchemeFamily.FACTORIZED_MATRIX, sigma, exact.T / steps, steps)
            assert all(r.estimate_holds for r in run_scheme(cfg, ops, y0))


def run_checks(seed: int = 0) -> list[tuple[str, bool, str]]:
    rng = np.random.default_rng(seed)
    out = []
    for name, fn in CHECKS:
        try:
            fn(rng)
            out.append((name, True, ""))
        except Exception as exc:  # a crash is a failed check
            out.append((name, False, f"{type(exc).__name__}: {exc}"))
    return out
