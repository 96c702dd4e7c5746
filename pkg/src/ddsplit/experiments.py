"""Convergence studies on the model problem u = exp(-pi^2 t) sin(pi x)."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .decomposition import (
    DecompositionLayout,
    LayoutError,
    OperatorVariant,
    assemble_subdomain_operators,
    build_partition,
)
from .linalg_fem import (
    Mesh1D,
    ProblemSpec,
    TriDiag,
    apply,
    assemble_mass,
    assemble_stiffness,
    interpolate,
)
from .schemes import DivergenceError, Operators, SchemeConfig, SchemeFamily, iter_scheme


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class ExactSolution:
    T: float = 2.0**-4

    def u(self, x, t):
        return np.exp(-np.pi**2 * t) * np.sin(np.pi * x)

    def problem(self) -> ProblemSpec:
        return ProblemSpec(
            k=lambda x: 1.0,
            f=lambda x, t: 0.0,
            u0=lambda x: self.u(x, 0.0),
            T=self.T,
            kappa_min=1.0,
        )


@dataclass(frozen=True)
class SchemeSpec:
    """One line of a sweep roster."""

    id: str
    family: SchemeFamily
    sigma: float

    @property
    def decomposed(self) -> bool:
        return self.family is not SchemeFamily.WEIGHTED


IMPLICIT = SchemeSpec("implicit", SchemeFamily.WEIGHTED, 1.0)
CRANK_NICOLSON = SchemeSpec("cn", SchemeFamily.WEIGHTED, 0.5)
DOUGLAS_RACHFORD = SchemeSpec("dr", SchemeFamily.FACTORIZED_MATRIX, 1.0)
PEACEMAN_RACHFORD = SchemeSpec("pr", SchemeFamily.FACTORIZED_MATRIX, 0.5)
ROSTER = (IMPLICIT, CRANK_NICOLSON, DOUGLAS_RACHFORD, PEACEMAN_RACHFORD)
SCHEMES = {s.id: s for s in ROSTER}


class SweepKind(enum.Enum):
    TAU = "tau"
    MESH = "h"
    SUBDOMAIN = "H"
    OVERLAP = "q"


@dataclass(frozen=True)
class PointParams:
    """Realised discretisation parameters at one grid point."""

    N: int
    tau: float
    H: float
    q_cells: int

    @property
    def h(self) -> float:
        return 1.0 / self.N


@dataclass(frozen=True)
class SweepSpec:
    kind: SweepKind
    gammas: tuple[int, ...]
    schemes: tuple[SchemeSpec, ...] = ROSTER
    N: int = 1024
    tau: float = 2.0**-10
    H: float = 0.5
    q_cells: int = 1
    variant: OperatorVariant = OperatorVariant.STANDARD
    exact: ExactSolution = field(default_factory=ExactSolution)

    def point(self, gamma: int) -> PointParams:
        """Grid point gamma; non-integer step and cell counts are rounded."""
        N, tau, H, qc = self.N, self.tau, self.H, self.q_cells
        if self.kind is SweepKind.TAU:
            tau = 2.0 ** (-4 - gamma / 4)
        elif self.kind is SweepKind.MESH:
            N = round(2.0 ** (gamma / 4))
        elif self.kind is SweepKind.SUBDOMAIN:
            H = 2.0 ** (-gamma / 2)
        else:
            qc = round(2.0 ** (gamma / 4 + 1) - 1)
        steps = max(1, round(self.exact.T / tau))
        return PointParams(N, self.exact.T / steps, H, qc)

    def param(self, p: PointParams) -> float:
        return {
            SweepKind.TAU: p.tau,
            SweepKind.MESH: p.h,
            SweepKind.SUBDOMAIN: p.H,
            SweepKind.OVERLAP: p.q_cells * p.h,
        }[self.kind]


def paper_sweep(kind, **overrides) -> SweepSpec:
    """The four published parameter studies."""
    kind = SweepKind(kind)
    base = {
        SweepKind.TAU: dict(gammas=range(0, 49), N=2**10, H=2.0**-1, q_cells=1),
        SweepKind.MESH: dict(gammas=range(4, 53), tau=2.0**-10, H=2.0**-1, q_cells=1),
        SweepKind.SUBDOMAIN: dict(gammas=range(0, 15), N=2**10, tau=2.0**-10, q_cells=1),
        SweepKind.OVERLAP: dict(gammas=range(4, 37), N=2**11, tau=2.0**-9, H=2.0**-1),
    }[kind]
    base.update(overrides)
    base["gammas"] = tuple(base["gammas"])
    return SweepSpec(kind=kind, **base)


OK, DIVERGED, INVALID = "ok", "diverged", "invalid"


@dataclass(frozen=True)
class SweepRow:
    gamma: int
    param: float
    scheme: str
    epsilon: float
    flag: str = OK
    reason: str = ""


@dataclass
class SweepResult:
    kind: SweepKind
    rows: list[SweepRow]
    slopes: dict[tuple[str, str], float] = field(default_factory=dict)

    def series(self, scheme: str) -> list[SweepRow]:
        return [r for r in self.rows if r.scheme == scheme]


def nodal_error_norm(B: TriDiag, e) -> float:
    """Discrete L2 norm sqrt(e^T B e)."""
    e = np.asarray(e, dtype=float)
    return float(np.sqrt(max(float(e @ apply(B, e)), 0.0)))


def error_epsilon(run, exact: ExactSolution, mesh: Mesh1D, B: TriDiag, y0=None) -> float:
    """max over time levels of ||y^n - I_h u(t^n)||, including t^0 when y0 is given."""
    run = list(run)
    if not run and y0 is None:
        raise ValueError("empty run")
    eps = 0.0
    if y0 is not None:
        eps = nodal_error_norm(B, np.asarray(y0) - interpolate(mesh, exact.u, 0.0))
    for rec in run:
        eps = max(eps, nodal_error_norm(B, rec.y - interpolate(mesh, exact.u, rec.t)))
    return eps


def build_operators(mesh: Mesh1D, spec: ProblemSpec, layout: DecompositionLayout | None,
                    variant=OperatorVariant.STANDARD) -> Operators:
    B = assemble_mass(mesh)
    A = assemble_stiffness(mesh, spec)
    if layout is None:
        return Operators(B, A, A, TriDiag.zeros(A.order))
    A1, A2 = assemble_subdomain_operators(mesh, spec, build_partition(mesh, layout), variant)
    return Operators(B, A, A1, A2)


def run_point(scheme: SchemeSpec, p: PointParams, exact: ExactSolution,
              variant=OperatorVariant.STANDARD) -> float:
    """Error epsilon of one scheme at one grid point; streams the time levels."""
    mesh = Mesh1D(p.N)
    problem = exact.problem()
    layout = None
    if scheme.decomposed:
        layout = DecompositionLayout(p.H, p.q_cells * mesh.h)
        layout.cells(mesh)
    ops = build_operators(mesh, problem, layout, variant)
    steps = round(exact.T / p.tau)
    config = SchemeConfig(scheme.family, scheme.sigma, p.tau, steps)
    y0 = interpolate(mesh, problem.u0)
    eps = nodal_error_norm(ops.B, y0 - interpolate(mesh, exact.u, 0.0))
    for rec in iter_scheme(config, ops, y0):
        eps = max(eps, nodal_error_norm(ops.B, rec.y - interpolate(mesh, exact.u, rec.t)))
    return eps


def run_sweep(spec: SweepSpec, windows: bool = True) -> SweepResult:
    rows = []
    for scheme in spec.schemes:
        for g in sorted(spec.gammas):
            p = spec.point(g)
            param = spec.param(p)
            try:
                eps = run_point(scheme, p, spec.exact, spec.variant)
                rows.append(SweepRow(g, param, scheme.id, eps))
            except LayoutError as exc:
                rows.append(SweepRow(g, param, scheme.id, math.inf, INVALID, str(exc)))
            except DivergenceError as exc:
                rows.append(SweepRow(g, param, scheme.id, math.inf, DIVERGED, str(exc)))
    result = SweepResult(spec.kind, rows)
    if windows:
        for scheme in spec.schemes:
            series = result.series(scheme.id)
            for name, window in zip(("first", "middle", "last"), thirds(len(series))):
                try:
                    result.slopes[scheme.id, name] = fit_loglog_slope(
                        [(r.param, r.epsilon) for r in series], window)
                except InsufficientDataError:
                    result.slopes[scheme.id, name] = math.nan
    return result


def thirds(n: int) -> list[range]:
    """Split indices 0..n-1 into three consecutive windows (first is largest)."""
    return [range(int(c[0]), int(c[-1]) + 1) if len(c) else range(0)
            for c in np.array_split(np.arange(n), 3)]


def fit_loglog_slope(rows: Sequence[tuple[float, float]], window: Iterable[int] | None = None) -> float:
    """Least-squares slope of log(eps) against log(param) over the window."""
    idx = range(len(rows)) if window is None else window
    pts = [rows[i] for i in idx]
    pts = [(p, e) for p, e in pts if math.isfinite(p) and math.isfinite(e) and p > 0 and e > 0]
    if len(pts) < 3:
        raise InsufficientDataError(f"need at least 3 usable rows, got {len(pts)}")
    x = np.log([p for p, _ in pts])
    y = np.log([e for _, e in pts])
    return float(np.polyfit(x, y, 1)[0])


def _fmt(v: float) -> str:
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(float(v), ".17g")


def emit_csv(result: SweepResult, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["gamma", "param", "scheme", "epsilon", "flag"])
    for r in result.rows:
        w.writerow([r.gamma, _fmt(r.param), r.scheme, _fmt(r.epsilon), r.flag])
