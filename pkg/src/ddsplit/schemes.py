"""Time stepping: the weighted (theta) scheme and the factorized two-operator
splitting in two-stage and in matrix form, with the per-step stability
monitor for the factorized scheme.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .linalg_fem import TriDiag, apply, binv_norm, solve_tridiag

log = logging.getLogger(__name__)

SPLIT_TOL = 1e-10


class DivergenceError(ArithmeticError):
    def __init__(self, step: int):
        super().__init__(f"non-finite solution at time step {step}")
        self.step = step


class SchemeFamily(enum.Enum):
    WEIGHTED = "weighted"
    FACTORIZED_TWO_STAGE = "factorized-two-stage"
    FACTORIZED_MATRIX = "factorized"


@dataclass(frozen=True)
class SchemeConfig:
    family: SchemeFamily
    sigma: float
    tau: float
    steps: int

    def __post_init__(self):
        object.__setattr__(self, "family", SchemeFamily(self.family))
        if not self.tau > 0:
            raise ValueError(f"time step must be positive, got tau={self.tau!r}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"need at least one time step, got {self.steps!r}")
        if not 0 <= self.sigma <= 1:
            raise ValueError(f"sigma must lie in [0, 1], got {self.sigma!r}")
        if self.factorized and not self.unconditionally_stable:
            log.warning("factorized scheme with sigma=%g < 1/2: no stability guarantee",
                        self.sigma)

    @classmethod
    def for_horizon(cls, family, sigma: float, T: float, tau: float) -> "SchemeConfig":
        """Round T/tau to a whole number of steps and rescale tau to hit T exactly."""
        steps = max(1, round(T / tau))
        return cls(family, sigma, T / steps, steps)

    @property
    def factorized(self) -> bool:
        return self.family is not SchemeFamily.WEIGHTED

    @property
    def unconditionally_stable(self) -> bool:
        return self.sigma >= 0.5

    @property
    def T(self) -> float:
        return self.tau * self.steps

    def source_time(self, n: int) -> float:
        """sigma*t^{n+1} + (1 - sigma)*t^n."""
        return (n + self.sigma) * self.tau


@dataclass(frozen=True)
class Operators:
    """Mass matrix, stiffness matrix and its two-way split A = A1 + A2."""

    B: TriDiag
    A: TriDiag
    A1: TriDiag
    A2: TriDiag

    def split_defect(self) -> float:
        """||A1 + A2 - A||_inf relative to ||A||_inf."""
        return (self.A1 + self.A2 - self.A).norm_inf() / max(self.A.norm_inf(), 1e-300)


@dataclass(frozen=True)
class StepRecord:
    n: int
    t: float
    y: np.ndarray
    stability_lhs: float
    stability_rhs: float

    @property
    def estimate_holds(self) -> bool:
        return self.stability_lhs <= self.stability_rhs * (1 + SPLIT_TOL) + 1e-13


def weighted_step(B: TriDiag, A: TriDiag, y, phi, sigma: float, tau: float) -> np.ndarray:
    """(B + sigma tau A) y' = (B - (1 - sigma) tau A) y + tau phi."""
    rhs = apply(B, y) + tau * np.asarray(phi, dtype=float)
    if sigma != 1:
        rhs -= (1 - sigma) * tau * apply(A, y)
    lhs = B if sigma == 0 else B + (sigma * tau) * A
    return solve_tridiag(lhs, rhs)


def factorized_matrix_step(B: TriDiag, A1: TriDiag, A2: TriDiag, A: TriDiag, y, phi,
                           sigma: float, tau: float, check: bool = True) -> np.ndarray:
    """One step of (B + s A1) B^{-1} (B + s A2) (y' - y)/tau + A y = phi, s = sigma*tau."""
    if check:
        defect = (A1 + A2 - A).norm_inf()
        if defect > SPLIT_TOL * A.norm_inf():
            raise ValueError(f"A1 + A2 differs from A by {defect:.3e} in the max-row norm")
    s = sigma * tau
    r = np.asarray(phi, dtype=float) - apply(A, y)
    w = solve_tridiag(B + s * A1, tau * r)
    d = solve_tridiag(B + s * A2, apply(B, w))
    return np.asarray(y, dtype=float) + d


def factorized_two_stage_step(B: TriDiag, A1: TriDiag, A2: TriDiag, y, phi,
                              sigma: float, tau: float) -> np.ndarray:
    """Intermediate half step on A1, then the full step on A2."""
    y = np.asarray(y, dtype=float)
    phi = np.asarray(phi, dtype=float)
    s = sigma * tau
    By = apply(B, y)
    A1y = apply(A1, y)
    A2y = apply(A2, y)
    half = solve_tridiag(B + s * A1, By - (1 - sigma) * tau * A1y - tau * A2y + tau * phi)
    rhs = By - tau * (sigma * apply(A1, half) + (1 - sigma) * A1y) \
        - (1 - sigma) * tau * A2y + tau * phi
    return solve_tridiag(B + s * A2, rhs)


def check_stability_estimate(B: TriDiag, A2: TriDiag, y_next, y_prev, phi,
                             sigma: float, tau: float) -> tuple[float, float]:
    """Both sides of ||C y'||_{B^-1} <= ||C y||_{B^-1} + tau ||phi||_{B^-1}, C = B + sigma tau A2."""
    C = B + (sigma * tau) * A2
    lhs = binv_norm(B, apply(C, y_next))
    rhs = binv_norm(B, apply(C, y_prev)) + tau * binv_norm(B, phi)
    return lhs, rhs


def _zero_source(n):
    return lambda t: np.zeros(n)


def iter_scheme(config: SchemeConfig, ops: Operators, y0,
                source: Callable[[float], np.ndarray] | None = None) -> Iterator[StepRecord]:
    """Yield one StepRecord per time level t^1 .. t^M.

    ``source(t)`` returns the assembled load at time t.  For the weighted
    family the monitor uses the trivial split A2 = 0, under which the
    weighted and factorized schemes coincide.
    """
    n_dof = ops.B.order
    y = np.array(y0, dtype=float)
    if y.shape != (n_dof,):
        raise ValueError(f"initial vector of shape {y.shape}, expected ({n_dof},)")
    if source is None:
        source = _zero_source(n_dof)
    sigma, tau = config.sigma, config.tau
    fam = config.family
    if config.factorized:
        defect = ops.split_defect()
        if defect > SPLIT_TOL:
            raise ValueError(f"A1 + A2 != A (relative defect {defect:.3e})")
    B = ops.B
    s = sigma * tau
    A2_mon = ops.A2 if config.factorized else TriDiag.zeros(n_dof)
    C = B + s * A2_mon
    # factor matrices are constant over the run
    if fam is SchemeFamily.WEIGHTED:
        L = B if sigma == 0 else B + s * ops.A
    else:
        L1, L2 = B + s * ops.A1, B + s * ops.A2

    norm_prev = binv_norm(B, apply(C, y))
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(config.steps):
            phi = np.asarray(source(config.source_time(n)), dtype=float)
            if fam is SchemeFamily.WEIGHTED:
                rhs = apply(B, y) + tau * phi
                if sigma != 1:
                    rhs -= (1 - sigma) * tau * apply(ops.A, y)
                y_next = solve_tridiag(L, rhs)
            elif fam is SchemeFamily.FACTORIZED_MATRIX:
                w = solve_tridiag(L1, tau * (phi - apply(ops.A, y)))
                y_next = y + solve_tridiag(L2, apply(B, w))
            else:
                y_next = factorized_two_stage_step(B, ops.A1, ops.A2, y, phi, sigma, tau)
            if not np.all(np.isfinite(y_next)):
                raise DivergenceError(n + 1)
            norm_next = binv_norm(B, apply(C, y_next))
            rhs_est = norm_prev + (tau * binv_norm(B, phi) if phi.any() else 0.0)
            yield StepRecord(n + 1, (n + 1) * tau, y_next, norm_next, rhs_est)
            y, norm_prev = y_next, norm_next


def run_scheme(config: SchemeConfig, ops: Operators, y0,
               source: Callable[[float], np.ndarray] | None = None) -> list[StepRecord]:
    return list(iter_scheme(config, ops, y0, source))
