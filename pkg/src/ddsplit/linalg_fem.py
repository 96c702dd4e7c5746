"""Uniform 1D mesh, P1 finite-element assembly and tridiagonal linear algebra.

Unknown vectors live on the interior nodes x_1 .. x_{N-1}; the homogeneous
Dirichlet nodes are eliminated.  Nodal vectors are plain float64 arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

# two-point Gauss-Legendre abscissae on [-1, 1]
_GAUSS2 = np.array([-1.0, 1.0]) / np.sqrt(3.0)


class SingularMatrixError(ArithmeticError):
    """A zero pivot was met during tridiagonal elimination."""


class CoefficientBoundError(ValueError):
    """The diffusion coefficient dropped below its declared lower bound."""


def _as_field(fn, x, *args):
    # user callables may return scalars for constant fields
    return np.broadcast_to(np.asarray(fn(x, *args), dtype=float), x.shape)


@dataclass(frozen=True)
class ProblemSpec:
    """Continuous problem u_t - (k u_x)_x = f on (0, 1), u = 0 on the boundary."""

    k: Callable
    f: Callable
    u0: Callable
    T: float
    kappa_min: float = 1e-12

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"final time must be positive, got T={self.T}")
        if not self.kappa_min > 0:
            raise ValueError(f"kappa_min must be positive, got {self.kappa_min}")


@dataclass(frozen=True)
class Mesh1D:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"mesh needs an integer N >= 2, got {self.N}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.N + 1) / self.N

    @property
    def interior(self) -> np.ndarray:
        return np.arange(1, self.N) / self.N

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.N) + 0.5) / self.N

    @property
    def n_unknowns(self) -> int:
        return self.N - 1


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class TriDiag:
    """Tridiagonal matrix: ``lower[i] = M[i+1, i]``, ``upper[i] = M[i, i+1]``."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        for name in ("lower", "diag", "upper"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n = self.diag.shape[0]
        if self.diag.ndim != 1 or n < 1:
            raise ValueError("diag must be a nonempty 1D array")
        if self.lower.shape != (n - 1,) or self.upper.shape != (n - 1,):
            raise ValueError(
                f"off-diagonals must have length {n - 1}, got "
                f"{self.lower.shape} and {self.upper.shape}"
            )

    @property
    def order(self) -> int:
        return self.diag.shape[0]

    @classmethod
    def identity(cls, n: int) -> "TriDiag":
        return cls(np.zeros(n - 1), np.ones(n), np.zeros(n - 1))

    @classmethod
    def zeros(cls, n: int) -> "TriDiag":
        return cls(np.zeros(n - 1), np.zeros(n), np.zeros(n - 1))

    @classmethod
    def from_dense(cls, M) -> "TriDiag":
        M = np.asarray(M, dtype=float)
        return cls(np.diag(M, -1), np.diag(M), np.diag(M, 1))

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.lower, -1) + np.diag(self.upper, 1)

    @property
    def T(self) -> "TriDiag":
        return TriDiag(self.upper, self.diag, self.lower)

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.lower, self.upper))

    def norm_inf(self) -> float:
        row = np.abs(self.diag).copy()
        row[:-1] += np.abs(self.upper)
        row[1:] += np.abs(self.lower)
        return float(row.max())

    def _check(self, other: "TriDiag"):
        if other.order != self.order:
            raise ValueError(f"order mismatch: {self.order} vs {other.order}")

    def __add__(self, other: "TriDiag") -> "TriDiag":
        self._check(other)
        return TriDiag(self.lower + other.lower, self.diag + other.diag,
                       self.upper + other.upper)

    def __sub__(self, other: "TriDiag") -> "TriDiag":
        self._check(other)
        return TriDiag(self.lower - other.lower, self.diag - other.diag,
                       self.upper - other.upper)

    def __mul__(self, c: float) -> "TriDiag":
        return TriDiag(c * self.lower, c * self.diag, c * self.upper)

    __rmul__ = __mul__

    def __neg__(self) -> "TriDiag":
        return -1.0 * self

    def __matmul__(self, v):
        return apply(self, v)


def _check_vector(M: TriDiag, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (M.order,):
        raise ValueError(f"vector of shape {v.shape} does not match matrix order {M.order}")
    return v


def apply(M: TriDiag, v) -> np.ndarray:
    """Return ``M @ v``."""
    v = _check_vector(M, v)
    # row-wise order lower, diag, upper
    r = M.diag * v
    r[1:] = M.lower * v[:-1] + r[1:]
    r[:-1] += M.upper * v[1:]
    return r


@njit(cache=True)
def _thomas(lower, diag, upper, rhs):
    n = diag.shape[0]
    c = np.empty(n)
    x = np.empty(n)
    piv = diag[0]
    if piv == 0.0:
        return x, 0
    c[0] = 0.0
    x[0] = rhs[0] / piv
    for i in range(1, n):
        c[i - 1] = upper[i - 1] / piv
        piv = diag[i] - lower[i - 1] * c[i - 1]
        if piv == 0.0:
            return x, i
        x[i] = (rhs[i] - lower[i - 1] * x[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        x[i] -= c[i] * x[i + 1]
    return x, -1


def solve_tridiag(M: TriDiag, rhs) -> np.ndarray:
    """Solve ``M x = rhs`` by Thomas elimination (no pivoting).

    Raises SingularMatrixError on an exactly zero pivot.
    """
    rhs = _check_vector(M, rhs)
    x, bad = _thomas(M.lower, M.diag, M.upper, rhs)
    if bad >= 0:
        raise SingularMatrixError(f"zero pivot in row {bad} of order-{M.order} system")
    return x


def binv_norm(B: TriDiag, v) -> float:
    """The dual norm sqrt(v^T B^{-1} v) for SPD ``B``."""
    v = _check_vector(B, v)
    if not v.any():
        return 0.0
    return float(np.sqrt(max(float(v @ solve_tridiag(B, v)), 0.0)))


def _drop_dirichlet(lower, diag, upper) -> TriDiag:
    return TriDiag(lower[1:-1], diag[1:-1], upper[1:-1])


def assemble_mass(mesh: Mesh1D) -> TriDiag:
    """Consistent P1 mass matrix, rows (h/6, 4h/6, h/6)."""
    h, N = mesh.h, mesh.N
    diag = np.zeros(N + 1)
    diag[:-1] += h / 3.0
    diag[1:] += h / 3.0
    off = np.full(N, h / 6.0)
    return _drop_dirichlet(off, diag, off)


def element_coefficients(mesh: Mesh1D, spec: ProblemSpec) -> np.ndarray:
    """k at element midpoints, checked against ``spec.kappa_min``."""
    k_mid = _as_field(spec.k, mesh.midpoints)
    bad = np.flatnonzero(~(k_mid >= spec.kappa_min))
    if bad.size:
        e = bad[0]
        raise CoefficientBoundError(
            f"k={k_mid[e]!r} at x={mesh.midpoints[e]:.6g} (element {e}) "
            f"is below kappa_min={spec.kappa_min}"
        )
    return np.array(k_mid)


def assemble_from_element_weights(mesh: Mesh1D, w: np.ndarray) -> TriDiag:
    """Stiffness-type matrix sum_e w_e/h [[1, -1], [-1, 1]] on interior nodes."""
    s = np.asarray(w, dtype=float) / mesh.h
    diag = np.zeros(mesh.N + 1)
    diag[:-1] += s
    diag[1:] += s
    return _drop_dirichlet(-s, diag, -s)


def assemble_stiffness(mesh: Mesh1D, spec: ProblemSpec) -> TriDiag:
    """P1 stiffness matrix of a(u, v) = int k u' v' dx, k sampled at midpoints."""
    return assemble_from_element_weights(mesh, element_coefficients(mesh, spec))


def _gauss_points(mesh: Mesh1D):
    h = mesh.h
    x = mesh.midpoints[:, None] + 0.5 * h * _GAUSS2[None, :]
    left = (mesh.nodes[1:, None] - x) / h
    return x, left, 1.0 - left


def assemble_load(mesh: Mesh1D, spec: ProblemSpec, t: float) -> np.ndarray:
    """Load vector int f(x, t) phi_i(x) dx, two-point Gauss rule per element."""
    x, left, right = _gauss_points(mesh)
    fx = _as_field(spec.f, x, t) * (0.5 * mesh.h)
    load = np.zeros(mesh.N + 1)
    load[:-1] += (fx * left).sum(axis=1)
    load[1:] += (fx * right).sum(axis=1)
    return load[1:-1]


def interpolate(mesh: Mesh1D, fn: Callable, *args) -> np.ndarray:
    """Nodal interpolant of ``fn`` at the interior nodes."""
    return np.array(_as_field(fn, mesh.interior, *args))


def l2_project(mesh: Mesh1D, fn: Callable, B: TriDiag | None = None) -> np.ndarray:
    """L2 projection onto the P1 space: B y = (fn, phi_i)."""
    x, left, right = _gauss_points(mesh)
    fx = _as_field(fn, x) * (0.5 * mesh.h)
    rhs = np.zeros(mesh.N + 1)
    rhs[:-1] += (fx * left).sum(axis=1)
    rhs[1:] += (fx * right).sum(axis=1)
    return solve_tridiag(B if B is not None else assemble_mass(mesh), rhs[1:-1])
