"""Two-colour overlapping decomposition of (0, 1) and the split operators.

The unit interval is cut into intervals of length ``H``; each interval holds
one subdomain of colour 1 (left half) and one of colour 2 (right half), so
colours alternate every ``H/2`` starting with colour 1 at x = 0.  Across every
interior colour boundary the weight of the ceding colour falls linearly from
1 to 0 over the ``q`` cells that end at the boundary.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .linalg_fem import (
    Mesh1D,
    ProblemSpec,
    TriDiag,
    assemble_from_element_weights,
    element_coefficients,
)

_ALIGN_TOL = 1e-9


class LayoutError(ValueError):
    """Subdomain or overlap widths are not compatible with the mesh."""


class OperatorVariant(enum.Enum):
    # int eta k u' v'
    STANDARD = "standard"
    # int k u' (eta v)'
    TEST_WEIGHTED = "test-weighted"
    # int k (eta u)' v'
    TRIAL_WEIGHTED = "trial-weighted"


def _cells(length: float, N: int, what: str) -> int:
    c = length * N
    n = round(c)
    if abs(c - n) > _ALIGN_TOL * max(1.0, abs(c)):
        raise LayoutError(f"{what}={length!r} is not a multiple of h=1/{N}")
    return int(n)


@dataclass(frozen=True)
class DecompositionLayout:
    """Interval length ``H`` (two subdomains each) and overlap width ``q``."""

    H: float
    q: float

    def __post_init__(self):
        if not (0 < self.H <= 1):
            raise LayoutError(f"H must lie in (0, 1], got {self.H!r}")
        inv = 1.0 / self.H
        if abs(inv - round(inv)) > _ALIGN_TOL * inv:
            raise LayoutError(f"1/H must be an integer, got 1/H={inv!r}")
        if not self.q > 0:
            raise LayoutError(f"overlap q must be positive, got {self.q!r}")

    @classmethod
    def from_cells(cls, mesh: Mesh1D, H_inv: int, q_cells: int) -> "DecompositionLayout":
        return cls(1.0 / H_inv, q_cells * mesh.h)

    def cells(self, mesh: Mesh1D) -> tuple[int, int]:
        """(cells per subdomain piece, overlap cells), validated against the mesh."""
        piece = _cells(self.H / 2, mesh.N, "H/2")
        qc = _cells(self.q, mesh.N, "q")
        if piece < 1:
            raise LayoutError(f"H/2={self.H / 2!r} is below the mesh step h=1/{mesh.N}")
        if not 0 < qc < piece:
            raise LayoutError(
                f"overlap of {qc} cells must be shorter than a subdomain piece "
                f"of {piece} cells (q < H/2)"
            )
        return piece, qc

    def breakpoints(self) -> np.ndarray:
        """Interior colour boundaries j*H/2."""
        n = round(2.0 / self.H)
        return np.arange(1, n) * (self.H / 2)


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    """Nodal weights on all N+1 mesh nodes (Dirichlet nodes included)."""

    eta1: np.ndarray
    eta2: np.ndarray

    def __post_init__(self):
        for name in ("eta1", "eta2"):
            a = np.array(getattr(self, name), dtype=float)
            a.flags.writeable = False
            object.__setattr__(self, name, a)
        if self.eta1.shape != self.eta2.shape:
            raise ValueError("eta1 and eta2 differ in length")

    @classmethod
    def single_domain(cls, mesh: Mesh1D) -> "PartitionOfUnity":
        """Degenerate partition eta1 = 1, eta2 = 0."""
        return cls(np.ones(mesh.N + 1), np.zeros(mesh.N + 1))

    @property
    def N(self) -> int:
        return self.eta1.shape[0] - 1

    def weights(self, alpha: int) -> np.ndarray:
        return {1: self.eta1, 2: self.eta2}[alpha]


def build_partition(mesh: Mesh1D, layout: DecompositionLayout) -> PartitionOfUnity:
    piece, qc = layout.cells(mesh)
    N = mesh.N
    i = np.arange(N + 1)
    n_pieces = N // piece
    colour = np.minimum(i // piece, n_pieces - 1) % 2  # 0 -> colour 1
    eta1 = np.where(colour == 0, 1.0, 0.0)
    for j in range(1, n_pieces):
        b = j * piece
        idx = np.arange(b - qc, b + 1)
        ceding = (b - idx) / qc
        eta1[idx] = ceding if (j - 1) % 2 == 0 else 1.0 - ceding
    return PartitionOfUnity(eta1, 1.0 - eta1)


def _coupling(mesh: Mesh1D, k_mid: np.ndarray, eta: np.ndarray):
    # k * eta' * int phi_i over an element, eta' constant per element
    c = 0.5 * k_mid * np.diff(eta) / mesh.h
    diag = np.zeros(mesh.N + 1)
    diag[:-1] -= c
    diag[1:] += c
    return c, diag


def _operator(mesh, k_mid, eta, variant: OperatorVariant) -> TriDiag:
    eta_mid = 0.5 * (eta[:-1] + eta[1:])
    A = assemble_from_element_weights(mesh, k_mid * eta_mid)
    if variant is OperatorVariant.STANDARD:
        return A
    c, diag = _coupling(mesh, k_mid, eta)
    if variant is OperatorVariant.TEST_WEIGHTED:
        lower, upper = -c, c
    else:
        lower, upper = c, -c
    return A + TriDiag(lower[1:-1], diag[1:-1], upper[1:-1])


def assemble_subdomain_operators(
    mesh: Mesh1D,
    spec: ProblemSpec,
    pou: PartitionOfUnity,
    variant: OperatorVariant = OperatorVariant.STANDARD,
) -> tuple[TriDiag, TriDiag]:
    """Split stiffness operators (A1, A2) with A1 + A2 = A."""
    if pou.N != mesh.N:
        raise ValueError(f"partition built for N={pou.N}, mesh has N={mesh.N}")
    variant = OperatorVariant(variant)
    k_mid = element_coefficients(mesh, spec)
    return (_operator(mesh, k_mid, pou.eta1, variant),
            _operator(mesh, k_mid, pou.eta2, variant))


def split_load(load, pou: PartitionOfUnity) -> tuple[np.ndarray, np.ndarray]:
    """Nodal split of a load vector: phi_alpha = eta_alpha * phi."""
    load = np.asarray(load, dtype=float)
    if load.shape != (pou.N - 1,):
        raise ValueError(f"load of shape {load.shape} does not match partition N={pou.N}")
    return pou.eta1[1:-1] * load, pou.eta2[1:-1] * load
