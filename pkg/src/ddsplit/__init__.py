"""Regionally additive (overlapping domain decomposition) splitting schemes
for the 1D heat equation."""

from .linalg_fem import (
    CoefficientBoundError,
    Mesh1D,
    ProblemSpec,
    SingularMatrixError,
    TriDiag,
    apply,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    binv_norm,
    interpolate,
    l2_project,
    solve_tridiag,
)
from .decomposition import (
    DecompositionLayout,
    LayoutError,
    OperatorVariant,
    PartitionOfUnity,
    assemble_subdomain_operators,
    build_partition,
    split_load,
)
from .schemes import (
    DivergenceError,
    Operators,
    SchemeConfig,
    SchemeFamily,
    StepRecord,
    check_stability_estimate,
    factorized_matrix_step,
    factorized_two_stage_step,
    iter_scheme,
    run_scheme,
    weighted_step,
)

__version__ = "0.1.0"
