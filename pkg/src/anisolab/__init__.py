"""Numerical laboratory for anisotropic minimal surfaces."""

__version__ = "0.1.0"

from . import errors
from .integrand import (
    AnisotropyConstants,
    IntegrandSpec,
    WulffMesh,
    anisotropy_constants,
    cahn_hoffman,
    constant,
    ellipsoid,
    eval_gamma,
    gamma_bar_derivatives,
    hessian_A_gamma,
    parse_integrand,
    spherical_harmonic,
    wulff_mesh,
)
from .surface import (
    CurvatureField,
    SurfacePatch,
    anisotropic_energy,
    curvature_field,
    first_variation_check,
    fixture,
    from_jet,
)
from .graph_solver import GraphProblem, GraphSolution, lift, residual, solve
from .spectrum import (
    JacobiDiscretization,
    SpectralReport,
    assemble,
    comparison_operator_counts,
    dirichlet_eigs,
    jacobi_field_residual,
    morse_index_exhaustion,
)
from .gauss_analysis import (
    CriticalPoint,
    Pseudograph,
    branch_order,
    critical_set,
    degrees,
    euler_inequality_check,
    index_lower_bound,
    pseudograph_extract,
    riemann_hurwitz_check,
)
from .harness import (
    ExperimentConfig,
    accept_candidate,
    selftest,
    verify_bounds,
)

__all__ = [
    "AnisotropyConstants",
    "CriticalPoint",
    "CurvatureField",
    "ExperimentConfig",
    "GraphProblem",
    "GraphSolution",
    "IntegrandSpec",
    "JacobiDiscretization",
    "Pseudograph",
    "SpectralReport",
    "SurfacePatch",
    "WulffMesh",
    "accept_candidate",
    "anisotropic_energy",
    "anisotropy_constants",
    "assemble",
    "branch_order",
    "cahn_hoffman",
    "comparison_operator_counts",
    "constant",
    "critical_set",
    "curvature_field",
    "degrees",
    "dirichlet_eigs",
    "ellipsoid",
    "errors",
    "euler_inequality_check",
    "eval_gamma",
    "first_variation_check",
    "fixture",
    "from_jet",
    "gamma_bar_derivatives",
    "hessian_A_gamma",
    "index_lower_bound",
    "jacobi_field_residual",
    "lift",
    "morse_index_exhaustion",
    "parse_integrand",
    "pseudograph_extract",
    "residual",
    "riemann_hurwitz_check",
    "selftest",
    "solve",
    "spherical_harmonic",
    "verify_bounds",
    "wulff_mesh",
]
