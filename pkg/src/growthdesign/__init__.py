"""Locally D-optimal item allocations for growth curves in mixed-effects models."""

from .covariance import (
    CovarianceSpec,
    CovKind,
    ExactDesignLayout,
    build_full_V,
    sigma_ar1,
    sigma_cs,
)
from .equivalence import (
    OptimalityCertificate,
    check_optimality,
    efficiency_lower_bound,
    psi_vector,
)
from .errors import (
    CertificateError,
    DesignError,
    InfeasibleError,
    InvalidModelError,
    ParameterError,
    ResourceError,
    SchemaError,
    UsageError,
)
from .information import (
    DesignWeights,
    InfoMatrix,
    core_info,
    d_efficiency,
    fisher_info,
    log_det_criterion,
)
from .model import Family, GrowthCurve, TimeGrid, check_estimable, jacobian, mean_curve
from .optimize import (
    DesignProblem,
    SolverOptions,
    Solution,
    brute_force_oracle,
    closed_form_design,
    round_exact,
    solve_line_j3_ar1,
    solve_line_j3_rho0,
    solve_numeric,
    solve_ratio_closed_form,
)

__version__ = "0.1.0"

__all__ = [
    "CertificateError", "CovKind", "CovarianceSpec", "DesignError", "DesignProblem",
    "DesignWeights", "ExactDesignLayout", "Family", "GrowthCurve", "InfeasibleError",
    "InfoMatrix", "InvalidModelError", "OptimalityCertificate", "ParameterError",
    "ResourceError", "SchemaError", "Solution", "SolverOptions", "TimeGrid", "UsageError",
    "brute_force_oracle", "build_full_V", "closed_form_design", "check_estimable", "check_optimality",
    "core_info", "d_efficiency", "efficiency_lower_bound", "fisher_info", "jacobian",
    "log_det_criterion", "mean_curve", "psi_vector", "round_exact", "sigma_ar1",
    "sigma_cs", "solve_line_j3_ar1", "solve_line_j3_rho0", "solve_numeric",
    "solve_ratio_closed_form",
]
