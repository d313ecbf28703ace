"""Transfer learning for moderate-dimensional ridge-regularized robust regression."""

from ._transrr import (
    FitResult,
    LossModel,
    MixtureComponent,
    PopulationSpec,
    RiskSolution,
    ScalarDist,
    TransFit,
    WhitenTransform,
    case_population,
    cross_validate_tau,
    expectation_E1,
    expectation_E2,
    fit_robust_ridge,
    fit_whitener,
    generate_case,
    pooled_rr,
    prox,
    prox_deriv_c,
    prox_deriv_x,
    risk_curve,
    single_rr,
    solve_risk_system,
    source_risk,
    trans_rr,
)

__all__ = [
    "FitResult",
    "LossModel",
    "MixtureComponent",
    "PopulationSpec",
    "RiskSolution",
    "ScalarDist",
    "TransFit",
    "WhitenTransform",
    "case_population",
    "cross_validate_tau",
    "expectation_E1",
    "expectation_E2",
    "fit_robust_ridge",
    "fit_whitener",
    "generate_case",
    "pooled_rr",
    "prox",
    "prox_deriv_c",
    "prox_deriv_x",
    "risk_curve",
    "single_rr",
    "solve_risk_system",
    "source_risk",
    "trans_rr",
]

__version__ = "0.1.0"
