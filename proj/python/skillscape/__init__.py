"""Spatial skill-acquisition model: equilibrium solver, estimator and counterfactuals."""

from ._core import (
    ConfigError,
    EstimationError,
    IoError,
    ModelError,
    SolverError,
    agglomeration_dollar_impact,
    dollar_impact,
    estimate,
    generate_panel,
    implied_base_wage,
    posterior_update,
    redistribution_impact,
    solve,
    verify,
    write_generated,
)

__all__ = [
    "ConfigError",
    "EstimationError",
    "IoError",
    "ModelError",
    "SolverError",
    "agglomeration_dollar_impact",
    "dollar_impact",
    "estimate",
    "generate_panel",
    "implied_base_wage",
    "posterior_update",
    "redistribution_impact",
    "solve",
    "verify",
    "write_generated",
]
