"""Least favorable priors for estimation through finite-output channels under Bregman losses."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.0.0"

from .bregman import (
    BregmanLoss,
    DomainError,
    bregman_loss,
    combine,
    generalized_i_divergence,
    squared_error_loss,
)
from .channels import (
    Channel,
    InvalidParameterError,
    NeedsDerivativeError,
    binomial_channel,
    load_table_channel,
    normal_cdf,
    product_channel,
    quantized_gaussian_channel,
    table_channel,
    validate_channel,
)
from .distributions import (
    DiscreteDistribution,
    EmptyDistributionError,
    Violation,
    merge_and_prune,
    reflect,
    validate,
)
from .gradients import RiskGradient, analytic_gradient_sq, fd_gradient, grad_check
from .projection import Ball, Box, SimplexTarget, project_alternating, project_ball, project_box, project_simplex
from .risk import PosteriorTable, UnsupportedDimensionError, bayes_risk, mmse_risk, posterior, risk_of_estimator
from .solver import (
    MomentConstraint,
    ProblemSpec,
    SolveResult,
    SolverConfig,
    UnsupportedProblemError,
    cardinality_bounds,
    grid_oracle,
    solve,
    sweep,
)
from .support import SupportSet

__all__ = [
    "analytic_gradient_sq",
    "Ball",
    "bayes_risk",
    "binomial_channel",
    "Box",
    "bregman_loss",
    "BregmanLoss",
    "cardinality_bounds",
    "Channel",
    "combine",
    "DiscreteDistribution",
    "DomainError",
    "EmptyDistributionError",
    "fd_gradient",
    "generalized_i_divergence",
    "grad_check",
    "grid_oracle",
    "InvalidParameterError",
    "load_table_channel",
    "merge_and_prune",
    "mmse_risk",
    "MomentConstraint",
    "NeedsDerivativeError",
    "normal_cdf",
    "posterior",
    "PosteriorTable",
    "ProblemSpec",
    "product_channel",
    "project_alternating",
    "project_ball",
    "project_box",
    "project_simplex",
    "quantized_gaussian_channel",
    "reflect",
    "risk_of_estimator",
    "RiskGradient",
    "SimplexTarget",
    "solve",
    "SolverConfig",
    "SolveResult",
    "squared_error_loss",
    "SupportSet",
    "sweep",
    "table_channel",
    "UnsupportedDimensionError",
    "UnsupportedProblemError",
    "validate",
    "validate_channel",
    "Violation",
]
