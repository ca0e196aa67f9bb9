"""Newton-type iterative regularization for nonlinear ill-posed problems."""

from .core import (LinearOperator, SvdFactors, Vector, adjoint_mismatch, inner, norm,
                   op_norm_estimate, operator_norm, svd_dense)
from .exceptions import (ConfigurationError, DegenerateProblemError, DimensionError,
                         DomainError, IllPosedInstanceError, InsufficientDataError,
                         QualificationError, RegNewtError, ScalingError,
                         ScheduleCompatibilityError, UnsupportedOperatorError)
from .filters import (Exponential, FilterConstants, FilterFamily, IteratedTikhonov,
                      Landweber, Lardy, apply_filter, apply_residual, beta0, eval_g,
                      eval_r, family_constants, qualification_bound)

__all__ = [
    "LinearOperator",
    "SvdFactors",
    "Vector",
    "adjoint_mismatch",
    "inner",
    "norm",
    "op_norm_estimate",
    "operator_norm",
    "svd_dense",
    "ConfigurationError",
    "DegenerateProblemError",
    "DimensionError",
    "DomainError",
    "IllPosedInstanceError",
    "InsufficientDataError",
    "QualificationError",
    "RegNewtError",
    "ScalingError",
    "ScheduleCompatibilityError",
    "UnsupportedOperatorError",
    "Exponential",
    "FilterConstants",
    "FilterFamily",
    "IteratedTikhonov",
    "Landweber",
    "Lardy",
    "apply_filter",
    "apply_residual",
    "beta0",
    "eval_g",
    "eval_r",
    "family_constants",
    "qualification_bound",
]

__version__ = "0.1.0"
