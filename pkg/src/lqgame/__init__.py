"""Closed-loop strategies for present-biased linear-quadratic control and zero-sum games."""

from .discount import DiscountSpec, alpha, alpha_derivative, implied_rate
from .errors import DomainError, RefinementError, SolverError
from .riccati import ModelParams, StrategyCurve, game_constant_gains, single_constant_gain

__version__ = "0.1.0"

__all__ = [
    "DiscountSpec", "alpha", "alpha_derivative", "implied_rate",
    "DomainError", "SolverError", "RefinementError",
    "ModelParams", "StrategyCurve", "single_constant_gain", "game_constant_gains",
]
