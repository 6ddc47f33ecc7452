"""Closed forms and backward integration for constant-discount problems.

Covers the single-player optimal gain, the zero-sum saddle gains, the
auxiliary game with time-varying cost weights, and the Lyapunov envelope
``exp(sigma^2 (T - s))`` that bounds every kernel in this package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .discount import DiscountSpec
from .errors import DomainError, SolverError

#: ``|rho - sigma^2|`` below this switches to the analytic limit formulas.
DEGENERACY_THRESHOLD = 1e-10


@dataclass(frozen=True)
class ModelParams:
    """Scalar coefficients of the lobbying game."""

    T: float
    sigma: float
    R: float
    discount: DiscountSpec

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise DomainError(f"horizon T must be positive, got {self.T}")
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise DomainError(f"volatility sigma must be >= 0, got {self.sigma}")
        if not 0 < self.R <= 1:
            raise DomainError(f"effort-cost ratio must satisfy 0 < R <= 1, got {self.R}")

    @property
    def var(self) -> float:
        return self.sigma**2

    def with_discount(self, discount: DiscountSpec) -> "ModelParams":
        return ModelParams(self.T, self.sigma, self.R, discount)

    def with_rate(self, rho: float) -> "ModelParams":
        """Same model under exponential discounting at rate ``rho``."""
        return self.with_discount(DiscountSpec.exponential(rho))


@dataclass(frozen=True)
class StrategyCurve:
    """Feedback gain sampled on an increasing grid starting at 0.

    ``values`` are right-continuous node values. Gains produced by the
    partition solvers jump at partition points; ``left_values`` then holds
    the left limits (equal to ``values`` wherever the curve is continuous).
    """

    grid: np.ndarray
    values: np.ndarray
    left_values: np.ndarray | None = field(default=None)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        left = values if self.left_values is None else np.asarray(self.left_values, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise DomainError("strategy grid needs at least two points")
        if grid.shape != values.shape or grid.shape != left.shape:
            raise DomainError("strategy grid and values differ in length")
        if np.any(np.diff(grid) <= 0):
            raise DomainError("strategy grid must be strictly increasing")
        if abs(grid[0]) > 1e-12:
            raise DomainError("strategy grid must start at 0")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(left))):
            raise DomainError("strategy values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "left_values", left)

    @property
    def T(self) -> float:
        return float(self.grid[-1])

    def __call__(self, s):
        """Linear interpolation between nodes (right-continuous at jumps)."""
        return np.interp(s, self.grid, self.values)

    def scaled(self, factor: float) -> "StrategyCurve":
        return StrategyCurve(self.grid, factor * self.values, factor * self.left_values)

    @classmethod
    def zeros(cls, grid) -> "StrategyCurve":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.zeros_like(grid))


def _check_s(s, T):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(s > T * (1 + 1e-14)):
        raise DomainError(f"time must lie in [0, {T}]")
    return np.minimum(s, T)


def _require_exponential(params):
    if not params.discount.is_exponential:
        raise DomainError("constant-discount closed forms need an exponential discount")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def single_constant_gain(params: ModelParams, s):
    """Optimal feedback of the lone player 2 under exponential discounting.

    Returns ``-(a e^{as}) / ((1 + R a) e^{aT} - e^{as})`` with ``a = rho - sigma^2``,
    evaluated as ``-a / (expm1(a tau) + R a e^{a tau})`` with ``tau = T - s``.
    """
    _require_exponential(params)
    s = _check_s(s, params.T)
    a = params.discount.rho - params.var
    tau = params.T - s
    R = params.R
    if abs(a) < DEGENERACY_THRESHOLD:
        return _out(-1.0 / (R + tau))
    return _out(-a / (np.expm1(a * tau) + R * a * np.exp(a * tau)))


def game_constant_riccati(params: ModelParams, s):
    """Solution of ``P' + (sigma^2 - rho) P - ((1-R)/R) P^2 = 0``, ``P(T) = 1``."""
    _require_exponential(params)
    s = _check_s(s, params.T)
    a = params.discount.rho - params.var
    tau = params.T - s
    R = params.R
    if abs(a) < DEGENERACY_THRESHOLD:
        return _out(R / (R + (1.0 - R) * tau))
    return _out(R * a / ((1.0 - R) * np.expm1(a * tau) + R * a * np.exp(a * tau)))


def game_constant_gains(params: ModelParams, s):
    """Closed-loop saddle gains ``(theta1, theta2)`` under exponential discounting.

    ``theta1 = P`` and ``theta2 = -P / R``, so ``theta1 + R theta2 == 0``.
    """
    P = game_constant_riccati(params, s)
    return P, -P / params.R


def lyapunov_envelope(sigma: float, T: float, s):
    """``exp(sigma^2 (T - s))``: solution of ``Xi' + sigma^2 Xi = 0``, ``Xi(T) = 1``."""
    s = np.asarray(s, dtype=float)
    return _out(np.exp(sigma**2 * (T - s)))


def rk4_backward(f: Callable, grid, y_T):
    """Classical RK4 from ``grid[-1]`` down to ``grid[0]`` on the given nodes.

    ``f(s, y)`` is the right-hand side of ``y' = f(s, y)``. Returns an array of
    shape ``(len(grid),) + shape(y_T)``.
    """
    grid = np.asarray(grid, dtype=float)
    y = np.asarray(y_T, dtype=float)
    out = np.empty((grid.size,) + y.shape)
    out[-1] = y
    for i in range(grid.size - 1, 0, -1):
        s1, s0 = grid[i], grid[i - 1]
        h = s0 - s1
        k1 = f(s1, y)
        k2 = f(s1 + h / 2, y + h / 2 * k1)
        k3 = f(s1 + h / 2, y + h / 2 * k2)
        k4 = f(s0, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i - 1] = y
    return out


@dataclass(frozen=True)
class AuxiliaryGameSpec:
    """Zero-sum game with terminal weight ``G`` and cost weights ``R1(s) < 0 < R2(s)``.

    ``R1`` and ``R2`` are callables of time (vectorised over numpy arrays).
    """

    G: float
    R1: Callable
    R2: Callable
    rho: float = 0.0

    def __post_init__(self):
        if not self.G >= 0:
            raise DomainError(f"terminal weight G must be >= 0, got {self.G}")

    def check_on(self, grid):
        r1 = np.broadcast_to(self.R1(grid), np.shape(grid))
        r2 = np.broadcast_to(self.R2(grid), np.shape(grid))
        if np.any(r1 >= 0):
            raise DomainError("R1 must be negative on the whole grid")
        if np.any(r2 <= 0):
            raise DomainError("R2 must be positive on the whole grid")


@dataclass(frozen=True)
class AuxiliarySolution:
    grid: np.ndarray
    P: np.ndarray
    theta1: np.ndarray
    theta2: np.ndarray


def solve_auxiliary_riccati(spec: AuxiliaryGameSpec, sigma: float, T: float, grid) -> AuxiliarySolution:
    """Integrate ``P' + sigma^2 P - rho P - ((R1+R2)/(R1 R2)) P^2 = 0`` back from ``P(T) = G``.

    Fixed-step RK4 on ``grid``. Saddle gains are ``-P/R1`` and ``-P/R2``.
    Raises :class:`SolverError` once ``|P|`` exceeds ten times
    ``G exp((sigma^2 - rho)(T - s))``, which only happens when the weight
    ``(R1+R2)/(R1 R2)`` turns negative and the solution escapes.
    """
    grid = np.asarray(grid, dtype=float)
    if abs(grid[-1] - T) > 1e-12 * max(1.0, T) or grid[0] < 0:
        raise DomainError("grid must end at T and lie in [0, T]")
    spec.check_on(grid)
    var = sigma**2

    def rhs(s, P):
        r1, r2 = spec.R1(s), spec.R2(s)
        return -(var - spec.rho) * P + (r1 + r2) / (r1 * r2) * P**2

    with np.errstate(over="ignore", invalid="ignore"):
        P = rk4_backward(rhs, grid, spec.G)
    bound = 10.0 * spec.G * np.exp((var - spec.rho) * (T - grid))
    bad = ~np.isfinite(P) | (np.abs(P) > bound)
    if np.any(bad):
        where = grid[np.nonzero(bad)[0][-1]]
        raise SolverError(
            f"auxiliary Riccati solution left its envelope at s={where:.6g}; "
            "the weight (R1+R2)/(R1 R2) is probably negative"
        )
    r1 = np.broadcast_to(spec.R1(grid), grid.shape)
    r2 = np.broadcast_to(spec.R2(grid), grid.shape)
    return AuxiliarySolution(grid, P, -P / r1, -P / r2)


def single_constant_curve(params: ModelParams, grid) -> StrategyCurve:
    grid = np.asarray(grid, dtype=float)
    return StrategyCurve(grid, single_constant_gain(params, grid))


def game_constant_curves(params: ModelParams, grid) -> tuple[StrategyCurve, StrategyCurve]:
    grid = np.asarray(grid, dtype=float)
    th1, th2 = game_constant_gains(params, grid)
    return StrategyCurve(grid, th1), StrategyCurve(grid, th2)
