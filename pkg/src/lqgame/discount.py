"""Exponential and mixture-of-exponential discount functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

EXPONENTIAL = "exponential"
MIXTURE = "mixture"


@dataclass(frozen=True)
class DiscountSpec:
    """Discount function ``alpha(t)``.

    ``kind == "exponential"``: ``alpha(t) = exp(-rho t)``.
    ``kind == "mixture"``: ``alpha(t) = lam exp(-rho t) + (1 - lam) exp(-gamma t)``
    with ``gamma > rho > 0`` and ``0 < lam < 1``.

    Use :meth:`exponential` and :meth:`mixture` rather than the raw constructor.
    """

    kind: str
    rho: float
    lam: float = 1.0
    gamma: float | None = None

    def __post_init__(self):
        if self.kind == EXPONENTIAL:
            if not self.rho > 0:
                raise DomainError(f"exponential discount needs rho > 0, got {self.rho}")
        elif self.kind == MIXTURE:
            if self.gamma is None or not self.gamma > self.rho > 0:
                raise DomainError(
                    f"mixture discount needs gamma > rho > 0, got rho={self.rho}, gamma={self.gamma}"
                )
            if not 0 < self.lam < 1:
                raise DomainError(f"mixture discount needs 0 < lambda < 1, got {self.lam}")
        else:
            raise DomainError(f"unknown discount kind {self.kind!r}")

    @classmethod
    def exponential(cls, rho: float) -> "DiscountSpec":
        return cls(EXPONENTIAL, float(rho))

    @classmethod
    def mixture(cls, lam: float, rho: float, gamma: float) -> "DiscountSpec":
        return cls(MIXTURE, float(rho), float(lam), float(gamma))

    @property
    def is_exponential(self) -> bool:
        return self.kind == EXPONENTIAL

    @property
    def short_rate(self) -> float:
        """Implied rate at t = 0."""
        if self.is_exponential:
            return self.rho
        return self.rho + (1.0 - self.lam) * (self.gamma - self.rho)

    @property
    def long_rate(self) -> float:
        return self.rho

    def terms(self) -> tuple[np.ndarray, np.ndarray]:
        """Weights and rates of the exponential sum ``sum_j w_j exp(-k_j t)``."""
        if self.is_exponential:
            return np.array([1.0]), np.array([self.rho])
        return np.array([self.lam, 1.0 - self.lam]), np.array([self.rho, self.gamma])


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise DomainError("discount functions are defined for t >= 0 only")
    return t


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def alpha(spec: DiscountSpec, t):
    t = _check_time(t)
    if spec.is_exponential:
        return _out(np.exp(-spec.rho * t))
    lam = spec.lam
    return _out(lam * np.exp(-spec.rho * t) + (1.0 - lam) * np.exp(-spec.gamma * t))


def alpha_derivative(spec: DiscountSpec, t):
    """``d alpha / dt``; strictly negative."""
    t = _check_time(t)
    if spec.is_exponential:
        return _out(-spec.rho * np.exp(-spec.rho * t))
    lam = spec.lam
    return _out(
        -lam * spec.rho * np.exp(-spec.rho * t)
        - (1.0 - lam) * spec.gamma * np.exp(-spec.gamma * t)
    )


def implied_rate(spec: DiscountSpec, t):
    """Instantaneous discount rate ``-alpha'(t) / alpha(t)``.

    For the mixture this is evaluated in the closed form
    ``rho + (1-lam)(gamma-rho) / (lam exp((gamma-rho) t) + 1 - lam)``, which
    stays finite for large ``t`` where the two exponentials underflow.
    """
    t = _check_time(t)
    if spec.is_exponential:
        return _out(np.full_like(t, spec.rho))
    lam, rho, gamma = spec.lam, spec.rho, spec.gamma
    with np.errstate(over="ignore"):
        denom = lam * np.exp((gamma - rho) * t) + 1.0 - lam
    return _out(rho + (1.0 - lam) * (gamma - rho) / denom)
