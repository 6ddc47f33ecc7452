"""Deterministic evaluation of affine feedback strategies.

The state equation is linear and the payoff purely quadratic, so the payoff
of a feedback pair started at ``(t, xi)`` is ``p * xi**2`` where ``p`` solves
the scalar Lyapunov equation

    p' + 2 p (theta1 + theta2) + sigma^2 p + alpha(s - t)(-theta1^2 + R theta2^2) = 0,
    p(T) = alpha(T - t).

Spike deviations on ``[t, t + eps]`` are evaluated the same way, which keeps
Monte Carlo noise out of an O(eps) signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discount import alpha
from .errors import DomainError
from .riccati import ModelParams, StrategyCurve

PROPORTIONAL = "proportional"
CONSTANT = "constant"


@dataclass(frozen=True)
class ClosedLoopPair:
    """Feedback gains of both players on a shared grid (offsets are zero)."""

    theta1: StrategyCurve
    theta2: StrategyCurve

    def __post_init__(self):
        if self.theta1.grid.shape != self.theta2.grid.shape or \
                not np.array_equal(self.theta1.grid, self.theta2.grid):
            raise DomainError("both strategies must share one grid")

    @classmethod
    def single(cls, theta2: StrategyCurve) -> "ClosedLoopPair":
        """Player 2 alone; player 1 plays zero."""
        return cls(StrategyCurve.zeros(theta2.grid), theta2)

    @property
    def grid(self) -> np.ndarray:
        return self.theta1.grid

    @property
    def T(self) -> float:
        return self.theta1.T


@dataclass(frozen=True)
class ValueCoefficient:
    """Payoff per unit ``xi**2`` at evaluation time ``t``."""

    t: float
    p: float

    def value(self, xi):
        return self.p * np.asarray(xi, dtype=float) ** 2


def _panels_from(t, curve: StrategyCurve):
    """Nodes on ``[t, T]`` and the gain at both ends of every panel."""
    grid = curve.grid
    j = int(np.searchsorted(grid, t, side="right"))
    nodes = np.concatenate([[t], grid[j:]])
    head = float(curve(t))
    left = np.concatenate([[head], curve.values[j:-1]])
    right = curve.left_values[j:]
    if nodes.size >= 2 and nodes[1] - nodes[0] <= 1e-14 * max(1.0, curve.T):
        # t coincides with a grid node up to rounding
        nodes, left, right = nodes[1:], left[1:], right[1:]
        nodes[0] = t
    return nodes, left, right


def _lyapunov(nodes, g1l, g1r, g2l, g2r, terminal, origin, params, sign=1.0):
    """Integrating-factor solution with trapezoid panels; returns ``p(nodes[0])``."""
    h = np.diff(nodes)
    var, R, disc = params.var, params.R, params.discount
    drift = 0.5 * h * (2.0 * (g1l + g2l) + var + 2.0 * (g1r + g2r) + var)
    A = np.zeros(nodes.size)
    A[:-1] = np.cumsum(drift[::-1])[::-1]
    cl = sign * (-g1l**2 + R * g2l**2)
    cr = sign * (-g1r**2 + R * g2r**2)
    eA = np.exp(-A)
    panel = 0.5 * h * (eA[:-1] * alpha(disc, nodes[:-1] - origin) * cl
                       + eA[1:] * alpha(disc, nodes[1:] - origin) * cr)
    return float(np.exp(A[0]) * (terminal + panel.sum()))


def closed_loop_value(t: float, pair: ClosedLoopPair, params: ModelParams,
                      discount_origin: float | None = None, player: int = 1) -> ValueCoefficient:
    """Payoff coefficient of ``pair`` started at time ``t``.

    ``discount_origin`` is the self whose discount ``alpha(. - origin)`` is
    used (default ``t``); a spike at ``t`` needs the tail from ``t + eps``
    valued by self ``t``. ``player=2`` returns the coefficient of ``J2 = -J1``
    computed from its own sign-flipped equation.
    """
    T = params.T
    if not 0 <= t < T:
        raise DomainError(f"evaluation time must lie in [0, T), got {t}")
    if abs(pair.T - T) > 1e-12 * T:
        raise DomainError("strategy grid does not end at the model horizon")
    origin = t if discount_origin is None else float(discount_origin)
    if origin > t:
        raise DomainError("discount origin cannot lie after the evaluation time")
    nodes, g1l, g1r = _panels_from(t, pair.theta1)
    _, g2l, g2r = _panels_from(t, pair.theta2)
    sign = {1: 1.0, 2: -1.0}[player]
    terminal = sign * alpha(params.discount, T - origin)
    return ValueCoefficient(t, _lyapunov(nodes, g1l, g1r, g2l, g2r, terminal, origin, params, sign))


def zero_sum_check(t: float, pair: ClosedLoopPair, params: ModelParams) -> float:
    """``J1 + J2`` per unit ``xi**2``, each from its own Lyapunov solve."""
    j1 = closed_loop_value(t, pair, params, player=1).p
    j2 = closed_loop_value(t, pair, params, player=2).p
    return j1 + j2


def _rk4_segment(rhs, t0, t1, y_end, n):
    s = np.linspace(t0, t1, n + 1)
    y = np.asarray(y_end, dtype=float)
    for i in range(n, 0, -1):
        hh = s[i - 1] - s[i]
        k1 = rhs(s[i], y)
        k2 = rhs(s[i] + hh / 2, y + hh / 2 * k1)
        k3 = rhs(s[i] + hh / 2, y + hh / 2 * k2)
        k4 = rhs(s[i - 1], y + hh * k3)
        y = y + hh / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def spike_check(t: float, epsilon: float, u_dev: float, who: int, equilibrium: ClosedLoopPair,
                params: ModelParams, mode: str = PROPORTIONAL, xi: float = 1.0,
                substeps: int = 64) -> float:
    """Difference quotient ``[J(deviated) - J(equilibrium)] / eps`` per unit ``xi**2``.

    Player ``who`` replaces its feedback on ``[t, t+eps)`` by ``u_dev * X``
    (``mode="proportional"``) or by the constant open-loop control ``u_dev``
    (``mode="constant"``, value tracked as ``a x^2 + b x + c``); everything
    after ``t + eps`` follows ``equilibrium``, valued with self ``t``'s
    discount. ``J`` is player 1's payoff: at an equilibrium the player-1
    quotient tends to a non-positive limit and the player-2 quotient to a
    non-negative one. For a lone player 2 (``theta1 = 0``) the second
    inequality is the equilibrium condition on ``J2 = -J1``.
    """
    T = params.T
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if not 0 <= t < t + epsilon <= T * (1 + 1e-14):
        raise DomainError("need 0 <= t < t + eps <= T")
    if who not in (1, 2):
        raise DomainError("who must be 1 or 2")
    t_end = min(t + epsilon, T)
    disc, R, var = params.discount, params.R, params.var
    if t_end >= T:
        tail = alpha(disc, T - t)
    else:
        tail = closed_loop_value(t_end, equilibrium, params, discount_origin=t).p
    th1, th2 = equilibrium.theta1, equilibrium.theta2

    def eq_rhs(s, a):
        g1, g2 = th1(s), th2(s)
        return -(2.0 * (g1 + g2) + var) * a - alpha(disc, s - t) * (-g1**2 + R * g2**2)

    p_eq = float(_rk4_segment(eq_rhs, t, t_end, tail, substeps))

    if mode == PROPORTIONAL:
        def dev_rhs(s, a):
            g1 = u_dev if who == 1 else th1(s)
            g2 = u_dev if who == 2 else th2(s)
            return -(2.0 * (g1 + g2) + var) * a - alpha(disc, s - t) * (-g1**2 + R * g2**2)

        p_dev = float(_rk4_segment(dev_rhs, t, t_end, tail, substeps))
        return (p_dev - p_eq) / epsilon

    if mode != CONSTANT:
        raise DomainError(f"unknown deviation mode {mode!r}")
    if xi == 0:
        raise DomainError("constant deviations are reported per unit xi^2; xi must be non-zero")
    u = float(u_dev)

    def abc_rhs(s, y):
        a, b, _ = y
        w = alpha(disc, s - t)
        if who == 1:
            g = th2(s)
            return np.array([-(2.0 * g + var) * a - w * R * g**2,
                             -g * b - 2.0 * u * a,
                             -u * b + w * u**2])
        g = th1(s)
        return np.array([-(2.0 * g + var) * a + w * g**2,
                         -g * b - 2.0 * u * a,
                         -u * b - w * R * u**2])

    a, b, c = _rk4_segment(abc_rhs, t, t_end, np.array([tail, 0.0, 0.0]), substeps)
    v_dev = a * xi**2 + b * xi + c
    return float((v_dev - p_eq * xi**2) / xi**2 / epsilon)


def richardson_limit(q_coarse: float, q_fine: float) -> float:
    """First-order extrapolation from quotients at ``eps`` and ``eps / 2``."""
    return 2.0 * q_fine - q_coarse


def spike_limit(t: float, u_dev: float, who: int, equilibrium: ClosedLoopPair, params: ModelParams,
                epsilons=(0.1, 0.05, 0.025), **kwargs) -> tuple[float, list]:
    """Quotients at each ``eps`` and their extrapolated ``eps -> 0`` limit.

    ``epsilons`` must halve at every step; the last two levels are extrapolated.
    """
    qs = [spike_check(t, e, u_dev, who, equilibrium, params, **kwargs) for e in epsilons]
    return richardson_limit(qs[-2], qs[-1]), qs
