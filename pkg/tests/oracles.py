"""Independent reference computations used by the tests.

Nothing here imports the solver modules; formulas are written out in the
form they are usually stated rather than the rearranged forms used in the
package.
"""

import math

import numpy as np


def rk4_back(f, T, y_T, t0, steps):
    """Plain backward RK4 of ``y' = f(s, y)`` from ``T`` to ``t0``; returns (grid, values)."""
    h = (T - t0) / steps
    s = T
    y = float(y_T)
    out = [y]
    for _ in range(steps):
        k1 = f(s, y)
        k2 = f(s - h / 2, y - h / 2 * k1)
        k3 = f(s - h / 2, y - h / 2 * k2)
        k4 = f(s - h, y - h * k3)
        y -= h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        s -= h
        out.append(y)
    return np.linspace(T, t0, steps + 1)[::-1], np.array(out[::-1])


def hat_theta2(T, sigma, rho, R, s):
    """Optimal single-player gain in its textbook form (non-degenerate ``rho != sigma^2``)."""
    a = rho - sigma**2
    return -a * math.exp(a * s) / ((1 + R * a) * math.exp(a * T) - math.exp(a * s))


def mix_alpha(lam, rho, gamma, t):
    return lam * np.exp(-rho * t) + (1 - lam) * np.exp(-gamma * t)


def game_riccati_rk4(T, sigma, rho, R, steps):
    """``P' = (rho - sigma^2) P + ((1-R)/R) P^2``, ``P(T) = 1`` by RK4."""
    a = rho - sigma**2
    c = (1 - R) / R
    return rk4_back(lambda s, P: a * P + c * P * P, T, 1.0, 0.0, steps)


def single_riccati_rk4(T, sigma, rho, R, steps):
    """``P' = (rho - sigma^2) P + P^2 / R``, ``P(T) = 1``; the gain is ``-P/R``."""
    a = rho - sigma**2
    return rk4_back(lambda s, P: a * P + P * P / R, T, 1.0, 0.0, steps)
