"""Numerical verification suites behind ``lqgame verify``.

Each suite returns :class:`Check` rows; the report is a plain-text table
whose content depends only on the inputs (timings are kept out of it).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discount import DiscountSpec
from .equilibrium import (Partition, game_partition_solve, reconstruct_kernel,
                          single_partition_solve, symmetric_kernel, vdie_solve)
from .evaluate import ClosedLoopPair, closed_loop_value, spike_limit
from .figures import build_figure, ordering_slacks
from .riccati import ModelParams, game_constant_gains, rk4_backward, single_constant_gain
from .simulate import SimConfig, estimate_value


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    value: float
    threshold: str
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.suite:<14} {self.name:<34} {self.value: .6e}  {self.threshold}"


def _exp_version(params: ModelParams) -> ModelParams:
    return params.with_discount(DiscountSpec.exponential(params.discount.rho))


def closed_forms(params: ModelParams, steps: int = 10_000) -> list[Check]:
    """Closed-form gains against backward RK4 of their Riccati equations."""
    p = _exp_version(params)
    a = p.discount.rho - p.var
    grid = np.linspace(0.0, p.T, steps + 1)
    single = rk4_backward(lambda s, P: a * P + P * P / p.R, grid, 1.0)
    game = rk4_backward(lambda s, P: a * P + (1.0 - p.R) / p.R * P * P, grid, 1.0)
    e_single = np.max(np.abs(-single / p.R - single_constant_gain(p, grid)))
    th1, th2 = game_constant_gains(p, grid)
    e_game = max(np.max(np.abs(game - th1)), np.max(np.abs(-game / p.R - th2)))
    term = max(abs(single_constant_gain(p, p.T) + 1 / p.R),
               abs(game_constant_gains(p, p.T)[1] + 1 / p.R),
               abs(game_constant_gains(p, p.T)[0] - 1.0))
    return [Check("closed-form", "single vs RK4 sup-error", e_single, "<= 1e-8", e_single <= 1e-8),
            Check("closed-form", "game vs RK4 sup-error", e_game, "<= 1e-8", e_game <= 1e-8),
            Check("closed-form", "terminal values", term, "<= 1e-12", term <= 1e-12)]


def symmetric(params: ModelParams, N: int = 1000) -> list[Check]:
    """Partition kernel at R = 1 against the exact kernel, at N and 2N."""
    p = ModelParams(params.T, params.sigma, 1.0, params.discount)
    errs = []
    for n in (N, 2 * N):
        sol = game_partition_solve(p, Partition.uniform(p.T, n))
        errs.append(sol.kernel.sup_error(lambda t, s: symmetric_kernel(p, t, s)))
    ratio = errs[1] / errs[0]
    return [Check("symmetric", f"sup-error N={N}", errs[0], "<= 1e-2", errs[0] <= 1e-2),
            Check("symmetric", f"error ratio N={N}->{2 * N}", ratio, "in [0.35, 0.65]",
                  0.35 <= ratio <= 0.65)]


def diagonal(params: ModelParams, N: int = 2000) -> list[Check]:
    """VDIE diagonal against the partition diagonal and the reconstructed kernel."""
    sol = game_partition_solve(params, Partition.uniform(params.T, N))
    gamma = vdie_solve(params, sol.grid)
    cross = float(np.max(np.abs(gamma.values - sol.kernel.diagonal())))
    fine = vdie_solve(params, np.linspace(0.0, params.T, 2 * N + 1))
    recon = float(np.max(np.abs(reconstruct_kernel(fine, params).diagonal() - fine.values)))
    return [Check("diagonal", f"VDIE vs partition N={N}", cross, "<= 2e-3", cross <= 2e-3),
            Check("diagonal", "reconstructed vs VDIE", recon, "<= 1e-6", recon <= 1e-6)]


def random_instances(rng: np.random.Generator, count: int) -> list[ModelParams]:
    out = []
    for _ in range(count):
        rho = rng.uniform(0.01, 0.4)
        out.append(ModelParams(rng.uniform(1.0, 15.0), rng.uniform(0.0, 0.6), rng.uniform(0.05, 1.0),
                               DiscountSpec.mixture(rng.uniform(0.05, 0.95), rho, rho + rng.uniform(0.01, 0.5))))
    return out


def bounds(seed: int, count: int = 20, N: int = 200) -> list[Check]:
    """A-priori kernel bounds over a seeded random parameter sweep."""
    rng = np.random.default_rng(seed)
    worst = {"nonneg": np.inf, "envelope": np.inf, "diagonal": np.inf}
    for p in random_instances(rng, count):
        for solver in (single_partition_solve, game_partition_solve):
            sl = solver(p, Partition.uniform(p.T, N)).kernel.bound_slacks(p.sigma)
            for k in worst:
                worst[k] = min(worst[k], sl[k])
    return [Check("bounds", f"min slack {k} ({count} draws)", v, ">= -1e-10", v >= -1e-10)
            for k, v in worst.items()]


SPIKE_TIMES = (0.0, 2.0, 4.0, 6.0, 8.0)
SPIKE_SHIFTS = (-1.0, -0.3, 0.0, 0.3, 1.0)


def spikes(params: ModelParams, N: int = 400) -> list[Check]:
    """Extrapolated spike quotients on a 5x5 grid of (t, deviation)."""
    part = Partition.uniform(params.T, N)
    game = game_partition_solve(params, part)
    pair = ClosedLoopPair(game.theta1, game.theta2)
    single = single_partition_solve(params, part)
    lone = ClosedLoopPair.single(single.theta2)
    worst1 = worst2 = worst_s = -np.inf
    for t in SPIKE_TIMES:
        for du in SPIKE_SHIFTS:
            worst1 = max(worst1, spike_limit(t, game.theta1(t) + du, 1, pair, params)[0])
            worst2 = max(worst2, -spike_limit(t, game.theta2(t) + du, 2, pair, params)[0])
            worst_s = max(worst_s, -spike_limit(t, single.theta2(t) + du, 2, lone, params)[0])
    return [Check("spike", "max player-1 quotient", worst1, "<= 1e-3", worst1 <= 1e-3),
            Check("spike", "min player-2 quotient", -worst2, ">= -1e-3", -worst2 >= -1e-3),
            Check("spike", "min single-player quotient", -worst_s, ">= -1e-3", -worst_s >= -1e-3)]


def degeneracy(params: ModelParams, N: int = 2000) -> list[Check]:
    """A mixture with lambda -> 1 must collapse onto the constant-rate closed forms."""
    base = _exp_version(params)
    d = params.discount
    near = base.with_discount(DiscountSpec.mixture(1.0 - 1e-12, d.rho, d.gamma if d.gamma else 2 * d.rho))
    part = Partition.uniform(params.T, N)
    s = single_partition_solve(near, part)
    g = game_partition_solve(near, part)
    es = float(np.max(np.abs(s.theta2.values - single_constant_gain(base, s.grid))))
    eg = float(np.max(np.abs(g.theta2.values - game_constant_gains(base, g.grid)[1])))
    return [Check("degeneracy", "single sup-error", es, "<= 1e-6", es <= 1e-6),
            Check("degeneracy", "game sup-error", eg, "<= 1e-6", eg <= 1e-6)]


def orderings(params: ModelParams, N: int = 2000) -> list[Check]:
    """Sandwich and intensification orderings at the baseline curves."""
    base_only = {"T": (params.T,)}
    out = []
    for number in (3, 5, 7, 8):
        fig = build_figure(number, params, N=N, sweeps=base_only)
        sl = ordering_slacks(fig)
        keys = [k for k in sl if not k.endswith("_full")]
        v = min(sl[k] for k in keys)
        scope = " (s<=8.5)" if number == 8 else ""
        out.append(Check("ordering", f"fig{number} min slack{scope}", v, ">= 0", v >= 0.0))
    return out


def monte_carlo(params: ModelParams, paths: int, steps: int, seed: int, workers: int = 1,
                N: int = 400) -> list[Check]:
    """Monte Carlo value of the game equilibrium against the Lyapunov evaluator."""
    sol = game_partition_solve(params, Partition.uniform(params.T, N))
    pair = ClosedLoopPair(sol.theta1, sol.theta2)
    est = estimate_value(pair, params, SimConfig(paths, steps, seed, 1.0), workers=workers)
    exact = closed_loop_value(0.0, pair, params).p
    z = abs(est.mean - exact) / est.stderr
    return [Check("monte-carlo", f"|z| ({paths} paths)", z, "<= 3", z <= 3.0),
            Check("monte-carlo", "max |J1 + J2| pathwise", est.max_zero_sum_residual, "== 0",
                  est.max_zero_sum_residual == 0.0)]


def run_all(params: ModelParams, seed: int, paths: int, steps: int, workers: int = 1,
            timer=None) -> list[Check]:
    suites = [
        ("closed-form", lambda: closed_forms(params)),
        ("symmetric", lambda: symmetric(params)),
        ("diagonal", lambda: diagonal(params)),
        ("bounds", lambda: bounds(seed)),
        ("spike", lambda: spikes(params)),
        ("degeneracy", lambda: degeneracy(params)),
        ("ordering", lambda: orderings(params)),
        ("monte-carlo", lambda: monte_carlo(params, paths, steps, seed, workers)),
    ]
    checks = []
    for name, run in suites:
        if timer is not None:
            with timer(name):
                checks.extend(run())
        else:
            checks.extend(run())
    return checks


def render(checks: list[Check], header: str) -> str:
    lines = [header, "-" * len(header)]
    lines += [c.line() for c in checks]
    failed = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - failed}/{len(checks)} checks passed")
    return "\n".join(lines) + "\n"
