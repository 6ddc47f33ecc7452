"""Acceptance criteria, one test each.

Every test prints a single ``[criterion N] PASS|FAIL ...`` line (visible
even without ``-s``) and then asserts. Run with ``pytest tests/test_acceptance.py``.
"""

import contextlib
import time

import numpy as np
import pytest

from lqgame import cli
from lqgame.discount import DiscountSpec
from lqgame.equilibrium import (Partition, game_partition_solve, reconstruct_kernel,
                                single_partition_solve, vdie_solve)
from lqgame.evaluate import ClosedLoopPair, closed_loop_value, spike_limit
from lqgame.figures import FIG8_CHECK_LIMIT, build_figure, ordering_slacks
from lqgame.riccati import ModelParams, game_constant_gains, single_constant_gain
from lqgame.simulate import SimConfig, estimate_value

from oracles import game_riccati_rk4, mix_alpha, single_riccati_rk4

BASE_MIX = DiscountSpec.mixture(0.5, 0.15, 0.3)
BASELINE = ModelParams(10.0, 0.25, 0.5, BASE_MIX)
BASELINE_EXP = ModelParams(10.0, 0.25, 0.5, DiscountSpec.exponential(0.15))


class Report:
    def __init__(self, number, title):
        self.number, self.title = number, title
        self.items = []
        self.ok = True

    def check(self, label, value, passed):
        self.items.append(f"{label}={value:.3e}")
        self.ok = self.ok and bool(passed)


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def run(number, title, budget=None):
        rep = Report(number, title)
        t0 = time.perf_counter()
        failure = None
        try:
            yield rep
        except Exception as exc:  # report, then re-raise below
            failure = exc
            rep.ok = False
        elapsed = time.perf_counter() - t0
        if budget is not None:
            rep.check("runtime_s", elapsed, elapsed < budget)
        status = "PASS" if rep.ok else "FAIL"
        with capsys.disabled():
            print(f"\n[criterion {number}] {status} {title}: " + ", ".join(rep.items))
        if failure is not None:
            raise failure
        assert rep.ok, f"criterion {number} failed: {rep.items}"
    return run


def test_criterion_1_closed_forms(criterion):
    with criterion(1, "closed-form gains vs direct RK4 of their Riccati equations", budget=1.0) as rep:
        grid, Pg = game_riccati_rk4(10.0, 0.25, 0.15, 0.5, 10_000)
        _, Ps = single_riccati_rk4(10.0, 0.25, 0.15, 0.5, 10_000)
        th1, th2 = game_constant_gains(BASELINE_EXP, grid)
        e_game = max(np.max(np.abs(th1 - Pg)), np.max(np.abs(th2 + Pg / 0.5)))
        e_single = np.max(np.abs(single_constant_gain(BASELINE_EXP, grid) + Ps / 0.5))
        rep.check("single_sup", e_single, e_single <= 1e-8)
        rep.check("game_sup", e_game, e_game <= 1e-8)
        t1, t2 = game_constant_gains(BASELINE_EXP, 10.0)
        term = max(abs(single_constant_gain(BASELINE_EXP, 10.0) + 2.0), abs(t2 + 2.0), abs(t1 - 1.0))
        rep.check("terminal", term, term <= 1e-12)


def test_criterion_2_symmetric_exactness(criterion):
    params = ModelParams(10.0, 0.25, 1.0, BASE_MIX)

    def exact(t, s):
        return np.exp(0.0625 * (10.0 - s)) * mix_alpha(0.5, 0.15, 0.3, 10.0 - t)

    with criterion(2, "R = 1 kernel vs closed form, first-order rate", budget=30.0) as rep:
        errs = [game_partition_solve(params, Partition.uniform(10.0, N)).kernel.sup_error(exact)
                for N in (1000, 2000)]
        rep.check("sup_N1000", errs[0], errs[0] <= 1e-2)
        ratio = errs[1] / errs[0]
        rep.check("ratio", ratio, 0.35 <= ratio <= 0.65)


def test_criterion_3_cross_oracle_diagonal(criterion):
    with criterion(3, "VDIE diagonal vs partition diagonal and reconstruction", budget=60.0) as rep:
        sol = game_partition_solve(BASELINE, Partition.uniform(10.0, 2000))
        gamma = vdie_solve(BASELINE, sol.grid)
        cross = np.max(np.abs(gamma.values - sol.kernel.diagonal()))
        rep.check("gamma_vs_partition", cross, cross <= 2e-3)
        fine = vdie_solve(BASELINE, np.linspace(0.0, 10.0, 4001))
        recon = np.max(np.abs(reconstruct_kernel(fine, BASELINE).diagonal() - fine.values))
        rep.check("reconstruct_vs_gamma", recon, recon <= 1e-6)


def test_criterion_4_a_priori_bounds(criterion):
    rng = np.random.default_rng(20240601)
    with criterion(4, "a-priori kernel bounds over a 20-point random sweep") as rep:
        worst = {"nonneg": np.inf, "envelope": np.inf, "diagonal": np.inf}
        for _ in range(20):
            rho = rng.uniform(0.01, 0.4)
            p = ModelParams(rng.uniform(1.0, 15.0), rng.uniform(0.0, 0.6), rng.uniform(0.05, 1.0),
                            DiscountSpec.mixture(rng.uniform(0.05, 0.95), rho, rho + rng.uniform(0.01, 0.5)))
            for solver in (single_partition_solve, game_partition_solve):
                k = solver(p, Partition.uniform(p.T, 200)).kernel
                env = np.exp(p.var * (p.T - k.grid))
                diag = k.diagonal()
                for st, row in zip(k.row_starts, k.rows):
                    worst["nonneg"] = min(worst["nonneg"], row.min())
                    worst["envelope"] = min(worst["envelope"], np.min(env[st:] - row))
                    worst["diagonal"] = min(worst["diagonal"], np.min(diag[st:] - row))
        for name, v in worst.items():
            rep.check(name, v, v >= -1e-10)


def test_criterion_5_spike_variations(criterion):
    times = (0.0, 2.0, 4.0, 6.0, 8.0)
    shifts = (-1.0, -0.3, 0.0, 0.3, 1.0)
    with criterion(5, "spike-variation quotients on a 5x5 (t, u_dev) grid", budget=60.0) as rep:
        part = Partition.uniform(10.0, 400)
        game = game_partition_solve(BASELINE, part)
        pair = ClosedLoopPair(game.theta1, game.theta2)
        single = single_partition_solve(BASELINE, part)
        lone = ClosedLoopPair.single(single.theta2)
        q1 = [spike_limit(t, game.theta1(t) + du, 1, pair, BASELINE)[0] for t in times for du in shifts]
        q2 = [spike_limit(t, game.theta2(t) + du, 2, pair, BASELINE)[0] for t in times for du in shifts]
        qs = [spike_limit(t, single.theta2(t) + du, 2, lone, BASELINE)[0] for t in times for du in shifts]
        rep.check("max_player1", max(q1), max(q1) <= 1e-3)
        rep.check("min_player2", min(q2), min(q2) >= -1e-3)
        rep.check("min_single", min(qs), min(qs) >= -1e-3)


def test_criterion_6_degeneracy(criterion):
    near = BASELINE_EXP.with_discount(DiscountSpec.mixture(1.0 - 1e-12, 0.15, 0.3))
    with criterion(6, "lambda = 1 - 1e-12 collapses onto the constant-rate strategies") as rep:
        part = Partition.uniform(10.0, 2000)
        s = single_partition_solve(near, part)
        g = game_partition_solve(near, part)
        es = np.max(np.abs(s.theta2.values - single_constant_gain(BASELINE_EXP, s.grid)))
        th1, th2 = game_constant_gains(BASELINE_EXP, g.grid)
        eg = max(np.max(np.abs(g.theta2.values - th2)), np.max(np.abs(g.theta1.values - th1)))
        rep.check("single_sup", es, es <= 1e-6)
        rep.check("game_sup", eg, eg <= 1e-6)


def test_criterion_7_figure_orderings(criterion):
    with criterion(7, "sandwich and intensification orderings at every emitted point") as rep:
        N = cli.DEFAULTS["N"]
        for number in (3, 5, 7, 8):
            fig = build_figure(number, BASELINE, N=N)
            c = fig.columns
            if number in (3, 8):
                mid, lo, hi = ((c["tilde_theta2"], c["hat_theta2[rho]"], c["hat_theta2[rho_eff]"]) if number == 3
                               else (c["bar_theta2"], c["star_theta2[rho]"], c["star_theta2[rho_eff]"]))
                m = fig.s <= FIG8_CHECK_LIMIT if number == 8 else np.ones(fig.s.size, bool)
                slack = min(np.min((mid - lo)[m]), np.min((hi - mid)[m]))
            else:
                game, one = ("star_theta2", "hat_theta2") if number == 5 else ("bar_theta2", "tilde_theta2")
                # every panel: each game column against its single-player twin, where defined
                slack = min(np.nanmin(np.abs(c[k]) - np.abs(c[one + k[len(game):]]))
                            for k in c if k.startswith(game + "["))
            rep.check(f"fig{number}", slack, slack >= 0.0)
        # same claims on the finer mesh used elsewhere in the acceptance runs
        fine = min(min(v for k, v in ordering_slacks(build_figure(n, BASELINE, N=2000, sweeps={"T": (10.0,)})).items()
                       if not k.endswith("_full")) for n in (3, 5, 7, 8))
        rep.check("N2000_min", fine, fine >= 0.0)


def test_criterion_8_monte_carlo(criterion):
    with criterion(8, "Monte Carlo J1 along the game equilibrium vs Lyapunov value", budget=120.0) as rep:
        sol = game_partition_solve(BASELINE, Partition.uniform(10.0, 400))
        pair = ClosedLoopPair(sol.theta1, sol.theta2)
        est = estimate_value(pair, BASELINE, SimConfig(100_000, 1000, 42, 1.0), workers=4)
        exact = closed_loop_value(0.0, pair, BASELINE).p
        z = abs(est.mean - exact) / est.stderr
        rep.check("abs_z", z, z <= 3.0)
        rep.check("zero_sum_residual", est.max_zero_sum_residual, est.max_zero_sum_residual == 0.0)


def test_criterion_9_reproducible_verify(criterion, capsys):
    argv = ["verify", "--seed", "42", "--paths", "4000", "--steps", "200"]
    with criterion(9, "verify --seed 42 twice, different thread counts, identical report") as rep:
        reports = []
        for workers in ("1", "4"):
            capsys.readouterr()
            code = cli.main(argv + ["--workers", workers])
            reports.append((code, capsys.readouterr().out))
        same = reports[0][1].encode() == reports[1][1].encode()
        rep.check("identical", float(same), same)
        rep.check("exit_code", float(reports[0][0]), reports[0][0] == 0)
