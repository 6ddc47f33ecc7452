"""Command-line front end: ``lqgame solve|figures|verify|simulate``.

Parameters come from an optional flat ``key=value`` config file, then flags.
Exit codes: 0 success, 1 failed verification, 2 invalid configuration,
3 solver failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .discount import DiscountSpec
from .equilibrium import (Partition, game_partition_solve, single_partition_solve,
                          symmetric_kernel)
from .errors import DomainError, SolverError
from .evaluate import ClosedLoopPair, closed_loop_value
from .figures import FIGURE_IDS, build_figure, write_csv, write_svg
from .riccati import ModelParams, game_constant_curves, single_constant_curve
from .simulate import SimConfig, estimate_value, simulate_closed_loop, write_ensemble_csv
from . import verify

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

DEFAULTS = {
    "T": 10.0, "sigma": 0.25, "rho": 0.15, "R": 0.5, "lambda": 0.5, "gamma": 0.3,
    "N": 1000, "paths": 100_000, "steps": 1000, "seed": 42, "xi": 1.0, "workers": 1,
    "out": ".",
}
_TYPES = {"N": int, "paths": int, "steps": int, "seed": int, "workers": int, "out": str}

SOLVE_KINDS = ("single-constant", "single-equilibrium", "game-constant", "game-equilibrium")


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    N: int
    sim: SimConfig
    out: Path
    workers: int


def read_config_file(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise DomainError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def build_config(args) -> RunConfig:
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(read_config_file(args.config))
    for key in DEFAULTS:
        flag = getattr(args, key.replace("lambda", "lam"), None)
        if flag is not None:
            merged[key] = flag
    try:
        v = {k: _TYPES.get(k, float)(x) for k, x in merged.items()}
    except ValueError as exc:
        raise DomainError(f"bad value in configuration: {exc}") from None
    if not 0.0 < v["R"] <= 1.0:
        raise DomainError(f"R = {v['R']} violates the constraint 0 < R <= 1")
    if v["N"] < 1:
        raise DomainError("N must be a positive integer")
    if v["workers"] < 1:
        raise DomainError("workers must be a positive integer")
    lam = v["lambda"]
    if lam == 1.0:
        disc = DiscountSpec.exponential(v["rho"])
    else:
        disc = DiscountSpec.mixture(lam, v["rho"], v["gamma"])
    params = ModelParams(v["T"], v["sigma"], v["R"], disc)
    sim = SimConfig(v["paths"], v["steps"], v["seed"], v["xi"])
    return RunConfig(params, v["N"], sim, Path(v["out"]), v["workers"])


def _fmt(x) -> str:
    return repr(float(x))


def _write_strategy(path, s, theta1, theta2):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "theta1", "theta2"])
        for row in zip(s, theta1, theta2):
            w.writerow([_fmt(x) for x in row])


def _write_kernel(path, kernel):
    grid = kernel.grid
    with open(path, "w") as fh:
        fh.write("t,s,P\n")
        for st, row in zip(kernel.row_starts, kernel.rows):
            t = _fmt(grid[st])
            fh.writelines(f"{t},{s!r},{v!r}\n" for s, v in zip(grid[st:].tolist(), row.tolist()))


def cmd_solve(args, cfg: RunConfig) -> int:
    p = cfg.params
    cfg.out.mkdir(parents=True, exist_ok=True)
    kind = args.kind
    if kind.endswith("constant"):
        p = p.with_discount(DiscountSpec.exponential(p.discount.rho))
        grid = np.linspace(0.0, p.T, cfg.N + 1)
        if kind == "single-constant":
            th1, th2 = np.zeros_like(grid), single_constant_curve(p, grid).values
        else:
            c1, c2 = game_constant_curves(p, grid)
            th1, th2 = c1.values, c2.values
        _write_strategy(cfg.out / "strategy.csv", grid, th1, th2)
        print(f"wrote {cfg.out / 'strategy.csv'}; theta2(0) = {_fmt(th2[0])}")
        return EXIT_OK
    part = Partition.uniform(p.T, cfg.N)
    solver = single_partition_solve if kind == "single-equilibrium" else game_partition_solve
    sol = solver(p, part)
    th1 = sol.theta1.values if kind == "game-equilibrium" else np.zeros(sol.grid.size)
    _write_strategy(cfg.out / "strategy.csv", sol.grid, th1, sol.theta2.values)
    _write_kernel(cfg.out / "kernel.csv", sol.kernel)
    print(f"wrote {cfg.out / 'strategy.csv'} and {cfg.out / 'kernel.csv'}; "
          f"theta2(0) = {_fmt(sol.theta2.values[0])}")
    if kind == "game-equilibrium" and p.R == 1.0:
        err = sol.kernel.sup_error(lambda t, s: symmetric_kernel(p, t, s))
        print(f"sup-error against the exact R = 1 kernel: {err:.6e}")
    return EXIT_OK


def cmd_figures(args, cfg: RunConfig) -> int:
    ids = FIGURE_IDS if args.ids in ([], None) else args.ids
    bad = [i for i in ids if i not in FIGURE_IDS]
    if bad:
        print(f"error: unknown figure id(s) {bad}; choose from 1..8", file=sys.stderr)
        return EXIT_CONFIG
    cfg.out.mkdir(parents=True, exist_ok=True)
    for i in ids:
        fig = build_figure(i, cfg.params, N=cfg.N)
        write_csv(fig, cfg.out / f"fig{i}.csv")
        write_svg(fig, cfg.out / f"fig{i}.svg")
        print(f"fig{i}: {len(fig.columns)} curves, {fig.s.size} points")
    return EXIT_OK


@contextlib.contextmanager
def _stderr_timer(name):
    t0 = time.perf_counter()
    yield
    print(f"[{name}] {time.perf_counter() - t0:.2f} s", file=sys.stderr)


def cmd_verify(args, cfg: RunConfig) -> int:
    p = cfg.params
    if p.discount.is_exponential:
        raise DomainError("verify needs a mixture discount (lambda < 1)")
    checks = verify.run_all(p, cfg.sim.seed, cfg.sim.n_paths, cfg.sim.n_steps, cfg.workers,
                            timer=_stderr_timer)
    d = p.discount
    header = (f"verify T={p.T:g} sigma={p.sigma:g} rho={d.rho:g} R={p.R:g} "
              f"lambda={d.lam:g} gamma={d.gamma:g} seed={cfg.sim.seed} "
              f"paths={cfg.sim.n_paths} steps={cfg.sim.n_steps}")
    report = verify.render(checks, header)
    sys.stdout.write(report)
    if args.report:
        Path(args.report).write_text(report)
    failed = [c for c in checks if not c.passed]
    for c in failed:
        print(f"failed: {c.suite}: {c.name}", file=sys.stderr)
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_simulate(args, cfg: RunConfig) -> int:
    p = cfg.params
    sol = game_partition_solve(p, Partition.uniform(p.T, cfg.N))
    pair = ClosedLoopPair(sol.theta1, sol.theta2)
    est = estimate_value(pair, p, cfg.sim, workers=cfg.workers)
    exact = closed_loop_value(0.0, pair, p).value(cfg.sim.xi)
    print(f"J1 Monte Carlo  = {est.mean:.10f} +- {est.stderr:.3e} ({est.n_paths} paths)")
    print(f"J1 Lyapunov     = {exact:.10f}")
    print(f"max |J1 + J2|   = {est.max_zero_sum_residual:.3e}")
    if args.dump:
        cfg.out.mkdir(parents=True, exist_ok=True)
        count = min(args.dump, cfg.sim.n_paths)
        ens = simulate_closed_loop(pair, p, cfg.sim, n_paths=count)
        write_ensemble_csv(ens, cfg.out / "paths.csv")
        print(f"wrote {count} paths to {cfg.out / 'paths.csv'}")
    return EXIT_OK


def _add_common(sp):
    sp.add_argument("--config", help="flat key=value file; flags override it")
    sp.add_argument("--T", type=float)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--rho", type=float)
    sp.add_argument("--R", type=float)
    sp.add_argument("--lambda", dest="lam", type=float, help="mixture weight; 1 means exponential")
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--N", type=int, help="partition size / output points")
    sp.add_argument("--paths", type=int)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--xi", type=float)
    sp.add_argument("--workers", type=int, help="threads for Monte Carlo")
    sp.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lqgame", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("solve", help="solve for closed-loop gains")
    sp.add_argument("kind", choices=SOLVE_KINDS)
    _add_common(sp)
    sp = sub.add_parser("figures", help="write figN.csv and figN.svg")
    sp.add_argument("ids", nargs="*", type=int, help="figure ids (default: all)")
    _add_common(sp)
    sp = sub.add_parser("verify", help="run the verification suites")
    sp.add_argument("--report", help="also write the report to this file")
    _add_common(sp)
    sp = sub.add_parser("simulate", help="Monte Carlo value of the game equilibrium")
    sp.add_argument("--dump", type=int, default=0, metavar="K", help="write the first K paths to paths.csv")
    _add_common(sp)
    return parser


COMMANDS = {"solve": cmd_solve, "figures": cmd_figures, "verify": cmd_verify, "simulate": cmd_simulate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](args, cfg)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
