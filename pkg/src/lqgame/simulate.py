"""Monte Carlo simulation of the closed-loop state.

Each step uses the exact law of the linear SDE with the feedback frozen at
the step midpoint:

    X_{k+1} = X_k exp((theta_k - sigma^2 / 2) dt + sigma sqrt(dt) Z_k).

Path ``p`` draws its normals from a Philox stream keyed by the seed with
``p`` in the top counter word, so an ensemble is bit-identical however the
paths are split across chunks or threads.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .discount import alpha
from .errors import DomainError
from .evaluate import ClosedLoopPair
from .riccati import ModelParams

_STREAM_SHIFT = 192


@dataclass(frozen=True)
class SimConfig:
    n_paths: int
    n_steps: int
    seed: int
    xi: float = 1.0

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1:
            raise DomainError("need at least one path and one step")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class PathEnsemble:
    """Sample paths on ``times``; ``states``, ``u1`` and ``u2`` are ``(n_paths, n_steps+1)``."""

    times: np.ndarray
    states: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    first_path: int = 0

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]


def path_normals(seed: int, path: int, n: int) -> np.ndarray:
    """The ``n`` standard normals that drive path number ``path``."""
    bitgen = np.random.Philox(key=seed, counter=int(path) << _STREAM_SHIFT)
    return np.random.Generator(bitgen).standard_normal(n)


def _simulate_block(pair, params, cfg, times, first, count):
    dt = np.diff(times)
    mid = 0.5 * (times[:-1] + times[1:])
    total = pair.theta1(mid) + pair.theta2(mid)
    Z = np.empty((count, dt.size))
    for i in range(count):
        Z[i] = path_normals(cfg.seed, first + i, dt.size)
    incr = (total - 0.5 * params.var) * dt + params.sigma * np.sqrt(dt) * Z
    states = np.empty((count, times.size))
    states[:, 0] = cfg.xi
    states[:, 1:] = cfg.xi * np.exp(np.cumsum(incr, axis=1))
    u1 = pair.theta1(times) * states
    u2 = pair.theta2(times) * states
    return PathEnsemble(times, states, u1, u2, first)


def simulate_closed_loop(pair: ClosedLoopPair, params: ModelParams, cfg: SimConfig, t: float = 0.0,
                         first_path: int = 0, n_paths: int | None = None) -> PathEnsemble:
    """Simulate paths ``first_path .. first_path + n_paths - 1`` from ``(t, xi)`` to ``T``."""
    if abs(pair.T - params.T) > 1e-12 * params.T:
        raise DomainError("strategy grid does not end at the model horizon")
    if not 0 <= t < params.T:
        raise DomainError("start time must lie in [0, T)")
    count = cfg.n_paths if n_paths is None else int(n_paths)
    times = np.linspace(t, params.T, cfg.n_steps + 1)
    return _simulate_block(pair, params, cfg, times, first_path, count)


def pathwise_payoffs(ensemble: PathEnsemble, params: ModelParams, t: float | None = None):
    """Per-path realised ``J1`` and ``J2``, each accumulated with its own signs."""
    times = ensemble.times
    if t is not None and abs(t - ensemble.t0) > 1e-12 * max(1.0, params.T):
        raise DomainError(f"ensemble starts at {ensemble.t0}, not at {t}")
    if abs(times[-1] - params.T) > 1e-12 * params.T:
        raise DomainError("ensemble grid does not end at the model horizon")
    t0 = ensemble.t0
    disc = params.discount
    w = alpha(disc, times - t0)
    dt = np.diff(times)
    XT2 = ensemble.states[:, -1] ** 2
    run1 = w * (-ensemble.u1**2 + params.R * ensemble.u2**2)
    run2 = w * (ensemble.u1**2 - params.R * ensemble.u2**2)
    aT = alpha(disc, params.T - t0)
    j1 = aT * XT2 + np.sum(0.5 * dt * (run1[:, :-1] + run1[:, 1:]), axis=1)
    j2 = -aT * XT2 + np.sum(0.5 * dt * (run2[:, :-1] + run2[:, 1:]), axis=1)
    return j1, j2


def monte_carlo_value(ensemble: PathEnsemble, params: ModelParams, t: float | None = None):
    """Sample mean of ``J1`` and its standard error."""
    j1, _ = pathwise_payoffs(ensemble, params, t)
    se = float(np.std(j1, ddof=1) / np.sqrt(j1.size)) if j1.size > 1 else float("nan")
    return float(np.mean(j1)), se


@dataclass(frozen=True)
class ValueEstimate:
    mean: float
    stderr: float
    n_paths: int
    max_zero_sum_residual: float


def estimate_value(pair: ClosedLoopPair, params: ModelParams, cfg: SimConfig, t: float = 0.0,
                   chunk: int = 2048, workers: int = 1) -> ValueEstimate:
    """Streamed Monte Carlo estimate of ``J1`` for large path counts.

    Paths are simulated in chunks (optionally on ``workers`` threads); only
    per-path payoffs are kept, in path order, so the result does not depend
    on ``chunk`` or ``workers``.
    """
    starts = list(range(0, cfg.n_paths, chunk))

    def run(first):
        count = min(chunk, cfg.n_paths - first)
        ens = simulate_closed_loop(pair, params, cfg, t, first, count)
        return pathwise_payoffs(ens, params, t)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    j1 = np.concatenate([p[0] for p in parts])
    j2 = np.concatenate([p[1] for p in parts])
    se = float(np.std(j1, ddof=1) / np.sqrt(j1.size)) if j1.size > 1 else float("nan")
    return ValueEstimate(float(np.mean(j1)), se, j1.size, float(np.max(np.abs(j1 + j2))))


def write_ensemble_csv(ensemble: PathEnsemble, path) -> None:
    """Dump with header ``path,step,time,state,u1,u2``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "step", "time", "state", "u1", "u2"])
        for p in range(ensemble.n_paths):
            for k, tk in enumerate(ensemble.times):
                writer.writerow([ensemble.first_path + p, k, repr(float(tk)),
                                 repr(float(ensemble.states[p, k])),
                                 repr(float(ensemble.u1[p, k])), repr(float(ensemble.u2[p, k]))])
