"""Equilibrium Riccati kernels under present-biased discounting.

Two independent routes to the two-time kernel ``P(t, s)`` on
``{0 <= t <= s <= T}``:

* the backward partition recursion (:func:`single_partition_solve`,
  :func:`game_partition_solve`), where self ``t_k`` commits on
  ``[t_k, t_{k+1}]`` and takes the already-built strategy on ``[t_{k+1}, T]``
  as given;
* the diagonal ``Gamma(t) = P(t, t)`` from the Volterra
  differential-integral equation (:func:`vdie_solve`), lifted back to the
  full kernel by :func:`reconstruct_kernel`.

For ``R = 1`` the game kernel is known exactly (:func:`symmetric_kernel`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discount import alpha
from .errors import DomainError, RefinementError, SolverError
from .riccati import ModelParams, StrategyCurve, lyapunov_envelope, rk4_backward

DEFAULT_SUBGRID = 8

# relative slack allowed on the a-priori envelope before a solve is rejected
_ENVELOPE_RTOL = 1e-8


@dataclass(frozen=True)
class Partition:
    """Strictly increasing times ``0 = t_0 < ... < t_N = T``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise DomainError("a partition needs at least two points")
        if pts[0] != 0.0:
            raise DomainError("a partition must start at 0")
        if np.any(np.diff(pts) <= 0):
            raise DomainError("partition points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, T: float, N: int) -> "Partition":
        if N < 1:
            raise DomainError(f"need N >= 1 subintervals, got {N}")
        pts = np.linspace(0.0, T, N + 1)
        pts[-1] = T
        return cls(pts)

    @property
    def N(self) -> int:
        return self.points.size - 1

    @property
    def T(self) -> float:
        return float(self.points[-1])

    @property
    def mesh(self) -> float:
        return float(np.max(np.diff(self.points)))

    def fine_grid(self, subgrid_factor: int) -> np.ndarray:
        """Each subinterval split into ``subgrid_factor`` equal panels.

        Partition point ``t_k`` sits at fine index ``k * subgrid_factor``.
        """
        m = int(subgrid_factor)
        if m < 1:
            raise DomainError("subgrid_factor must be >= 1")
        frac = np.arange(m) / m
        left = self.points[:-1, None] + np.diff(self.points)[:, None] * frac[None, :]
        return np.concatenate([left.ravel(), self.points[-1:]])


@dataclass(frozen=True)
class TriangularKernel:
    """Two-time function sampled on ``{(t_i, s_j): t_i <= s_j}`` of a shared grid.

    Rows are stored only at the fine indices ``row_starts``; row ``r`` holds
    ``P(t, s_j)`` for ``j >= row_starts[r]`` and is reused for every ``t_i``
    with ``row_starts[r] <= i < row_starts[r+1]`` (the kernel is piecewise
    constant in ``t`` between materialised rows). A kernel with a row at every
    grid index is an ordinary triangle.
    """

    grid: np.ndarray
    row_starts: np.ndarray
    rows: tuple

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        starts = np.asarray(self.row_starts, dtype=int)
        if starts.size == 0 or starts[0] != 0 or np.any(np.diff(starts) <= 0):
            raise DomainError("row_starts must begin at 0 and increase")
        if starts[-1] >= grid.size:
            raise DomainError("row start beyond the grid")
        if len(self.rows) != starts.size:
            raise DomainError("one row per row start expected")
        rows = tuple(np.asarray(r, dtype=float) for r in self.rows)
        for st, row in zip(starts, rows):
            if row.size != grid.size - st:
                raise DomainError("row length does not match its start index")
            if not np.all(np.isfinite(row)):
                raise DomainError("kernel values must be finite")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "row_starts", starts)
        object.__setattr__(self, "rows", rows)

    @property
    def T(self) -> float:
        return float(self.grid[-1])

    @property
    def row_times(self) -> np.ndarray:
        return self.grid[self.row_starts]

    def row_index(self, i: int) -> int:
        return int(np.searchsorted(self.row_starts, i, side="right") - 1)

    def row(self, i: int) -> np.ndarray:
        """``P(t_i, s_j)`` for ``j >= i``."""
        r = self.row_index(i)
        return self.rows[r][i - self.row_starts[r]:]

    def value(self, i: int, j: int) -> float:
        if j < i:
            raise DomainError("kernel is only defined for t <= s")
        r = self.row_index(i)
        return float(self.rows[r][j - self.row_starts[r]])

    def diagonal(self) -> np.ndarray:
        n = self.grid.size
        idx = np.arange(n)
        r = np.searchsorted(self.row_starts, idx, side="right") - 1
        out = np.empty(n)
        for k, st in enumerate(self.row_starts):
            sel = r == k
            out[sel] = self.rows[k][idx[sel] - st]
        return out

    def dense(self) -> np.ndarray:
        """Square array ``out[i, j] = P(t_i, s_j)``, NaN below the diagonal."""
        n = self.grid.size
        out = np.full((n, n), np.nan)
        for i in range(n):
            out[i, i:] = self.row(i)
        return out

    def sup_error(self, reference) -> float:
        """``max |P(t_i, s_j) - reference(t_i, s_j)|`` over every grid pair ``i <= j``.

        ``reference(t, s)`` receives a scalar ``t`` and an array ``s``.
        """
        worst = 0.0
        for i in range(self.grid.size):
            s = self.grid[i:]
            worst = max(worst, float(np.max(np.abs(self.row(i) - reference(self.grid[i], s)))))
        return worst

    def bound_slacks(self, sigma: float) -> dict:
        """Smallest slack of each a-priori bound over all stored nodes.

        Keys: ``nonneg`` (min P), ``envelope`` (min of ``exp(sigma^2 (T-s)) - P``),
        ``diagonal`` (min of ``P(s, s) - P(t, s)``). Negative means violated.
        """
        diag = self.diagonal()
        env = lyapunov_envelope(sigma, self.T, self.grid)
        nonneg = envelope = dominance = math.inf
        for st, row in zip(self.row_starts, self.rows):
            nonneg = min(nonneg, float(row.min()))
            envelope = min(envelope, float(np.min(env[st:] - row)))
            dominance = min(dominance, float(np.min(diag[st:] - row)))
        return {"nonneg": nonneg, "envelope": envelope, "diagonal": dominance}


@dataclass(frozen=True)
class GammaCurve:
    """Diagonal ``Gamma(t) = P(t, t)`` of the game kernel."""

    grid: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        return np.interp(t, self.grid, self.values)


@dataclass(frozen=True)
class PartitionSolution:
    """Output of a partition recursion.

    ``theta1`` is identically zero for the single-player problem.
    """

    partition: Partition
    subgrid_factor: int
    kernel: TriangularKernel
    theta1: StrategyCurve
    theta2: StrategyCurve

    @property
    def grid(self) -> np.ndarray:
        return self.kernel.grid


def _panel_sums_from_right(panel):
    """``out[i] = sum(panel[i:])`` with a trailing zero."""
    out = np.zeros(panel.size + 1)
    out[:-1] = np.cumsum(panel[::-1])[::-1]
    return out


def _partition_solve(params: ModelParams, partition: Partition, subgrid_factor: int, game: bool):
    if abs(partition.T - params.T) > 1e-12 * params.T:
        raise DomainError("partition must end at the model horizon")
    m = int(subgrid_factor)
    N = partition.N
    grid = partition.fine_grid(m)
    M = grid.size - 1
    T, R, var = params.T, params.R, params.var
    disc = params.discount
    pts = partition.points
    h = np.diff(grid)
    # quadratic weight of the fresh-interval Riccati equation
    weight = (1.0 - R) if game else 1.0

    # panel p covers [grid[p], grid[p+1]]; gains at its two ends as computed by
    # the row that owns it, so jumps at partition points are kept exact
    th1_l = np.zeros(M)
    th1_r = np.zeros(M)
    th2_l = np.zeros(M)
    th2_r = np.zeros(M)
    # A[i] = int_{s_i}^T (2 theta1 + 2 theta2 + sigma^2)
    A = np.zeros(M + 1)
    rows = [None] * N
    env = lyapunov_envelope(params.sigma, T, grid)

    for k in range(N - 1, -1, -1):
        tk = pts[k]
        a0, a1 = k * m, (k + 1) * m
        tail = np.empty(0)
        if k == N - 1:
            p_end = alpha(disc, T - tk)
        else:
            # Lyapunov extension over [t_{k+1}, T] along the committed gains
            seg = slice(a1, M)
            cl = -th1_l[seg] ** 2 + R * th2_l[seg] ** 2
            cr = -th1_r[seg] ** 2 + R * th2_r[seg] ** 2
            eA = np.exp(-A[a1:])
            dl = alpha(disc, grid[a1:M] - tk)
            dr = alpha(disc, grid[a1 + 1:] - tk)
            panel = 0.5 * h[seg] * (eA[:-1] * dl * cl + eA[1:] * dr * cr)
            tail = np.exp(A[a1:]) * (alpha(disc, T - tk) + _panel_sums_from_right(panel))
            p_end = tail[0]

        # fresh interval [t_k, t_{k+1}]: reciprocal of the linear equation for 1/P
        s = grid[a0:a1 + 1]
        f = np.exp(-var * (s - tk)) / alpha(disc, s - tk)
        panel = 0.5 * h[a0:a1] * (f[:-1] + f[1:])
        integral = np.exp(var * (s - tk)) * _panel_sums_from_right(panel) * weight / R
        denom = np.exp(-var * (s[-1] - s)) / p_end + integral
        if not np.all(denom > 0):
            raise SolverError(f"non-positive reciprocal denominator on [{tk:.6g}, {pts[k + 1]:.6g}]")
        fresh = 1.0 / denom
        fresh[-1] = p_end
        a_loc = alpha(disc, s - tk)
        g2 = -fresh / (a_loc * R)
        g1 = fresh / a_loc if game else np.zeros_like(fresh)
        th1_l[a0:a1], th1_r[a0:a1] = g1[:-1], g1[1:]
        th2_l[a0:a1], th2_r[a0:a1] = g2[:-1], g2[1:]
        drift = 2.0 * (g1 + g2) + var
        for i in range(a1 - 1, a0 - 1, -1):
            A[i] = A[i + 1] + 0.5 * h[i] * (drift[i - a0] + drift[i - a0 + 1])

        row = np.concatenate([fresh, tail[1:]])
        if game:
            if np.any(row < -_ENVELOPE_RTOL) or np.any(row > env[a0:] * (1 + _ENVELOPE_RTOL)):
                raise SolverError(f"kernel row at t={tk:.6g} left [0, exp(sigma^2 (T-s))]")
        elif np.any(row < 0):
            raise SolverError(f"negative kernel value in row t={tk:.6g}")
        rows[k] = row

    starts = np.arange(N) * m
    kernel = TriangularKernel(grid, starts, tuple(rows))
    theta1 = StrategyCurve(grid, np.append(th1_l, th1_r[-1]), np.insert(th1_r, 0, th1_l[0]))
    theta2 = StrategyCurve(grid, np.append(th2_l, th2_r[-1]), np.insert(th2_r, 0, th2_l[0]))
    return PartitionSolution(partition, m, kernel, theta1, theta2)


def single_partition_solve(params: ModelParams, partition: Partition,
                           subgrid_factor: int = DEFAULT_SUBGRID) -> PartitionSolution:
    """Backward recursion for the lone present-biased player 2.

    On the fresh subinterval ``[t_k, t_{k+1}]``

        P(t_k; s) = 1 / ( e^{-sigma^2 (t_{k+1}-s)} / P(t_k; t_{k+1})
                          + int_s^{t_{k+1}} e^{-sigma^2 (r-s)} / (alpha(r-t_k) R) dr ),

    and on ``[t_{k+1}, T]`` row ``k`` is the value of the committed strategy
    ``theta2(s) = -P(t_j; s) / (alpha(s - t_j) R)`` discounted from ``t_k``.
    Integrals use the composite trapezoid rule on ``subgrid_factor`` panels per
    subinterval.
    """
    return _partition_solve(params, partition, subgrid_factor, game=False)


def game_partition_solve(params: ModelParams, partition: Partition,
                         subgrid_factor: int = DEFAULT_SUBGRID) -> PartitionSolution:
    """Backward recursion of precommitment zero-sum games.

    Same construction as :func:`single_partition_solve` with the fresh-interval
    weight ``(1-R)/R``, running cost ``-theta1^2 + R theta2^2`` and drift
    ``2(theta1 + theta2) + sigma^2``; gains are ``P/alpha`` and
    ``-P/(R alpha)``. Rows leaving ``[0, exp(sigma^2 (T-s))]`` raise
    :class:`SolverError`.
    """
    return _partition_solve(params, partition, subgrid_factor, game=True)


@dataclass
class RefinementResult:
    solution: PartitionSolution
    N: int
    mesh: float
    distances: list = field(default_factory=list)
    orders: list = field(default_factory=list)

    @property
    def theta1(self) -> StrategyCurve:
        return self.solution.theta1

    @property
    def theta2(self) -> StrategyCurve:
        return self.solution.theta2


def refine_to_tolerance(solver: str, params: ModelParams, tol: float, N0: int = 50,
                        subgrid_factor: int = DEFAULT_SUBGRID, max_N: int = 12800) -> RefinementResult:
    """Double ``N`` on uniform partitions until successive diagonal gains agree to ``tol``.

    ``solver`` is ``"single"`` or ``"game"``. Distances are sup-norms of the
    player-2 gain on the coarser fine grid (a subset of the finer one).
    ``orders[i] = log2(distances[i-1] / distances[i])`` estimates the
    convergence order in the mesh.
    """
    if not tol > 0:
        raise DomainError("tolerance must be positive")
    solve = {"single": single_partition_solve, "game": game_partition_solve}.get(solver)
    if solve is None:
        raise DomainError(f"unknown solver {solver!r}")
    N = int(N0)
    current = solve(params, Partition.uniform(params.T, N), subgrid_factor)
    result = RefinementResult(current, N, params.T / N)
    if math.isinf(tol):
        return result
    while True:
        if 2 * N > max_N:
            raise RefinementError(
                f"refinement cap N={max_N} reached; last distance "
                f"{result.distances[-1] if result.distances else float('nan'):.3e}",
                last=result, distance=result.distances[-1] if result.distances else None)
        finer = solve(params, Partition.uniform(params.T, 2 * N), subgrid_factor)
        dist = float(np.max(np.abs(finer.theta2.values[::2] - current.theta2.values)))
        result.distances.append(dist)
        if len(result.distances) > 1 and dist > 0:
            result.orders.append(math.log2(result.distances[-2] / dist))
        N *= 2
        current = finer
        result.solution, result.N, result.mesh = finer, N, params.T / N
        if dist < tol:
            return result


def vdie_solve(params: ModelParams, grid) -> GammaCurve:
    """Diagonal of the game kernel from the Volterra differential-integral equation.

    With ``c = (1-R)/R`` and ``beta = sigma^2 - 2 c Gamma``,

        Gamma' + sigma^2 Gamma - c Gamma^2 - NL(t) = 0,   Gamma(T) = 1,
        NL(t) = int_t^T e^{int_t^s beta} d_t alpha(s-t) c Gamma(s)^2 ds
                + e^{int_t^T beta} d_t alpha(T-t).

    The discount is a sum ``sum_j w_j e^{-k_j tau}``, so the non-local tail
    integrals split into exponential moments

        H_j(t) = int_t^T e^{int_t^s beta} e^{-k_j (s-t)} c Gamma(s)^2 ds
                 + e^{int_t^T beta} e^{-k_j (T-t)},

    with ``NL = sum_j w_j k_j H_j`` and ``Gamma = sum_j w_j H_j``. Each moment
    obeys ``H_j' = (k_j - beta) H_j - c Gamma^2`` and the system is marched
    backward with RK4 on ``grid``.
    """
    grid = np.asarray(grid, dtype=float)
    if abs(grid[0]) > 1e-12 or abs(grid[-1] - params.T) > 1e-12 * params.T:
        raise DomainError("grid must cover [0, T]")
    w, kappa = params.discount.terms()
    c = (1.0 - params.R) / params.R
    var = params.var

    def rhs(_, H):
        g = float(w @ H)
        return (kappa - var + 2.0 * c * g) * H - c * g * g

    H = rk4_backward(rhs, grid, np.ones_like(w))
    gamma = H @ w
    env = lyapunov_envelope(params.sigma, params.T, grid)
    if not np.all(np.isfinite(gamma)) or np.any(gamma < -_ENVELOPE_RTOL) \
            or np.any(gamma > env * (1 + _ENVELOPE_RTOL)):
        raise SolverError("VDIE solution left [0, exp(sigma^2 (T-t))]")
    return GammaCurve(grid, gamma)


def _cumulative_from_right(y, x):
    """``out[i] = int_{x_i}^{x_end} y``, fourth order on uniform grids."""
    n = y.size
    h = np.diff(x)
    if n < 4 or not np.allclose(h, h[0], rtol=1e-9, atol=0):
        return _panel_sums_from_right(0.5 * h * (y[:-1] + y[1:]))
    hh = h[0]
    panel = np.empty(n - 1)
    # cubic through four neighbouring nodes, one-sided at both ends
    panel[1:-1] = hh / 24.0 * (-y[:-3] + 13.0 * y[1:-2] + 13.0 * y[2:-1] - y[3:])
    panel[0] = hh / 24.0 * (9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3])
    panel[-1] = hh / 24.0 * (9.0 * y[-1] + 19.0 * y[-2] - 5.0 * y[-3] + y[-4])
    return _panel_sums_from_right(panel)


def reconstruct_kernel(gamma: GammaCurve, params: ModelParams, row_stride: int = 1) -> TriangularKernel:
    """Full kernel from its diagonal by quadrature.

        P(t, s) = int_s^T e^{int_s^tau beta} alpha(tau-t) c Gamma(tau)^2 dtau
                  + e^{int_s^T beta} alpha(T-t),   beta = sigma^2 - 2 c Gamma.

    ``alpha(tau - t)`` is split over the exponential terms of the discount so
    every row reuses the same cumulative integrals. Rows are materialised at
    every ``row_stride``-th grid index.
    """
    grid = np.asarray(gamma.grid, dtype=float)
    g = np.asarray(gamma.values, dtype=float)
    c = (1.0 - params.R) / params.R
    beta = params.var - 2.0 * c * g
    B = _cumulative_from_right(beta, grid)          # B(s) = int_s^T beta
    w, kappa = params.discount.terms()
    T = params.T
    # G_j(s) = int_s^T e^{B(s)-B(tau)} e^{-k_j (tau - s)} c Gamma^2 dtau + e^{B(s)} e^{-k_j (T-s)}
    G = []
    for kj in kappa:
        shift = B[0] + kj * T
        integrand = np.exp(-B - kj * grid + shift) * c * g**2
        inner = _cumulative_from_right(integrand, grid)
        G.append(np.exp(B + kj * grid - shift) * inner + np.exp(B - kj * (T - grid)))
    G = np.array(G)
    starts = np.arange(0, grid.size, int(row_stride))
    rows = []
    for st in starts:
        t = grid[st]
        s = grid[st:]
        rows.append(np.sum(w[:, None] * np.exp(-kappa[:, None] * (s - t)) * G[:, st:], axis=0))
    return TriangularKernel(grid, starts, tuple(rows))


def symmetric_kernel(params: ModelParams, t, s):
    """Exact game kernel for ``R = 1``: ``exp(sigma^2 (T - s)) alpha(T - t)``."""
    if params.R != 1.0:
        raise DomainError(f"the closed-form kernel needs R = 1, got R = {params.R}")
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(t > s) or np.any(t < 0) or np.any(s > params.T):
        raise DomainError("need 0 <= t <= s <= T")
    out = np.exp(params.var * (params.T - s)) * alpha(params.discount, params.T - t)
    return float(out) if np.ndim(out) == 0 else out
