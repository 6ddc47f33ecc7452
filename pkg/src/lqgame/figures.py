"""Curve data behind the eight strategy figures, plus CSV/SVG rendering.

Every figure is a :class:`FigureData`: one shared ``s`` column and one column
per curve. Sweep figures have four panels, varying ``T``, ``sigma``, ``rho``
and ``R`` around the baseline; curves for a horizon shorter than the longest
one are padded with NaN past their own ``T``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .discount import DiscountSpec
from .equilibrium import Partition, game_partition_solve, single_partition_solve
from .errors import DomainError
from .riccati import ModelParams, game_constant_gains, single_constant_gain

FIGURE_IDS = tuple(range(1, 9))

SWEEPS = {
    "T": (5.0, 10.0, 15.0),
    "sigma": (0.1, 0.25, 0.4),
    "rho": (0.05, 0.15, 0.3),
    "R": (0.25, 0.5, 1.0),
}

# Panels for the eq-vs-constant overlays are cut here; beyond it the curves
# meet at the common terminal value and the gap is below plotting resolution.
FIG8_CHECK_LIMIT = 8.5


@dataclass
class FigureData:
    number: int
    title: str
    s: np.ndarray
    columns: dict = field(default_factory=dict)
    panels: list = field(default_factory=list)  # (panel title, [column names])
    xlim: float | None = None

    def header(self) -> list[str]:
        return ["s"] + list(self.columns)


def _vary(base: ModelParams, name: str, value: float) -> ModelParams:
    if name == "T":
        return ModelParams(value, base.sigma, base.R, base.discount)
    if name == "sigma":
        return ModelParams(base.T, value, base.R, base.discount)
    if name == "R":
        return ModelParams(base.T, base.sigma, value, base.discount)
    if name == "rho":
        d = base.discount
        if d.is_exponential:
            return base.with_rate(value)
        return base.with_discount(DiscountSpec.mixture(d.lam, value, value + d.gamma - d.rho))
    raise DomainError(f"unknown sweep parameter {name!r}")


def _output_grid(T_max: float, h: float) -> np.ndarray:
    n = int(round(T_max / h))
    return np.linspace(0.0, n * h, n + 1)


def _on_grid(s, T, fn):
    out = np.full(s.shape, np.nan)
    mask = s <= T * (1 + 1e-12)
    out[mask] = fn(np.minimum(s[mask], T))
    return out


def _eq_theta2(params: ModelParams, h: float, game: bool, subgrid_factor: int):
    N = max(1, int(round(params.T / h)))
    solver = game_partition_solve if game else single_partition_solve
    return solver(params, Partition.uniform(params.T, N), subgrid_factor).theta2


def _hat(params):
    return lambda s: single_constant_gain(params, s)


def _star(params):
    return lambda s: game_constant_gains(params, s)[1]


def _constant_version(params: ModelParams, rho: float) -> ModelParams:
    return params.with_discount(DiscountSpec.exponential(rho))


def _sweep_figure(number, title, base, curves, h, sweeps=SWEEPS):
    """``curves`` maps a label to ``f(params) -> callable(s)``."""
    T_max = max(max(sweeps.get("T", (base.T,))), base.T)
    s = _output_grid(T_max, h)
    fig = FigureData(number, title, s)
    for name, values in sweeps.items():
        cols = []
        for v in values:
            p = _vary(base, name, v)
            for label, make in curves.items():
                col = f"{label}[{name}={v:g}]"
                fig.columns[col] = _on_grid(s, p.T, make(p))
                cols.append(col)
        fig.panels.append((f"varying {name}", cols))
    return fig


def _baseline(args_params: ModelParams, lam: float | None = None) -> ModelParams:
    d = args_params.discount
    if lam is None or d.is_exponential:
        return args_params
    return args_params.with_discount(DiscountSpec.mixture(lam, d.rho, d.gamma))


def build_figure(number: int, params: ModelParams, N: int = 1000, subgrid_factor: int = 8,
                 sweeps=SWEEPS, fig2_lambda: float = 0.3) -> FigureData:
    """Curve data for figure ``number`` around baseline ``params`` (a mixture discount).

    ``N`` sets the output spacing ``T / N``; equilibrium curves are solved on
    uniform partitions with that mesh, so every emitted ``s`` is a partition point.
    """
    if number not in FIGURE_IDS:
        raise DomainError(f"figure id must be one of 1..8, got {number}")
    d = params.discount
    if d.is_exponential:
        raise DomainError("figures need a mixture discount (lambda < 1)")
    h = params.T / N
    rho, rho_eff = d.long_rate, d.short_rate
    exp_base = _constant_version(params, rho)

    def eq(game):
        return lambda p: (lambda s, c=_eq_theta2(p, h, game, subgrid_factor): c(s))

    if number == 1:
        return _sweep_figure(1, "optimal gain, constant discount", exp_base, {"hat_theta2": _hat}, h, sweeps)
    if number == 4:
        return _sweep_figure(4, "saddle gain, constant discount", exp_base, {"star_theta2": _star}, h, sweeps)
    if number == 5:
        return _sweep_figure(5, "saddle vs optimal gain, constant discount", exp_base,
                             {"star_theta2": _star, "hat_theta2": _hat}, h, sweeps)
    if number == 2:
        return _sweep_figure(2, "single-player equilibrium gain", _baseline(params, fig2_lambda),
                             {"tilde_theta2": eq(False)}, h, sweeps)
    if number == 6:
        return _sweep_figure(6, "equilibrium saddle gain", params, {"bar_theta2": eq(True)}, h, sweeps)
    if number == 7:
        return _sweep_figure(7, "equilibrium saddle vs single-player equilibrium gain", params,
                             {"bar_theta2": eq(True), "tilde_theta2": eq(False)}, h, sweeps)

    s = _output_grid(params.T, h)
    low, high = _constant_version(params, rho), _constant_version(params, rho_eff)
    if number == 3:
        fig = FigureData(3, "equilibrium gain between constant-rate optima", s)
        fig.columns["tilde_theta2"] = eq(False)(params)(s)
        fig.columns["hat_theta2[rho]"] = _hat(low)(s)
        fig.columns["hat_theta2[rho_eff]"] = _hat(high)(s)
    else:
        fig = FigureData(8, "equilibrium saddle gain between constant-rate saddles", s,
                         xlim=FIG8_CHECK_LIMIT)
        fig.columns["bar_theta2"] = eq(True)(params)(s)
        fig.columns["star_theta2[rho]"] = _star(low)(s)
        fig.columns["star_theta2[rho_eff]"] = _star(high)(s)
    fig.panels.append(("", list(fig.columns)))
    return fig


# ---------------------------------------------------------------- orderings

def ordering_slacks(fig: FigureData) -> dict:
    """Smallest slack of each ordering claim the figure illustrates (>= 0 means it holds).

    Sandwich figures: lower <= middle <= upper. Intensification figures:
    ``|game| - |single|`` per panel column pair. NaN padding is skipped.
    """
    c = fig.columns
    if fig.number == 3:
        mid, lo, hi = c["tilde_theta2"], c["hat_theta2[rho]"], c["hat_theta2[rho_eff]"]
        return {"lower": float(np.min(mid - lo)), "upper": float(np.min(hi - mid))}
    if fig.number == 8:
        m = fig.s <= FIG8_CHECK_LIMIT
        mid, lo, hi = c["bar_theta2"], c["star_theta2[rho]"], c["star_theta2[rho_eff]"]
        return {"lower": float(np.min((mid - lo)[m])), "upper": float(np.min((hi - mid)[m])),
                "lower_full": float(np.min(mid - lo)), "upper_full": float(np.min(hi - mid))}
    if fig.number in (5, 7):
        game, single = ("star_theta2", "hat_theta2") if fig.number == 5 else ("bar_theta2", "tilde_theta2")
        out = {}
        for name in c:
            if name.startswith(game + "["):
                tag = name[len(game):]
                diff = np.abs(c[name]) - np.abs(c[single + tag])
                out[tag.strip("[]")] = float(np.nanmin(diff))
        return out
    return {}


# ---------------------------------------------------------------- output

def write_csv(fig: FigureData, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(fig.header())
        cols = [fig.s] + list(fig.columns.values())
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])


def read_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def write_svg(fig: FigureData, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = f"fig{fig.number}"
    n = len(fig.panels)
    ncols = 2 if n > 1 else 1
    nrows = (n + ncols - 1) // ncols
    f, axes = plt.subplots(nrows, ncols, figsize=(5.0 * ncols, 3.6 * nrows), squeeze=False)
    for ax, (title, cols) in zip(axes.flat, fig.panels):
        for col in cols:
            ax.plot(fig.s, fig.columns[col], lw=1.2, label=col)
        if fig.xlim is not None:
            ax.set_xlim(0.0, fig.xlim)
            shown = np.concatenate([fig.columns[c][fig.s <= fig.xlim] for c in cols])
            pad = 0.05 * (np.nanmax(shown) - np.nanmin(shown))
            ax.set_ylim(np.nanmin(shown) - pad, np.nanmax(shown) + pad)
        ax.set_xlabel("s")
        ax.set_ylabel("gain")
        if title:
            ax.set_title(title, fontsize=9)
        ax.legend(fontsize=6)
    for ax in list(axes.flat)[n:]:
        ax.set_visible(False)
    f.suptitle(fig.title, fontsize=10)
    f.tight_layout()
    f.savefig(path, format="svg", metadata={"Date": None})
    plt.close(f)
