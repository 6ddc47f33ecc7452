import csv

import numpy as np
import pytest

from lqgame import cli
from lqgame.discount import DiscountSpec
from lqgame.figures import SWEEPS, build_figure, ordering_slacks, read_csv, write_csv
from lqgame.riccati import ModelParams


def read_rows(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_defaults_are_baseline():
    args = cli.build_parser().parse_args(["solve", "game-constant"])
    cfg = cli.build_config(args)
    p = cfg.params
    assert (p.T, p.sigma, p.R) == (10.0, 0.25, 0.5)
    d = p.discount
    assert (d.lam, d.rho, d.gamma) == (0.5, 0.15, 0.3)


def test_solve_game_constant_terminal_row(tmp_path):
    assert cli.main(["solve", "game-constant", "--out", str(tmp_path)]) == 0
    header, data = read_rows(tmp_path / "strategy.csv")
    assert header == ["s", "theta1", "theta2"]
    assert data[-1].tolist() == [10.0, 1.0, -2.0]


def test_solve_single_constant_limit_branch(tmp_path):
    assert cli.main(["solve", "single-constant", "--rho", "0.0625", "--sigma", "0.25",
                     "--out", str(tmp_path)]) == 0
    _, data = read_rows(tmp_path / "strategy.csv")
    assert np.all(np.isfinite(data))
    assert data[0, 2] == pytest.approx(-1 / (0.5 + 10), rel=1e-14)
    assert np.all(data[:, 1] == 0.0)


def test_solve_symmetric_game_reports_error(tmp_path, capsys):
    assert cli.main(["solve", "game-equilibrium", "--R", "1", "--N", "1000", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    err = float(out.strip().splitlines()[-1].split()[-1])
    assert err < 1e-2
    assert (tmp_path / "kernel.csv").open().readline().strip() == "t,s,P"
    t, s, P = np.loadtxt(tmp_path / "kernel.csv", delimiter=",", skiprows=1).T
    assert np.unique(t).size == 1000
    exact = np.exp(0.0625 * (10 - s)) * (0.5 * np.exp(-0.15 * (10 - t)) + 0.5 * np.exp(-0.3 * (10 - t)))
    # rows at partition points are exact; the reported error comes from freezing t in between
    assert np.max(np.abs(P - exact)) <= 1e-12 < err


def test_solve_equilibrium_csv_round_trips(tmp_path):
    from lqgame.equilibrium import Partition, single_partition_solve
    assert cli.main(["solve", "single-equilibrium", "--N", "40", "--out", str(tmp_path)]) == 0
    _, data = read_rows(tmp_path / "strategy.csv")
    p = ModelParams(10.0, 0.25, 0.5, DiscountSpec.mixture(0.5, 0.15, 0.3))
    sol = single_partition_solve(p, Partition.uniform(10.0, 40))
    assert np.array_equal(data[:, 0], sol.grid)
    assert np.array_equal(data[:, 2], sol.theta2.values)
    _, kern = read_rows(tmp_path / "kernel.csv")
    assert np.array_equal(kern[: sol.grid.size, 2], sol.kernel.rows[0])


def test_invalid_R_exit_code(capsys):
    assert cli.main(["verify", "--R", "1.5"]) == 2
    assert "0 < R <= 1" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["solve", "game-constant", "--lambda", "0.5", "--gamma", "0.1"],
                                  ["solve", "game-constant", "--T", "-1"],
                                  ["solve", "game-constant", "--N", "0"]])
def test_other_invalid_configs(argv, tmp_path):
    assert cli.main(argv + ["--out", str(tmp_path)]) == 2


def test_solver_failure_exit_code(tmp_path, monkeypatch):
    from lqgame.errors import SolverError

    def boom(*a, **k):
        raise SolverError("synthetic")
    monkeypatch.setattr(cli, "game_partition_solve", boom)
    assert cli.main(["solve", "game-equilibrium", "--N", "10", "--out", str(tmp_path)]) == 3


def test_config_file_and_flag_override(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# comment\nT = 5\nR=0.8\nN=20\n")
    args = cli.build_parser().parse_args(["solve", "game-constant", "--config", str(conf), "--R", "0.3"])
    cfg = cli.build_config(args)
    assert cfg.params.T == 5.0 and cfg.params.R == 0.3 and cfg.N == 20
    conf.write_text("bogus=1\n")
    assert cli.main(["solve", "game-constant", "--config", str(conf)]) == 2
    conf.write_text("T 5\n")
    assert cli.main(["solve", "game-constant", "--config", str(conf)]) == 2


def test_unknown_figure_id(tmp_path):
    assert cli.main(["figures", "9", "--out", str(tmp_path)]) == 2


def test_figures_emit_csv_and_svg(tmp_path):
    assert cli.main(["figures", "1", "3", "--N", "100", "--out", str(tmp_path)]) == 0
    for i in (1, 3):
        header, data = read_csv(tmp_path / f"fig{i}.csv")
        assert header[0] == "s"
        assert (tmp_path / f"fig{i}.svg").read_text().lstrip().startswith("<?xml")
    header, data = read_csv(tmp_path / "fig1.csv")
    # T sweep reaches s = 15; the T = 5 curve is NaN beyond its horizon
    col = header.index("hat_theta2[T=5]")
    assert data[-1, 0] == 15.0 and np.isnan(data[-1, col]) and data[-1, header.index("hat_theta2[T=15]")] == -2.0


def test_svg_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["figures", "8", "--N", "50", "--out", str(a)]) == 0
    assert cli.main(["figures", "8", "--N", "50", "--out", str(b)]) == 0
    assert (a / "fig8.svg").read_bytes() == (b / "fig8.svg").read_bytes()
    assert (a / "fig8.csv").read_bytes() == (b / "fig8.csv").read_bytes()


@pytest.fixture(scope="module")
def baseline_params():
    return ModelParams(10.0, 0.25, 0.5, DiscountSpec.mixture(0.5, 0.15, 0.3))


@pytest.mark.parametrize("number", range(1, 9))
def test_every_figure_round_trips(number, baseline_params, tmp_path):
    fig = build_figure(number, baseline_params, N=50)
    write_csv(fig, tmp_path / "f.csv")
    header, data = read_csv(tmp_path / "f.csv")
    assert header == fig.header()
    assert np.array_equal(data[:, 0], fig.s)
    for j, name in enumerate(fig.columns, start=1):
        assert np.array_equal(data[:, j], fig.columns[name], equal_nan=True)
    if number in (1, 2, 4, 5, 6, 7):
        assert len(fig.panels) == len(SWEEPS)


@pytest.mark.parametrize("number", [3, 5, 7, 8])
def test_figure_orderings(number, baseline_params):
    fig = build_figure(number, baseline_params, N=500)
    slacks = ordering_slacks(fig)
    checked = {k: v for k, v in slacks.items() if not k.endswith("_full")}
    assert min(checked.values()) >= 0.0
    if number == 8:
        # values are still emitted to the horizon
        assert fig.s[-1] == 10.0 and fig.xlim == 8.5


def test_simulate_command(tmp_path, capsys):
    assert cli.main(["simulate", "--paths", "500", "--steps", "50", "--N", "50", "--dump", "2",
                     "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "max |J1 + J2|   = 0.000e+00" in out
    header, data = read_rows(tmp_path / "paths.csv")
    assert header == ["path", "step", "time", "state", "u1", "u2"] and data.shape == (2 * 51, 6)
