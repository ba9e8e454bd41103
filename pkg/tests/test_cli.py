import csv
import json

import numpy as np
import pytest

from miw_coulomb import io
from miw_coulomb.cli import density_series, density_summary, main, n_list
from miw_coulomb.energy import average_hamiltonian

from conftest import solved


def read_rows(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def test_solve_single_world(tmp_path, capsys):
    assert run(tmp_path, "solve", "--n", "1") == 0
    header, rows = read_rows(tmp_path / "solve_N1.csv")
    assert header == ["n", "x_n"]
    assert rows == [["1", "1"]]
    report = json.loads((tmp_path / "solve_N1.report.json").read_text())
    assert report["validation"]["passed"]
    manifest = json.loads((tmp_path / "solve_N1.manifest.json").read_text())
    assert manifest["command"] == "solve"
    assert manifest["parameters"]["n"] == 1


def test_solve_n11_csv_mass(tmp_path):
    assert run(tmp_path, "solve", "--n", "11", "--format", "csv") == 0
    cfg = io.read_configuration(tmp_path / "solve_N11.csv")
    assert cfg.n_worlds == 11
    assert density_summary(cfg)["mass_no_boundary"] == pytest.approx(0.54, abs=0.005)


@pytest.mark.parametrize("argv", [["solve", "--n", "0"], ["solve", "--n", "x"], ["solve"],
                                  ["sweep", "--n", ""], ["sweep", "--n", "5..2"],
                                  ["density"], ["energy", "--n", "3", "--config", "a.csv"],
                                  ["solve", "--n", "3", "--tol", "-1"]])
def test_usage_errors_exit_2(tmp_path, argv):
    with pytest.raises(SystemExit) as info:
        run(tmp_path, *argv)
    assert info.value.code == 2


def test_solver_failure_exits_1(tmp_path, capsys, monkeypatch):
    import miw_coulomb.solver as solver

    monkeypatch.setattr(solver, "boundary_residual", lambda x, n, m: -1.0)
    assert run(tmp_path, "solve", "--n", "4") == 1
    assert "error:" in capsys.readouterr().err


def test_missing_config_exits_1(tmp_path):
    assert run(tmp_path, "energy", "--config", str(tmp_path / "nope.csv")) == 1


def test_n_list_parsing():
    assert n_list("11,21") == [11, 21]
    assert n_list("1..4,10") == [1, 2, 3, 4, 10]
    assert n_list(" 3 , 3 ") == [3]


def test_density_files(tmp_path):
    assert run(tmp_path, "density", "--n", "11") == 0
    header, rows = read_rows(tmp_path / "density_N11.csv")
    assert header == ["x", "p_empirical", "p_target"]
    xs = np.array([float(r[0]) for r in rows])
    assert xs[0] == 0.0
    assert xs[-1] == pytest.approx(1.2 * solved(11).x1)
    _, steps = read_rows(tmp_path / "density_N11_steps.csv")
    assert len(steps) == 2 * 12
    summary = json.loads((tmp_path / "density_N11.json").read_text())
    assert summary["mass_no_boundary"] == pytest.approx(0.54, abs=0.005)


def test_density_n21_json(tmp_path):
    assert run(tmp_path, "density", "--n", "21", "--format", "json") == 0
    data = json.loads((tmp_path / "density_N21.json").read_text())
    assert data["mass_no_boundary"] == pytest.approx(0.526, abs=0.005)
    assert len(data["grid"]) == 400


def test_density_full_line_is_symmetric():
    steps, rows = density_series(solved(11), grid_points=50, full_line=True)
    arr = np.array(rows)
    assert np.allclose(arr[:, 0], -arr[::-1, 0])
    assert np.array_equal(arr[:, 1], arr[::-1, 1])
    assert np.array_equal(arr[:, 2], arr[::-1, 2])
    s = np.array(steps)
    assert np.array_equal(s[:, 0], -s[::-1, 0])


def test_density_step_rows_render_steps():
    steps, _ = density_series(solved(3))
    # duplicated x: left limit then right value
    for (x0, _, _), (x1, _, _) in zip(steps[::2], steps[1::2]):
        assert x0 == x1
    assert steps[-1][1] == 0.0


def test_energy_outputs(tmp_path):
    assert run(tmp_path, "energy", "--n", "1") == 0
    assert json.loads((tmp_path / "energy_N1.json").read_text())["h_n"] == -0.25
    assert run(tmp_path, "energy", "--n", "21") == 0
    h = json.loads((tmp_path / "energy_N21.json").read_text())["h_n"]
    assert h == pytest.approx(-21 / 44, abs=1e-9)
    assert run(tmp_path, "energy", "--n", "1000") == 0
    h = json.loads((tmp_path / "energy_N1000.json").read_text())["h_n"]
    assert abs(h + 0.5) <= 5e-4


def test_sweep_outputs(tmp_path):
    assert run(tmp_path, "sweep", "--n", "11,21") == 0
    header, rows = read_rows(tmp_path / "sweep.csv")
    assert header[:3] == ["n_worlds", "x1", "xN"]
    mass = header.index("mass_no_boundary")
    deficits = [float(r[mass]) - 0.5 for r in rows]
    assert deficits[0] == pytest.approx(0.04, abs=0.005)
    assert deficits[1] == pytest.approx(0.026, abs=0.005)
    fit = json.loads((tmp_path / "sweep_fit.json").read_text())
    assert fit["fit"] is None  # two points cannot be fitted
    assert fit["sandwich_passed"]


def test_sweep_range_with_jobs(tmp_path):
    assert run(tmp_path, "sweep", "--n", "1..200", "--jobs", "4") == 0
    _, rows = read_rows(tmp_path / "sweep.csv")
    assert len(rows) == 200
    fit = json.loads((tmp_path / "sweep_fit.json").read_text())
    assert 2 < fit["fit"]["exponent_a"] < 3


def test_sweep_failure_exits_1(tmp_path, monkeypatch):
    import miw_coulomb.cli as cli
    from miw_coulomb.solver import SolverConfig

    monkeypatch.setattr(cli, "_config", lambda args: SolverConfig(max_iterations=1))
    assert run(tmp_path, "sweep", "--n", "400") == 1
    _, rows = read_rows(tmp_path / "sweep.csv")
    assert "ConvergenceError" in rows[0][-1]


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_round_trip_through_files(tmp_path, fmt):
    assert run(tmp_path, "solve", "--n", "21", "--format", fmt) == 0
    path = tmp_path / f"solve_N21.{fmt}"
    cfg = io.read_configuration(path)
    direct = solved(21)
    assert cfg.positions.tobytes() == direct.positions.tobytes()
    assert density_summary(cfg) == density_summary(direct)
    assert average_hamiltonian(cfg) == average_hamiltonian(direct)
    assert run(tmp_path, "energy", "--config", str(path)) == 0
    from_file = json.loads((tmp_path / "energy_solve_N21.json").read_text())
    assert from_file["h_n"] == average_hamiltonian(direct).h_n


def test_json_config_restores_meta(tmp_path):
    run(tmp_path, "solve", "--n", "8", "--format", "json")
    cfg = io.read_configuration(tmp_path / "solve_N8.json")
    assert cfg.solve_meta == solved(8).solve_meta
    assert cfg.x1_residual == solved(8).x1_residual


def test_rerun_reproduces_outputs_bit_for_bit(tmp_path):
    assert run(tmp_path, "density", "--n", "13") == 0
    names = ["density_N13.csv", "density_N13_steps.csv", "density_N13.json"]
    before = {n: (tmp_path / n).read_bytes() for n in names}
    for n in names:
        (tmp_path / n).unlink()
    assert main(["rerun", str(tmp_path / "density_N13.manifest.json")]) == 0
    assert {n: (tmp_path / n).read_bytes() for n in names} == before


def test_floats_written_with_full_precision(tmp_path):
    run(tmp_path, "solve", "--n", "5")
    _, rows = read_rows(tmp_path / "solve_N5.csv")
    assert [float(r[1]) for r in rows] == list(solved(5).positions)


def test_out_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("MIW_COULOMB_OUT", str(tmp_path / "env"))
    assert main(["solve", "--n", "2"]) == 0
    assert (tmp_path / "env" / "solve_N2.csv").exists()
