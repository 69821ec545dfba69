"""Command-line interface: commands, CSV outputs, exit codes, determinism."""

import pytest

from paraflow.cli import main
from test_scenario import CASE_STUDY_CONFIG


def _write(tmp_path, text, name="scenario.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture()
def scenario_file(tmp_path):
    return _write(tmp_path, CASE_STUDY_CONFIG)


def _travel_time_config(t_end="50.0"):
    out = CASE_STUDY_CONFIG.replace("kind = affine", "kind = travel_time")
    out = out.replace("a = 0.2, -0.19, 0.2, 0.2, 0\n", "")
    out = out.replace("b = 6.84, 6.13, 6.05, 6.06, 6\n", "")
    return out.replace("t_end = 50.0", f"t_end = {t_end}")


class TestCheck:
    def test_designed_scenario_boundary_verdict(self, scenario_file, tmp_path, capsys):
        code = main(["check", "--scenario", str(scenario_file), "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "verdict: boundary" in out
        assert (tmp_path / "conditions.csv").exists()
        assert (tmp_path / "plot_results.py").exists()

    def test_travel_time_out_verdict(self, tmp_path, capsys):
        f = _write(tmp_path, _travel_time_config())
        code = main(["check", "--scenario", str(f), "--out", str(tmp_path)])
        assert code == 0
        assert "verdict: out" in capsys.readouterr().out

    def test_constant_signal_in_class(self, tmp_path, capsys):
        cfg = CASE_STUDY_CONFIG.replace(
            "a = 0.2, -0.19, 0.2, 0.2, 0", "a = 0, 0, 0, 0, 0"
        )
        f = _write(tmp_path, cfg)
        code = main(["check", "--scenario", str(f), "--out", str(tmp_path)])
        assert code == 0
        assert "verdict: in" in capsys.readouterr().out


class TestSimulate:
    def test_trajectory_csv_written(self, tmp_path, capsys):
        f = _write(tmp_path, CASE_STUDY_CONFIG.replace("t_end = 50.0", "t_end = 5.0"))
        code = main(["simulate", "--scenario", str(f), "--out", str(tmp_path)])
        assert code == 0
        lines = (tmp_path / "trajectory.csv").read_text().splitlines()
        assert lines[0] == "t,x_1,x_2,x_3,x_4,x_5,r_1,r_2,r_3,r_4,r_5,V"
        assert len(lines) == 1 + 501
        out = capsys.readouterr().out
        assert "distance to solved equilibrium" in out
        assert "invariance: ok" in out

    def test_deterministic_given_seed(self, tmp_path):
        cfg = CASE_STUDY_CONFIG.replace("initial = centroid", "initial = random:3")
        cfg = cfg.replace("t_end = 50.0", "t_end = 2.0")
        f = _write(tmp_path, cfg)
        out_a, out_b, out_c = (tmp_path / n for n in ("a", "b", "c"))
        assert main(["simulate", "--scenario", str(f), "--out", str(out_a)]) == 0
        assert main(["simulate", "--scenario", str(f), "--out", str(out_b)]) == 0
        assert main(
            ["simulate", "--scenario", str(f), "--out", str(out_c), "--seed", "99"]
        ) == 0
        bytes_a = (out_a / "trajectory.csv").read_bytes()
        assert bytes_a == (out_b / "trajectory.csv").read_bytes()
        assert bytes_a != (out_c / "trajectory.csv").read_bytes()


class TestEquilibrium:
    def test_rows_and_summary(self, scenario_file, tmp_path, capsys):
        code = main(["equilibrium", "--scenario", str(scenario_file), "--out", str(tmp_path)])
        assert code == 0
        lines = (tmp_path / "equilibrium.csv").read_text().splitlines()
        assert len(lines) == 1 + 5 + 2
        assert "total travel time" in capsys.readouterr().out


class TestSweep:
    def test_eta_sweep_travel_time_with_onset(self, tmp_path, capsys):
        f = _write(tmp_path, _travel_time_config())
        code = main(
            [
                "sweep",
                "--scenario",
                str(f),
                "--out",
                str(tmp_path),
                "--param",
                "eta",
                "--grid",
                "6:9:4",
            ]
        )
        assert code == 0
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert lines[0] == "param_value,path,x_eq,r_eq,regime,total_tt,cred_err,status"
        assert len(lines) == 1 + 4 * 5
        out = capsys.readouterr().out
        assert "congestion onset" in out
        onset = float(
            (tmp_path / "sweep_summary.txt").read_text().split("=")[1].strip()
        )
        assert 6.0 < onset < 9.0

    def test_designed_signal_sweep_all_free(self, scenario_file, tmp_path):
        code = main(
            [
                "sweep",
                "--scenario",
                str(scenario_file),
                "--out",
                str(tmp_path),
                "--param",
                "eta",
                "--grid",
                "10:20:3",
            ]
        )
        assert code == 0
        rows = (tmp_path / "sweep.csv").read_text().splitlines()[1:]
        assert all(row.split(",")[4] == "free" for row in rows)

    def test_gamma_sweep_design_rows(self, tmp_path):
        cfg = CASE_STUDY_CONFIG.replace("multistarts = 20", "multistarts = 3")
        cfg = cfg.replace("max_evals = 5000", "max_evals = 900")
        f = _write(tmp_path, cfg)
        code = main(
            [
                "sweep",
                "--scenario",
                str(f),
                "--out",
                str(tmp_path),
                "--param",
                "gamma",
                "--grid",
                "0:0.1:2",
            ]
        )
        assert code == 0
        lines = (tmp_path / "sweep.csv").read_text().splitlines()
        assert len(lines) == 1 + 2 * 5

    def test_bad_grid_is_usage_error(self, scenario_file, tmp_path):
        code = main(
            [
                "sweep",
                "--scenario",
                str(scenario_file),
                "--out",
                str(tmp_path),
                "--param",
                "eta",
                "--grid",
                "5:12",
            ]
        )
        assert code == 1


class TestDesign:
    def test_writes_result_and_verifies(self, tmp_path, capsys):
        cfg = CASE_STUDY_CONFIG.replace("multistarts = 20", "multistarts = 3")
        cfg = cfg.replace("max_evals = 5000", "max_evals = 900")
        f = _write(tmp_path, cfg)
        code = main(["design", "--scenario", str(f), "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "design.txt").exists()
        csv_lines = (tmp_path / "design.csv").read_text().splitlines()
        assert csv_lines[0] == "gamma,objective,efficiency,credibility,residual,verdict"
        out = capsys.readouterr().out
        assert "round-trip" in out

    def test_deterministic_given_seed(self, tmp_path):
        cfg = CASE_STUDY_CONFIG.replace("multistarts = 20", "multistarts = 2")
        cfg = cfg.replace("max_evals = 5000", "max_evals = 600")
        f = _write(tmp_path, cfg)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(["design", "--scenario", str(f), "--out", str(out_a)]) == 0
        assert main(["design", "--scenario", str(f), "--out", str(out_b)]) == 0
        assert (out_a / "design.csv").read_bytes() == (out_b / "design.csv").read_bytes()
        assert (out_a / "design.txt").read_bytes() == (out_b / "design.txt").read_bytes()

    def test_infeasible_design_exits_2(self, tmp_path):
        # inflow above total network capacity: no admissible signal exists
        cfg = CASE_STUDY_CONFIG.replace("inflow = 1.0", "inflow = 10.0")
        cfg = cfg.replace("multistarts = 20", "multistarts = 2")
        cfg = cfg.replace("max_evals = 5000", "max_evals = 300")
        f = _write(tmp_path, cfg)
        code = main(["design", "--scenario", str(f), "--out", str(tmp_path)])
        assert code == 2


class TestErrorPaths:
    def test_missing_file_exits_1(self, tmp_path):
        assert main(["check", "--scenario", str(tmp_path / "nope.ini")]) == 1

    def test_config_error_exits_1(self, tmp_path):
        f = _write(tmp_path, "[network]\ninflow = banana\n")
        assert main(["check", "--scenario", str(f), "--out", str(tmp_path)]) == 1

    def test_usage_error_exits_1(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1
