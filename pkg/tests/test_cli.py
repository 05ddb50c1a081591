# tests/test_cli.py
import json

import numpy as np
import pytest

from app.cli import cli
from app.core.config import VERSION
from app.core.grid import GridFunction3D, load_grid, save_grid
from conftest import gauge_bump

ZERO_GRID = "grushin-grid v1\n2 2 2\n-1 1 -1 1 -1 1\n0 0\n0 0\n0 0\n0 0\n"
NAN_GRID = "grushin-grid v1\n2 1 1\n0 1 0 1 0 1\nnan 1.0\n"


def invoke(runner, *args):
    return runner.invoke(cli, list(args), obj={})


def report_of(result) -> dict:
    return json.loads(result.stdout)


def test_version(runner):
    result = invoke(runner, "--version")
    assert result.exit_code == 0
    assert VERSION in result.stdout


def test_pohozaev_critical_power(runner):
    result = invoke(runner, "pohozaev", "--p", "5", "--alpha", "2")
    assert result.exit_code == 0, result.stderr
    report = report_of(result)
    assert report["command"] == "pohozaev"
    assert report["quantities"]["coefficient"] == 0.0
    assert report["labels"]["regime"] == "critical"
    assert report["version"] == VERSION


def test_sobolev_writes_the_constants_table(runner, tmp_path):
    table = tmp_path / "constants.csv"
    result = invoke(runner, "sobolev", "--alpha", "1", "--alpha", "2", "--csv", str(table))
    assert result.exit_code == 0, result.stderr
    quantities = report_of(result)["quantities"]
    assert quantities["alpha=1.L_derived"] == pytest.approx(1.857642, abs=1e-6)
    assert quantities["alpha=2.n_alpha"] == 3.0
    lines = table.read_text().splitlines()
    assert lines[0] == "alpha,n_alpha,D,L_derived,L_paper_printed,rayleigh_min"
    assert len(lines) == 3


def test_missing_alpha_is_a_usage_error(runner):
    result = invoke(runner, "geometry", "--shape", "ball")
    assert result.exit_code == 2


def test_unknown_shape_is_a_usage_error(runner):
    result = invoke(runner, "geometry", "--shape", "teapot", "--alpha", "1")
    assert result.exit_code == 2


def test_geometry_needs_a_shape_or_sweep(runner):
    result = invoke(runner, "geometry", "--alpha", "1")
    assert result.exit_code == 2


def test_thread_count_must_be_positive(runner):
    result = invoke(runner, "--threads", "0", "pohozaev", "--p", "3", "--alpha", "1")
    assert result.exit_code == 2


def test_malformed_grid_file_exits_with_input_error(runner, tmp_path):
    path = tmp_path / "bad.grid"
    path.write_text(NAN_GRID)
    result = invoke(runner, "rearrange", str(path), "--alpha", "1")
    assert result.exit_code == 3
    assert "line 4" in result.stderr


def test_zero_field_rearranges_to_zero(runner, tmp_path):
    path = tmp_path / "zero.grid"
    path.write_text(ZERO_GRID)
    result = invoke(runner, "rearrange", str(path), "--alpha", "1")
    assert result.exit_code == 0, result.stderr
    report = report_of(result)
    assert report["labels"]["note"] == "zero field"
    assert report["quantities"]["energy"] == 0.0
    assert report["quantities"]["rearranged_energy"] == 0.0


def test_rearrange_writes_the_profile(runner, tmp_path, alpha_one):
    grid = tmp_path / "bump.grid"
    profile = tmp_path / "profile.csv"
    save_grid(gauge_bump(alpha_one, dims=16), str(grid))
    result = invoke(
        runner, "rearrange", str(grid), "--alpha", "1", "--levels", "32", "--resolution", "16", "--profile", str(profile)
    )
    assert result.exit_code == 0, result.stderr
    assert report_of(result)["quantities"]["polya_szego_gap"] >= 0
    lines = profile.read_text().splitlines()
    assert lines[0] == "r,phi"
    assert len(lines) > 2


def test_solve_rejects_critical_and_supercritical_powers(runner):
    result = invoke(runner, "solve", "--alpha", "1", "--q", "7", "--grid", "8")
    assert result.exit_code == 2


def test_solver_config_with_unknown_key(runner, tmp_path):
    config = tmp_path / "solver.yaml"
    config.write_text("outer_tolerance: 1.0e-6\nbogus: 1\n")
    result = invoke(runner, "solve", "--alpha", "1", "--q", "4", "--grid", "8", "--config", str(config))
    assert result.exit_code == 2


def test_iteration_limit_is_a_numerical_failure(runner, tmp_path):
    config = tmp_path / "solver.yaml"
    config.write_text("outer_max_iterations: 1\n")
    result = invoke(runner, "solve", "--alpha", "1", "--q", "4", "--grid", "8", "--config", str(config))
    assert result.exit_code == 4
    assert "did not converge" in result.stderr


def test_solve_writes_the_solution(runner, tmp_path):
    output = tmp_path / "u.grid"
    result = invoke(runner, "solve", "--alpha", "1", "--q", "4", "--grid", "8", "--output", str(output))
    assert result.exit_code == 0, result.stderr
    report = report_of(result)
    assert report["quantities"]["energy"] > 0
    assert report["labels"]["growth.A1"] == "pass"
    assert "ok weak_residual" in result.stderr
    u = load_grid(str(output))
    assert isinstance(u, GridFunction3D)
    assert u.dims == (8, 8, 8)
    assert np.max(u.values) > 0


def test_transform_check_needs_a_shape(runner):
    result = invoke(runner, "transform-check", "--alpha", "1")
    assert result.exit_code == 2


def test_no_timing_output_is_reproducible(runner):
    args = ("--no-timing", "pohozaev", "--p", "3", "--alpha", "1")
    first = invoke(runner, *args)
    second = invoke(runner, *args)
    assert first.exit_code == 0, first.stderr
    assert first.stdout == second.stdout
    assert "wall_time" not in report_of(first)


def test_timing_is_recorded_by_default(runner):
    result = invoke(runner, "pohozaev", "--p", "3", "--alpha", "1")
    assert report_of(result)["wall_time"] >= 0


def test_geometry_of_the_reference_sector(runner):
    result = invoke(runner, "geometry", "--shape", "ball-sector", "--alpha", "1")
    assert result.exit_code == 0, result.stderr
    quantities = report_of(result)["quantities"]
    assert quantities["quotient"] == pytest.approx(7.51988, rel=3e-2)
    assert quantities["reference_quotient"] == pytest.approx(7.51988, rel=1e-5)
    assert "isoperimetric" in result.stderr


def test_geometry_of_the_cylinder(runner):
    result = invoke(runner, "geometry", "--shape", "cylinder", "--radius", "1", "--halfheight", "1", "--alpha", "1")
    assert result.exit_code == 0, result.stderr
    assert report_of(result)["quantities"]["volume"] == pytest.approx(3.141593, rel=1e-2)


def test_sobolev_rayleigh_without_extrapolation(runner):
    result = invoke(
        runner, "sobolev", "--alpha", "1", "--rayleigh", "--resolution", "16", "--truncation", "6",
        "--perturbations", "0", "--max-iterations", "3", "--no-extrapolate",
    )
    assert result.exit_code == 0, result.stderr
    assert report_of(result)["quantities"]["alpha=1.rayleigh_min"] > 0


def test_extrapolated_rayleigh_needs_a_multiple_of_four(runner):
    result = invoke(runner, "sobolev", "--alpha", "1", "--rayleigh", "--resolution", "18")
    assert result.exit_code == 2
