import json
from pathlib import Path

import numpy as np
import pytest

from cli import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, OUTPUT_DIR_ENV, build_parser, main, resolve_output_dir
from src.commands import cone_row_failures, create_lab_commands
from src.prodgrid import build_grid, read_field_csv

ARROW_CONFIG = """\
[operator]
family = log_ma
n = 2

[run]
seed = 5
samples = 200

[arrow]
n_min = 2
n_max = 3
instances = 200
closed_form_instances = 50
deflation_instances = 20
"""

GEODESIC_SLICE = """\
[operator]
family = sigma_k_root
n = 2
k = 2

[grid]
p = 1
torus_res = 4
s_res = 8
theta_res = 4

[chi]
matrix = 1 0; 0 0

[psi]
expr = {psi}

[phi]
expr = {phi}

[solver]
eps_schedule = 0.1, 0.01
"""


def write_config(tmp_path: Path, text: str, name: str = "run.cfg") -> Path:
    path = tmp_path / name
    path.write_text(text)
    return path


def manifest(output_dir: Path) -> dict:
    return json.loads((output_dir / "manifest.json").read_text())


def test_missing_operator_exits_with_config_code(tmp_path):
    config = write_config(tmp_path, "[grid]\np = 1\n")
    assert main(["solve", str(config), "--output-dir", str(tmp_path / "out")]) == EXIT_CONFIG
    assert not (tmp_path / "out" / "manifest.json").exists()


def test_unreadable_config(tmp_path):
    assert main(["solve", str(tmp_path / "absent.cfg"), "--output-dir", str(tmp_path / "out")]) == EXIT_CONFIG


def test_verify_arrow_writes_artifacts(tmp_path):
    config = write_config(tmp_path, ARROW_CONFIG)
    out = tmp_path / "arrow"
    assert main(["verify-arrow", str(config), "--output-dir", str(out)]) == EXIT_OK
    record = manifest(out)
    assert record["subcommand"] == "verify-arrow"
    assert record["seed"] == 5
    assert record["exit_code"] == 0
    assert {"arrow.csv", "arrow_summary.json", "config.cfg"} <= set(record["outputs"])
    assert record["tolerances"]["char_poly"] == 1e-8
    assert record["versions"]["numpy"] == np.__version__
    summary = json.loads((out / "arrow_summary.json").read_text())
    assert summary["violations"] == 0


def test_seed_flag_overrides_config(tmp_path):
    config = write_config(tmp_path, ARROW_CONFIG)
    out = tmp_path / "arrow"
    assert main(["verify-arrow", str(config), "--seed", "9", "--output-dir", str(out)]) == EXIT_OK
    assert manifest(out)["seed"] == 9
    assert "seed = 9" in (out / "config.cfg").read_text()


def test_verify_cones(tmp_path):
    config = write_config(tmp_path, ARROW_CONFIG)
    out = tmp_path / "cones"
    assert main(["verify-cones", str(config), "--output-dir", str(out)]) == EXIT_OK
    header = (out / "cones.csv").read_text().splitlines()[0]
    assert "failures" in header


def test_solve_geodesic_slice(tmp_path):
    config = write_config(tmp_path, GEODESIC_SLICE.format(psi="1", phi="0"))
    out = tmp_path / "solve"
    assert main(["solve", str(config), "--output-dir", str(out)]) == EXIT_OK
    grid = build_grid(p=1, torus_res=4, s_res=8, theta_res=4)
    u = read_field_csv(out / "solution.csv", grid, column="u")
    s = grid.coordinates["s"]
    np.testing.assert_allclose(u.values, 2 * s * (s - 1), atol=1e-8)
    report = json.loads((out / "report.json").read_text())
    assert report["residual_sup"] < 1e-9
    assert report["sandwich"]["ok"]
    assert report["t_path"][-1] == 1.0


def test_solve_is_deterministic(tmp_path):
    config = write_config(tmp_path, GEODESIC_SLICE.format(psi="1 + 0.1*cos(2*pi*theta)", phi="0"))
    first, second = tmp_path / "a", tmp_path / "b"
    assert main(["solve", str(config), "--output-dir", str(first)]) == EXIT_OK
    assert main(["solve", str(config), "--output-dir", str(second)]) == EXIT_OK
    assert (first / "solution.csv").read_bytes() == (second / "solution.csv").read_bytes()
    assert manifest(first)["config_hash"] == manifest(second)["config_hash"]


def test_subsolution_command(tmp_path):
    config = write_config(tmp_path, GEODESIC_SLICE.format(psi="1", phi="0"))
    out = tmp_path / "sub"
    assert main(["subsolution", str(config), "--output-dir", str(out)]) == EXIT_OK
    summary = json.loads((out / "subsolution.json").read_text())
    assert 1.21 <= summary["t_star"] <= 1.21 * 1.05
    assert [strip["alpha"] for strip in summary["strips"]] == [0.5, 0.25, 0.125, 0.0625]


def test_solve_degenerate_command(tmp_path):
    config = write_config(tmp_path, GEODESIC_SLICE.format(psi="0", phi="s"))
    out = tmp_path / "degenerate"
    assert main(["solve-degenerate", str(config), "--output-dir", str(out)]) == EXIT_OK
    table = json.loads((out / "cauchy.json").read_text())
    assert [row["eps"] for row in table["rows"]] == [0.1, 0.01]
    assert (out / "cauchy.csv").read_text().startswith("eps,")


def test_degenerate_log_ma_fails_with_manifest(tmp_path):
    config = write_config(tmp_path, "[operator]\nfamily = log_ma\nn = 2\n[grid]\ntorus_res = 4\ns_res = 4\n"
                                    "theta_res = 4\n")
    out = tmp_path / "fail"
    assert main(["solve-degenerate", str(config), "--output-dir", str(out)]) == EXIT_FAILURE
    record = manifest(out)
    assert record["exit_code"] == EXIT_FAILURE
    assert record["error"].startswith("PreconditionError")


def test_compare_solutions(tmp_path):
    base = write_config(tmp_path, GEODESIC_SLICE.format(psi="1", phi="0"), "base.cfg")
    shifted = write_config(tmp_path, GEODESIC_SLICE.format(psi="1", phi="0.25"), "shifted.cfg")
    steeper = write_config(tmp_path, GEODESIC_SLICE.format(psi="2", phi="0"), "steeper.cfg")
    for config, out in ((base, "a"), (shifted, "b"), (steeper, "c")):
        assert main(["solve", str(config), "--output-dir", str(tmp_path / out)]) == EXIT_OK

    first, second, third = (str(tmp_path / out / "solution.csv") for out in ("a", "b", "c"))
    out = tmp_path / "cmp"
    assert main(["compare", str(base), first, second, "--output-dir", str(out)]) == EXIT_OK
    result = json.loads((out / "compare.json").read_text())
    assert result["sup_diff"] == pytest.approx(0.25, abs=1e-8)
    assert result["sup_boundary_diff"] == pytest.approx(0.25)

    out = tmp_path / "cmp_fail"
    assert main(["compare", str(base), first, third, "--output-dir", str(out)]) == EXIT_FAILURE
    assert manifest(out)["error"].startswith("VerificationFailed")


def test_compare_needs_two_files(tmp_path):
    config = write_config(tmp_path, GEODESIC_SLICE.format(psi="1", phi="0"))
    out = tmp_path / "cmp"
    assert main(["compare", str(config), "only.csv", "--output-dir", str(out)]) == EXIT_FAILURE
    assert manifest(out)["exit_code"] == EXIT_FAILURE


def test_output_dir_resolution(monkeypatch, tmp_path):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    assert resolve_output_dir(None, "solve") == Path("runs") / "solve"
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
    assert resolve_output_dir(None, "solve") == tmp_path
    assert resolve_output_dir("elsewhere", "solve") == Path("elsewhere")


def test_probe_estimates(tmp_path):
    config = write_config(tmp_path, """\
[operator]
family = log_ma
n = 2

[grid]
torus_res = 4
s_res = 4
theta_res = 4

[run]
samples = 300

[probe]
family = manufactured
ladder = 4, 6
betas = 0.5
""")
    out = tmp_path / "probe"
    assert main(["probe-estimates", str(config), "--output-dir", str(out)]) == EXIT_OK
    verdict = json.loads((out / "probe.json").read_text())
    assert verdict["ladder"] == [4, 6]
    assert len(verdict["rows"]) == 2
    guan = (out / "guan.csv").read_text().splitlines()
    assert guan[0].startswith("operator,beta")
    assert len(guan) == 2
    study = json.loads((out / "convergence.json").read_text())
    assert [row["resolution"] for row in study["rows"]] == [4, 6]
    assert study["rows"][0]["order"] is None and study["rows"][1]["order"] > 0.0
    assert (out / "convergence.csv").read_text().startswith("resolution,mesh_width,error,order")


def test_help_lists_every_subcommand():
    registry = create_lab_commands()
    text = build_parser(registry).format_help()
    for info in registry.commands.values():
        assert info.usage in text
        assert info.description in text
    assert "compare CONFIG FIRST.csv SECOND.csv" in text


CLEAN_CONE_ROW = {
    "violations": 0,
    "slack_concavity": 0.0,
    "min_grad_component": 0.5,
    "grad_fd_error": 1e-9,
    "symmetry_error": 1e-16,
    "level_residual": 0.0,
    "level_monotone": True,
}


@pytest.mark.parametrize("key, value", [
    ("symmetry_error", 1e-3),
    ("level_residual", 1e-6),
    ("grad_fd_error", 1e-3),
    ("level_monotone", False),
    ("min_grad_component", 0.0),
])
def test_cone_row_failures(key, value):
    assert cone_row_failures(CLEAN_CONE_ROW) == 0
    assert cone_row_failures({**CLEAN_CONE_ROW, key: value}) == 1
