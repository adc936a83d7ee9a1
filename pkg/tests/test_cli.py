from __future__ import annotations

import pytest
import yaml

import apflow.cli as cli
from apflow.cli import build_parser, main


def _config(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_run_command_succeeds(tmp_path) -> None:
    config = _config(tmp_path, "problem = spp\nnx = 16\nt_end = 0.05\n")
    out = tmp_path / "out"
    assert main(["run", config, "--output", str(out)]) == 0
    summary = yaml.safe_load((out / "summary.yaml").read_text(encoding="utf-8"))
    assert summary["status"] == "completed"


def test_config_errors_exit_with_two(tmp_path) -> None:
    config = _config(tmp_path, "problem = spp\nresolution = 16\n")
    assert main(["run", config, "--output", str(tmp_path / "out")]) == 2
    assert main(["run", str(tmp_path / "missing.cfg")]) == 2


def test_runtime_failures_exit_with_three(tmp_path) -> None:
    config = _config(tmp_path, "problem = spp\nnx = 16\nt_end = 0.5\nmax_steps = 1\n")
    assert main(["run", config, "--output", str(tmp_path / "out")]) == 3


def test_converge_command(tmp_path) -> None:
    config = _config(tmp_path, "problem = spp\nepsilon = 0.5\nt_end = 0.01\n")
    out = tmp_path / "eoc"
    assert main(["converge", config, "--n", "8,16", "--ref", "32", "--workers", "1", "--output", str(out)]) == 0
    assert (out / "eoc_rho.csv").exists()
    assert (out / "eoc_u.csv").exists()
    assert main(["converge", config, "--n", "12", "--ref", "32", "--output", str(out)]) == 3


def test_resolution_list_must_be_integers() -> None:
    with pytest.raises(SystemExit) as info:
        build_parser().parse_args(["converge", "x.cfg", "--n", "8,sixteen", "--ref", "32"])
    assert info.value.code == 2


def test_subcommand_is_required() -> None:
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


@pytest.mark.parametrize("verdict, code", [(True, 0), (False, 3)])
def test_validate_exit_code(monkeypatch, verdict, code) -> None:
    monkeypatch.setattr(cli, "cmd_validate", lambda: verdict)
    assert main(["--log-level", "WARNING", "validate"]) == code
