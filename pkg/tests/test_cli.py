"""
Tests for the command-line entry point and its exit codes.
"""

import pytest

import app.simulator as simulator_module
from main import EXIT_CONFIG, EXIT_OK, EXIT_STAGE, main


def test_ledger_command(capsys):
    assert main(["ledger"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "DISCREPANCY LEDGER" in out
    assert "discrepancies" in out


def test_ledger_command_writes_csv(tmp_path):
    path = tmp_path / "ledger.csv"
    assert main(["ledger", "--csv", str(path)]) == EXIT_OK
    assert path.read_text().startswith("id,")


def test_report_reduction_command(capsys):
    assert main(["report-reduction", "--scene-extent", "1.0"]) == EXIT_OK
    assert "orders of magnitude saved = 3.574" in capsys.readouterr().out


def test_report_reduction_rejects_a_negative_extent():
    assert main(["report-reduction", "--scene-extent", "-1"]) == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "absent.yaml")]) == EXIT_CONFIG


def test_scale_must_divide_the_decimation():
    assert main(["simulate", "--preset", "table1", "--scale", "7"]) == EXIT_CONFIG


def test_simulate_preset(tmp_path, capsys):
    code = main(["simulate", "--preset", "fig2", "--scale", "100", "--seed", "4", "--out", str(tmp_path)])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "run directory:" in out
    runs = list(tmp_path.iterdir())
    assert len(runs) == 1 and runs[0].name.startswith("fig2_")


def test_simulate_honours_the_output_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SAL_OUTPUT_DIR", str(tmp_path))
    assert main(["simulate", "--preset", "fig2", "--scale", "100"]) == EXIT_OK
    assert any(p.name.startswith("fig2_") for p in tmp_path.iterdir())


def test_stage_failure_exit_code(tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(simulator_module, "measure_sideband_powers", broken)
    assert main(["simulate", "--preset", "fig2", "--scale", "100", "--out", str(tmp_path)]) == EXIT_STAGE


def test_simulate_needs_a_source():
    with pytest.raises(SystemExit):
        main(["simulate"])
