"""Command-line interface tests: exit codes, outputs, and diagnostics."""

import json

import pytest

from consensus_adversary.cli import ENV_OUT, main
from consensus_adversary.scenario import paper_k4_scenario, save_scenario


@pytest.fixture
def scenarios(tmp_path):
    paths = {}
    for kind in ("none", "link", "noise"):
        path = tmp_path / f"{kind}.json"
        save_scenario(paper_k4_scenario(kind, steps=50), path)
        paths[kind] = path
    return paths


class TestExitCodes:
    def test_missing_scenario_flag(self, capsys):
        assert main(["attack1"]) == 2
        assert "--scenario" in capsys.readouterr().err

    def test_missing_scenario_file(self, tmp_path, capsys):
        assert main(["attack1", "--scenario", str(tmp_path / "nope.json")]) == 2
        assert "nope.json" in capsys.readouterr().err

    def test_malformed_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["simulate", "--scenario", str(bad)]) == 2

    def test_attack_kind_mismatch(self, scenarios, tmp_path):
        assert main(["simulate", "--scenario", str(scenarios["link"]),
                     "--out", str(tmp_path / "o")]) == 2
        assert main(["attack1", "--scenario", str(scenarios["noise"]),
                     "--out", str(tmp_path / "o")]) == 2
        assert main(["attack2", "--scenario", str(scenarios["link"]),
                     "--out", str(tmp_path / "o")]) == 2

    def test_bad_steps_override(self, scenarios, tmp_path):
        assert main(["simulate", "--scenario", str(scenarios["none"]),
                     "--steps", "0", "--out", str(tmp_path / "o")]) == 2

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit):
            main(["frobnicate"])


class TestSubcommands:
    def test_simulate_writes_report(self, scenarios, tmp_path, capsys):
        out = tmp_path / "sim"
        assert main(["simulate", "--scenario", str(scenarios["none"]),
                     "--out", str(out)]) == 0
        assert (out / "trajectory.csv").exists()
        assert "J =" in capsys.readouterr().err

    def test_attack1_writes_report(self, scenarios, tmp_path):
        out = tmp_path / "a1"
        assert main(["attack1", "--scenario", str(scenarios["link"]),
                     "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["attack"] == "link"
        assert summary["stationary"] is True

    def test_attack2_writes_report(self, scenarios, tmp_path):
        out = tmp_path / "a2"
        assert main(["attack2", "--scenario", str(scenarios["noise"]),
                     "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["attack"] == "noise"
        assert (out / "control.csv").exists()

    def test_steps_override_applies(self, scenarios, tmp_path):
        out = tmp_path / "short"
        assert main(["simulate", "--scenario", str(scenarios["none"]),
                     "--steps", "10", "--out", str(out)]) == 0
        rows = (out / "trajectory.csv").read_text().splitlines()
        assert len(rows) == 12  # header + 11 samples

    def test_quiet_suppresses_diagnostics(self, scenarios, tmp_path, capsys):
        assert main(["simulate", "--scenario", str(scenarios["none"]),
                     "--out", str(tmp_path / "q"), "--quiet"]) == 0
        assert capsys.readouterr().err == ""

    def test_env_var_default_out(self, scenarios, tmp_path, monkeypatch):
        monkeypatch.setenv(ENV_OUT, str(tmp_path))
        assert main(["simulate", "--scenario", str(scenarios["none"]),
                     "--quiet"]) == 0
        assert (tmp_path / "paper_k4_none" / "summary.json").exists()


class TestVerify:
    def test_fast_suite_passes(self, capsys):
        assert main(["verify", "--fast"]) == 0
        out = capsys.readouterr().out
        assert "[PASS] thm2-mp-consistency" in out
        assert "[FAIL]" not in out

    def test_fault_injection_is_caught(self, capsys):
        assert main(["verify", "--fast", "--inject-fault",
                     "flip-switching-sign"]) == 1
        assert "[FAIL] thm2-mp-consistency" in capsys.readouterr().out


class TestReproducePaper:
    def test_reference_pipeline(self, tmp_path, capsys):
        out = tmp_path / "repro"
        assert main(["reproduce-paper", "--out", str(out)]) == 0
        err = capsys.readouterr().err
        assert "[PASS] w13(0) = 2.2101" in err
        assert "[PASS] stationary control breaking (1,3),(1,4)" in err
        for sub in ("no_attack", "attack1", "attack2"):
            assert (out / sub / "summary.json").exists()
