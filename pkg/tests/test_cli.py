"""Command-line interface: subcommands, config plumbing, exit codes."""

import json

import pytest

from peakshave.cli import EXIT_NO_CONVERGENCE, EXIT_OK, EXIT_VALIDATION, main
from peakshave.harness import load_latency, load_trace

from tests.test_experiment import small_geo_config


class TestSynthCommands:
    def test_synth_trace(self, tmp_path, capsys):
        out = tmp_path / "trace.csv"
        code = main(
            [
                "synth-trace",
                "--base", "1000", "--amplitude", "600",
                "--period-slots", "24", "--out", str(out),
            ]
        )
        assert code == EXIT_OK
        trace = load_trace(out)
        assert len(trace) == 24
        assert trace.demand.max() == pytest.approx(1600.0)

    def test_synth_latency(self, tmp_path):
        out = tmp_path / "lat.csv"
        code = main(
            ["synth-latency", "--clients", "5", "--datacenters", "3", "--out", str(out)]
        )
        assert code == EXIT_OK
        assert load_latency(out).shape == (5, 3)

    def test_synth_trace_validation_error(self, tmp_path):
        code = main(
            ["synth-trace", "--base", "10", "--amplitude", "50", "--out", str(tmp_path / "x.csv")]
        )
        assert code == EXIT_VALIDATION


class TestScheduleCommand:
    def test_default_run(self, tmp_path, capsys):
        code = main(["schedule", "--out", str(tmp_path)])
        assert code == EXIT_OK
        captured = capsys.readouterr().out
        assert "greedy" in captured
        costs = json.loads((tmp_path / "costs.json").read_text())
        assert costs["greedy"]["saving_vs_baseline"] > 0

    def test_single_scheme(self, tmp_path):
        code = main(["schedule", "--scheme", "greedy", "--out", str(tmp_path)])
        assert code == EXIT_OK
        costs = json.loads((tmp_path / "costs.json").read_text())
        assert list(costs) == ["greedy"]


class TestRouteCommand:
    def test_config_file(self, tmp_path):
        config = small_geo_config(tmp_path / "out")
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config.to_dict()))
        code = main(["route", "--config", str(path)])
        assert code == EXIT_OK
        costs = json.loads((tmp_path / "out" / "costs.json").read_text())
        assert "admm" in costs

    def test_non_convergence_exit_code(self, tmp_path):
        config = small_geo_config(tmp_path / "out")
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config.to_dict()))
        code = main(["route", "--config", str(path), "--max-iter", "1"])
        assert code == EXIT_NO_CONVERGENCE

    def test_missing_config_file(self, tmp_path):
        code = main(["route", "--config", str(tmp_path / "nope.json")])
        assert code == EXIT_VALIDATION

    def test_flag_overrides_reach_solver(self, tmp_path):
        config = small_geo_config(tmp_path / "out")
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config.to_dict()))
        code = main(
            ["route", "--config", str(path), "--eps-rel", "1e-3", "--seed", "5"]
        )
        assert code == EXIT_OK
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["solver"]["eps_rel"] == 1e-3
        assert manifest["seed"] == 5


class TestCompareCommand:
    def test_compare_small_config(self, tmp_path, capsys):
        config = small_geo_config(tmp_path / "out")
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config.to_dict()))
        code = main(["compare", "--config", str(path)])
        assert code == EXIT_OK
        costs = json.loads((tmp_path / "out" / "costs.json").read_text())
        assert set(costs) == {"baseline", "energy", "demand", "admm", "admm+alg1"}
