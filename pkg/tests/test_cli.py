"""
Tests for the aia command line.
"""

import json

import pytest
from click.testing import CliRunner

from src.cli.main import EXIT_INTERNAL, EXIT_NO_PLAN, EXIT_USAGE, cli, main

COV = [[0.05, 0.0], [0.0, 0.05]]

PAIR = {
    "name": "pair",
    "workspace": {"width": 5.0, "height": 5.0},
    "robots": [{"x": 1.0, "y": 1.0}, {"x": 2.0, "y": 1.0}],
    "primitives": {"v": [0.0, 0.2, 1.0], "omega_deg": [0, 30, -30]},
    "targets": [{"prior_mean": [1.3, 1.2], "prior_cov": COV}, {"prior_mean": [1.7, 1.2], "prior_cov": COV}],
    "default_delta": 1e-3,
    "bias": {"enabled": True},
    "planner": {"n_max": 40},
}


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "pair.json"
    path.write_text(json.dumps(PAIR))
    return path


def plan_into(runner, scenario_file, out, *extra):
    return runner.invoke(cli, ["plan", "-s", str(scenario_file), "--seed", "1", "-o", str(out), *extra])


class TestPlanCommand:
    """Tests for aia plan."""

    def test_writes_plan(self, runner, scenario_file, tmp_path):
        """Should write the plan and run metadata."""
        result = plan_into(runner, scenario_file, tmp_path / "out")
        assert result.exit_code == 0, result.output
        assert (tmp_path / "out" / "plan.json").exists()
        assert (tmp_path / "out" / "run_meta.json").exists()

    def test_csv_format(self, runner, scenario_file, tmp_path):
        """Should write the uncertainty table in CSV format."""
        result = plan_into(runner, scenario_file, tmp_path / "out", "--format", "csv")
        assert result.exit_code == 0, result.output
        assert (tmp_path / "out" / "uncertainty.csv").exists()

    def test_quiet_prints_cost(self, runner, scenario_file, tmp_path):
        """Should print only the total cost when quiet."""
        result = plan_into(runner, scenario_file, tmp_path / "out", "--quiet")
        assert result.exit_code == 0
        cost = float(result.output.strip())
        plan = json.loads((tmp_path / "out" / "plan.json").read_text())
        assert cost == plan["total_cost"]

    def test_no_plan(self, runner, scenario_file, tmp_path):
        """Should exit with the no-plan code and still write metadata."""
        result = plan_into(runner, scenario_file, tmp_path / "out", "--n-max", "0")
        assert result.exit_code == EXIT_NO_PLAN
        assert (tmp_path / "out" / "run_meta.json").exists()

    def test_missing_scenario(self, runner, tmp_path):
        """Should exit with the usage code for a missing scenario."""
        result = runner.invoke(cli, ["plan", "-s", str(tmp_path / "nope.json")])
        assert result.exit_code == EXIT_USAGE

    def test_invalid_scenario(self, runner, tmp_path):
        """Should name the offending field of an invalid scenario."""
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({**PAIR, "bogus": True}))
        result = runner.invoke(cli, ["plan", "-s", str(path)])
        assert result.exit_code == EXIT_USAGE
        assert "bogus" in result.output

    def test_bad_graph_option(self, runner, scenario_file):
        """Should reject an unknown graph option."""
        result = runner.invoke(cli, ["plan", "-s", str(scenario_file), "--graph", "ring"])
        assert result.exit_code == EXIT_USAGE

    def test_central(self, runner, scenario_file, tmp_path):
        """Should plan with the centralized planner."""
        result = plan_into(runner, scenario_file, tmp_path / "out", "--planner", "central")
        assert result.exit_code == 0, result.output


class TestReplayCommand:
    """Tests for aia replay."""

    def test_replay(self, runner, scenario_file, tmp_path):
        """Should replay a plan and confirm its cost."""
        out = tmp_path / "out"
        plan_into(runner, scenario_file, out)
        result = runner.invoke(
            cli, ["replay", "--plan", str(out / "plan.json"), "-s", str(scenario_file), "-o", str(tmp_path / "rp")]
        )
        assert result.exit_code == 0, result.output
        assert "Replay matches" in result.output
        assert (tmp_path / "rp" / "uncertainty.csv").exists()

    def test_tampered_cost(self, runner, scenario_file, tmp_path):
        """Should exit with the internal-error code when the cost was altered."""
        out = tmp_path / "out"
        plan_into(runner, scenario_file, out)
        plan = json.loads((out / "plan.json").read_text())
        plan["total_cost"] *= 1.5
        (out / "plan.json").write_text(json.dumps(plan))
        result = runner.invoke(cli, ["replay", "--plan", str(out / "plan.json"), "-s", str(scenario_file)])
        assert result.exit_code == EXIT_INTERNAL

    def test_other_scenario(self, runner, scenario_file, tmp_path):
        """Should refuse to replay against a different scenario."""
        out = tmp_path / "out"
        plan_into(runner, scenario_file, out)
        result = runner.invoke(cli, ["replay", "--plan", str(out / "plan.json"), "-s", "desk"])
        assert result.exit_code == EXIT_USAGE


class TestExperimentCommands:
    """Tests for aia bench and aia compare-graphs."""

    def test_bench(self, runner, scenario_file, tmp_path):
        """Should write one CSV row per planner for each cell."""
        result = runner.invoke(
            cli,
            ["bench", "-s", str(scenario_file), "--cells", "2/2", "--graph", "full", "--trials", "1",
             "--n-max", "10", "-o", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        assert (tmp_path / "bench.csv").read_text().count("\n") == 3

    def test_bench_json(self, runner, scenario_file, tmp_path):
        """Should write benchmark rows as JSON."""
        result = runner.invoke(
            cli,
            ["bench", "-s", str(scenario_file), "--cells", "2/2", "--graph", "full", "--trials", "1",
             "--n-max", "10", "-o", str(tmp_path), "--format", "json"],
        )
        assert result.exit_code == 0, result.output
        assert len(json.loads((tmp_path / "bench.json").read_text())) == 2

    def test_bad_cells(self, runner, scenario_file):
        """Should reject a malformed cell list."""
        result = runner.invoke(cli, ["bench", "-s", str(scenario_file), "--cells", "2x2"])
        assert result.exit_code == EXIT_USAGE

    def test_compare_graphs(self, runner, scenario_file, tmp_path):
        """Should write the graph comparison table."""
        result = runner.invoke(
            cli,
            ["compare-graphs", "-s", str(scenario_file), "--graph", "full", "--graph", "none", "--trials", "1",
             "--n-max", "30", "-o", str(tmp_path)],
        )
        assert result.exit_code == 0, result.output
        assert (tmp_path / "graphs.csv").exists()


class TestInfoCommands:
    """Tests for aia info and aia schema."""

    def test_info(self, runner):
        """Should list the bundled scenarios."""
        result = runner.invoke(cli, ["info"])
        assert result.exit_code == 0
        assert "desk" in result.output

    def test_schema(self, runner):
        """Should print the scenario JSON schema."""
        result = runner.invoke(cli, ["schema"])
        assert result.exit_code == 0
        assert "workspace" in json.loads(result.output)["properties"]


class TestMain:
    """Tests for the main entry point."""

    def test_usage_error_exits_one(self):
        """Should exit with the usage code on an unknown option."""
        with pytest.raises(SystemExit) as err:
            main(["plan", "--no-such-option"])
        assert err.value.code == EXIT_USAGE

    def test_version(self, capsys):
        """Should print the package version."""
        with pytest.raises(SystemExit) as err:
            main(["--version"])
        assert err.value.code == 0
        assert "0.1.0" in capsys.readouterr().out


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
