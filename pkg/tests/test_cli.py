"""End-to-end tests for the command-line pipelines."""

import copy

import pytest
import yaml

from gamma_observer.cli import COMMANDS, build_parser, main, run
from gamma_observer.core.error_handler import ErrorHandler
from gamma_observer.utils.config import default_config


def write_scenario(path, data):
    with open(path, "w") as f:
        yaml.safe_dump(data, f, sort_keys=False)
    return str(path)


@pytest.fixture
def scenario_data(tmp_path):
    data = copy.deepcopy(default_config())
    data["output_dir"] = str(tmp_path / "results")
    data["reconstruction"]["trials"] = 3
    data["reconstruction"]["sweep_locations"] = [[0.3], [0.5], [0.7]]
    return data


@pytest.fixture
def scenario_path(tmp_path, scenario_data):
    return write_scenario(tmp_path / "scenario.yaml", scenario_data)


class TestRun:
    """Test cases for the async run entry point."""

    async def test_all_pipelines(self, tmp_path, scenario_path):
        code = await run(scenario_path, "all", quiet=True)
        assert code == 0

        results = tmp_path / "results"
        for name in (
            "report.txt",
            "run.log",
            "trajectory.csv",
            "gramian_spectrum.csv",
            "decay.csv",
            "sweep.csv",
            "monotonicity.csv",
        ):
            assert (results / name).exists(), name

        report = (results / "report.txt").read_text()
        assert "[observability]" in report
        assert "FAIL" not in report
        rows = (results / "monotonicity.csv").read_text().strip().splitlines()
        assert len(rows) == 1 + 3 * 2

    async def test_simulate_is_deterministic(self, tmp_path, scenario_path):
        first_dir = tmp_path / "first"
        second_dir = tmp_path / "second"
        assert await run(scenario_path, "simulate", out=str(first_dir), quiet=True) == 0
        assert await run(scenario_path, "simulate", out=str(second_dir), quiet=True) == 0
        assert (first_dir / "trajectory.csv").read_bytes() == (second_dir / "trajectory.csv").read_bytes()

    async def test_seeded_outputs_are_reproducible(self, tmp_path, scenario_data):
        scenario_data["reconstruction"]["trials"] = 6
        scenario_data["reconstruction"]["workers"] = 3
        path = write_scenario(tmp_path / "parallel.yaml", scenario_data)
        first_dir = tmp_path / "first"
        second_dir = tmp_path / "second"
        assert await run(path, "all", seed=7, out=str(first_dir), quiet=True) == 0
        assert await run(path, "all", seed=7, out=str(second_dir), quiet=True) == 0
        for name in ("monotonicity.csv", "gramian_spectrum.csv", "decay.csv", "sweep.csv"):
            assert (first_dir / name).read_bytes() == (second_dir / name).read_bytes(), name
        rows = (first_dir / "monotonicity.csv").read_text().strip().splitlines()[1:]
        assert {row.split(",")[1] for row in rows} == {str(7 + k) for k in range(6)}

    async def test_trials_override(self, tmp_path, scenario_path):
        out = tmp_path / "override"
        assert await run(scenario_path, "monotonicity", trials=2, seed=4, out=str(out), quiet=True) == 0
        rows = (out / "monotonicity.csv").read_text().strip().splitlines()[1:]
        assert {row.split(",")[1] for row in rows} == {"4", "5"}

    async def test_bad_region_edge(self, tmp_path, scenario_data, capsys):
        scenario_data["regions"][0]["pieces"] = [{"edge": "middle"}]
        path = write_scenario(tmp_path / "bad.yaml", scenario_data)
        handler = ErrorHandler()

        assert await run(path, "simulate", quiet=True, error_handler=handler) == 2
        assert "regions.0.pieces.0" in capsys.readouterr().err
        assert handler.get_error_stats()["error_types"] == {"configuration_error": 1}

    async def test_invalid_field(self, tmp_path, scenario_data, capsys):
        scenario_data["domain"]["diffusivity"] = -1.0
        path = write_scenario(tmp_path / "bad.yaml", scenario_data)
        assert await run(path, "observability", quiet=True) == 2
        assert "domain.diffusivity" in capsys.readouterr().err

    async def test_missing_file(self, tmp_path, capsys):
        assert await run(str(tmp_path / "absent.yaml"), "simulate", quiet=True) == 2
        assert "configuration_error" in capsys.readouterr().err

    async def test_malformed_yaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("domain: [1, 2\n")
        assert await run(str(path), "simulate", quiet=True) == 2


class TestMain:
    """Test cases for argument parsing and the process exit code."""

    def test_parser_knows_every_command(self):
        parser = build_parser()
        for command in COMMANDS:
            args = parser.parse_args([command, "--config", "scenario.yaml"])
            assert args.command == command
            assert args.config == "scenario.yaml"

    def test_command_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_main_exit_code(self, tmp_path, scenario_path):
        with pytest.raises(SystemExit) as info:
            main(["simulate", "--config", scenario_path, "--out", str(tmp_path / "main"), "--quiet"])
        assert info.value.code == 0
        assert (tmp_path / "main" / "report.txt").exists()
