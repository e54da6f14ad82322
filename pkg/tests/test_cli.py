"""Tests for clock_engine.cli."""

import csv

import pytest

from clock_engine.cli import (
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_PARTIAL_FAILURE,
    main,
    parse_args,
)
from clock_engine.config import FIELD_NAMES
from clock_engine.utils import MIXED_FUEL_COLUMNS, RUN_COLUMNS


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Remove any CLOCK_ENGINE_* variables from the test environment."""
    for field in FIELD_NAMES:
        monkeypatch.delenv("CLOCK_ENGINE_" + field.upper(), raising=False)


def _read(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


class TestParseArgs:
    """Tests for parse_args."""

    def test_flags_default_to_none(self):
        args = parse_args(["run"])
        assert args.command == "run"
        assert args.beta is None
        assert args.classical_limit is None
        assert args.l_values is None

    def test_hyphenated_flags(self):
        args = parse_args(["therm", "--n-beta", "3", "--tau-beta", "0.5", "-t", "bosonic"])
        assert (args.n_beta, args.tau_beta, args.therm_model) == (3, 0.5, "bosonic")

    def test_subcommand_required(self, capsys):
        with pytest.raises(SystemExit) as info:
            parse_args([])
        assert info.value.code == EXIT_CONFIG_ERROR
        assert "error:" in capsys.readouterr().err

    def test_rejects_unknown_mode(self):
        with pytest.raises(SystemExit) as info:
            parse_args(["run", "-m", "quantum"])
        assert info.value.code == EXIT_CONFIG_ERROR

    def test_unknown_flag_is_config_error(self):
        with pytest.raises(SystemExit) as info:
            parse_args(["sweep", "--no-such-flag"])
        assert info.value.code == EXIT_CONFIG_ERROR


class TestMain:
    """Tests for main exit codes and output."""

    def test_run_writes_csv(self, tmp_path):
        out = tmp_path / "run.csv"
        code = main(parse_args(["run", "-l", "1", "--dt", "0.05", "-o", str(out), "-q"]))
        assert code == EXIT_OK
        rows = _read(out)
        assert list(rows[0]) == RUN_COLUMNS
        assert rows[0]["n_steps"] == "31"

    def test_sweep_to_stdout(self, capsys):
        code = main(parse_args(["sweep", "--l-values", "0.5,1", "--dt-values", "0.1,0.2"]))
        assert code == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == ",".join(RUN_COLUMNS)
        assert [line.split(",")[:2] for line in lines[1:]] == [
            ["0.5", "0.1"],
            ["0.5", "0.2"],
            ["1", "0.1"],
            ["1", "0.2"],
        ]

    def test_classical_mixed_fuel(self, tmp_path):
        out = tmp_path / "fuel.csv"
        argv = ["mixed-fuel", "--classical-limit", "--q-values", "0:1:0.5", "-o", str(out), "-q"]
        assert main(parse_args(argv)) == EXIT_OK
        rows = _read(out)
        assert list(rows[0]) == MIXED_FUEL_COLUMNS
        assert [r["q"] for r in rows] == ["0", "0.5", "1"]
        assert all(r["classical_limit"] == "true" for r in rows)

    def test_config_file_values_are_used(self, tmp_path):
        config = tmp_path / "engine.env"
        config.write_text("l_values=1,5\n")
        out = tmp_path / "zeno.csv"
        assert main(parse_args(["zeno", "-c", str(config), "-o", str(out), "-q"])) == EXIT_OK
        assert [r["l"] for r in _read(out)] == ["1", "5"]

    def test_invalid_value_is_config_error(self, tmp_path):
        out = tmp_path / "run.csv"
        assert main(parse_args(["run", "--beta", "-1", "-o", str(out)])) == EXIT_CONFIG_ERROR
        assert not out.exists()

    def test_bad_grid_is_config_error(self):
        assert main(parse_args(["sweep", "--dt-values", "abc"])) == EXIT_CONFIG_ERROR

    def test_missing_config_file_is_config_error(self, tmp_path):
        argv = ["run", "-c", str(tmp_path / "nonexistent.env")]
        assert main(parse_args(argv)) == EXIT_CONFIG_ERROR

    def test_failed_rows_give_partial_failure(self, tmp_path):
        out = tmp_path / "run.csv"
        argv = ["run", "-m", "unselective", "-t", "bosonic", "--tau-beta", "1", "-o", str(out), "-q"]
        assert main(parse_args(argv)) == EXIT_PARTIAL_FAILURE
        assert out.read_text(encoding="utf-8") == ",".join(RUN_COLUMNS) + "\n"
