import csv
import io
import json

import pytest
from pydantic import ValidationError

from main import EXIT_BUDGET, EXIT_CONFIG, EXIT_OK, EXIT_VERIFICATION, build_parser, main
from Resources.Bounds import trivial_bound
from Resources.Config import RunConfig, Settings
from Resources.WeylElement import make_admissible

S_1_1_3 = ["sum", "--p", "3", "--blocks", "1,1", "--r", "1", "--psi", "1", "--psi-prime", "1"]


def _run(capsys, argv):
    code = main(argv)
    return code, capsys.readouterr().out


def test_sum_json(capsys):
    code, out = _run(capsys, S_1_1_3 + ["--format", "json"])
    assert code == EXIT_OK
    record = json.loads(out)
    assert record["schema"] == 1
    assert record["value_integer"] == -1
    assert record["cell_count"] == 2
    assert "elapsed_ms" not in record
    assert "breakdown" not in record


def test_sum_json_is_reproducible(capsys):
    _, first = _run(capsys, S_1_1_3 + ["--format", "json"])
    _, second = _run(capsys, S_1_1_3 + ["--format", "json", "--threads", "3"])
    assert first == second


def test_sum_text_with_zero_exponents(capsys):
    code, out = _run(capsys, ["sum", "--p", "5", "--blocks", "1,1,1", "--r", "0,0"])
    assert code == EXIT_OK
    assert "integer    = 1" in out
    assert "cell_count = 1" in out


def test_sum_csv_breakdown(capsys):
    code, out = _run(capsys, ["sum", "--p", "2", "--blocks", "1,1,1", "--r", "1,1", "--format", "csv", "--breakdown"])
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert out.startswith("schema,p,blocks")
    assert len(rows) == 2
    assert {row["assignment"] for row in rows} == {"0,1,0", "1,0,1"}
    assert all(row["cell_count"] == "3" for row in rows)
    assert sum(int(row["assignment_cell_count"]) for row in rows) == 3


def test_sum_csv_is_one_row_without_breakdown(capsys):
    code, out = _run(capsys, S_1_1_3 + ["--format", "csv"])
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1
    assert rows[0]["value_integer"] == "-1"
    assert rows[0]["assignment"] == ""


def test_cell_count_is_the_trivial_bound(capsys):
    code, out = _run(capsys, ["sum", "--p", "2", "--blocks", "2,3", "--r", "1,1,1,1", "--psi", "1,1,1,1",
                              "--psi-prime", "1,1,1,1", "--format", "json", "--timing"])
    assert code == EXIT_OK
    record = json.loads(out)
    assert record["cell_count"] == trivial_bound(make_admissible((2, 3)), (1, 1, 1, 1), 2)
    assert record["elapsed_ms"] >= 0


def test_gamma0_sum(capsys):
    code, out = _run(capsys, S_1_1_3 + ["--level", "1", "--format", "json"])
    assert code == EXIT_OK
    assert json.loads(out)["level"] == 1


def test_configuration_errors(capsys):
    assert main(["sum", "--p", "4", "--blocks", "1,1", "--r", "1"]) == EXIT_CONFIG
    assert main(["sum", "--p", "3", "--blocks", "1,1", "--r", "1,2"]) == EXIT_CONFIG
    assert main(["diagram", "--blocks", "3"]) == EXIT_CONFIG
    with pytest.raises(SystemExit) as e:
        main(["sum", "--p", "3"])
    assert e.value.code == EXIT_CONFIG
    with pytest.raises(SystemExit) as e:
        main(["sum", "--p", "3", "--blocks", "one,two"])
    assert e.value.code == EXIT_CONFIG


def test_budget_exit_code(capsys):
    code, out = _run(capsys, ["sum", "--p", "2", "--blocks", "2,3", "--r", "1,1,1,1", "--budget", "1"])
    assert code == EXIT_BUDGET
    assert out == ""


def test_diagram(capsys):
    code, out = _run(capsys, ["diagram", "--blocks", "2,3"])
    assert code == EXIT_OK
    assert sum(1 for line in out.splitlines() if "pos=" in line) == 6
    assert 'label="3"' in out


def test_bounds_csv(capsys):
    code, out = _run(capsys, ["bounds", "--p", "2", "--blocks", "1,1", "--r", "5", "--psi", "1", "--psi-prime", "1",
                              "--format", "csv"])
    assert code == EXIT_OK
    assert len(out.splitlines()) == 2


def test_bounds_with_level(capsys):
    code, out = _run(capsys, ["bounds", "--p", "3", "--blocks", "1,1,1", "--r", "1,2", "--psi", "1,1", "--psi-prime", "1,1",
                              "--level", "1", "--format", "json"])
    assert code == EXIT_OK
    row = json.loads(out)["rows"][0]
    assert row["level"] == 1
    assert row["weil_bound"] is None
    assert row["notes"][0].startswith("thm6 exponent uses 2n*l(w) with n=3")


def test_verify_oracle(capsys):
    code, out = _run(capsys, ["verify", "oracle", "--p", "2", "--blocks", "1,1,1", "--r", "1,1"])
    assert code == EXIT_OK
    assert out.splitlines() and all(line.startswith("ok") for line in out.splitlines())


def test_verify_json(capsys):
    code, out = _run(capsys, ["verify", "counts", "--p", "2", "--blocks", "1,1", "--max-r", "2", "--format", "json"])
    assert code == EXIT_OK
    document = json.loads(out)
    assert document["suite"] == "counts"
    assert len(document["cases"]) == 3
    assert all(case["passed"] for case in document["cases"])


def test_verify_exit_code_is_distinct():
    assert EXIT_VERIFICATION not in (EXIT_OK, EXIT_CONFIG, EXIT_BUDGET)


def test_thread_setting_from_the_environment(monkeypatch, capsys):
    monkeypatch.setenv("KLOOSTERMAN_THREADS", "3")
    monkeypatch.setenv("KLOOSTERMAN_BUDGET", "50")
    settings = Settings.from_environment(load_env_file=False)
    assert settings.threads == 3
    assert settings.budget == 50
    monkeypatch.setenv("KLOOSTERMAN_THREADS", "0")
    assert main(S_1_1_3) == EXIT_CONFIG


def test_budget_from_the_environment(monkeypatch, capsys):
    monkeypatch.setenv("KLOOSTERMAN_BUDGET", "1")
    code, _ = _run(capsys, ["sum", "--p", "2", "--blocks", "2,3", "--r", "1,1,1,1"])
    assert code == EXIT_BUDGET


def test_run_config_defaults_and_validation():
    config = RunConfig(p=3, blocks=[2, 3])
    assert config.N == 4
    assert config.r == [0, 0, 0, 0]
    assert config.psi_prime == [0, 0, 0, 0]
    with pytest.raises(ValidationError):
        RunConfig(p=1, blocks=[1, 1])
    with pytest.raises(ValidationError):
        RunConfig(p=3, blocks=[1, 0])
    with pytest.raises(ValidationError):
        RunConfig(p=3, blocks=[1, 1], r=[-1])
    with pytest.raises(ValidationError):
        RunConfig(p=3, blocks=[1, 1], level=-1)


def test_parser_lists_every_command():
    parser = build_parser()
    assert parser.parse_args(["sum", "--p", "2", "--blocks", "1,1"]).command == "sum"
    assert parser.parse_args(["bounds", "--p", "2", "--blocks", "1,1"]).command == "bounds"
    assert parser.parse_args(["diagram", "--blocks", "1,1"]).command == "diagram"
    assert parser.parse_args(["verify", "bruhat"]).suite == "bruhat"
