import csv
import json
from fractions import Fraction

import numpy as np
import pytest
from click.testing import CliRunner

from ahflow.cli import EXIT_CHECK_FAILED, EXIT_NUMERICAL, EXIT_OK, EXIT_SCENARIO, main, run_scenario
from ahflow.cli.report import TaskResult, Table, emit_report, format_cell, plain, write_csv
from ahflow.cli.scenario import SCENARIO_SCHEMA, load_scenario, scenario_from_document
from ahflow.errors import CheckFailure, ScenarioError, StabilityError


def write_scenario(tmp_path, **fields):
    document = {"name": "case", "output_dir": str(tmp_path / "out")}
    document.update(fields)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(document))
    return path


def read_summary(tmp_path):
    return json.loads((tmp_path / "out" / "summary.json").read_text())


def read_table(tmp_path, name):
    with open(tmp_path / "out" / f"{name}.csv", newline="") as handle:
        return list(csv.reader(handle))


@pytest.mark.unit
def test_schema_command_prints_the_schema():
    result = CliRunner().invoke(main, ["schema"])
    assert result.exit_code == 0
    assert json.loads(result.output) == SCENARIO_SCHEMA


@pytest.mark.unit
def test_minimal_document_gets_defaults():
    scenario = scenario_from_document({"name": "x", "task": "kappa-ode"})
    assert scenario.task == "kappa-ode"
    assert scenario.method == "rk4"
    assert scenario.expansion_orders == (1, 2, 3)
    assert scenario.order == 3
    assert not scenario.is_grid_based
    assert scenario.to_record()["ells"] == [1.0, 2.0, 4.0, 8.0]


@pytest.mark.unit
def test_hyphenated_enums_survive_the_schema():
    scenario = scenario_from_document({"name": "x", "task": "flow-pde", "method": "exact-exponential"})
    assert scenario.method == "exact-exponential"
    assert scenario.is_grid_based


@pytest.mark.unit
@pytest.mark.parametrize(
    "document",
    [
        {"name": "x", "task": "kappa-ode", "colour": "red"},
        {"name": "x", "task": "unknown-task"},
        {"name": "x", "task": "kappa-ode", "n": "three"},
        {"name": "x", "task": "kappa-ode", "n": 2},
        {"name": "x", "task": "flow-pde", "k": 1},
        {"name": "x", "task": "kappa-ode", "m": 4},
        {"name": "x", "task": "kappa-ode", "kappa": [["0", "0"], ["0", "0"]]},
        {"name": "x", "task": "kappa-ode", "kappa": [["0", "1", "0"], ["0", "0", "0"], ["0", "0", "0"]]},
        {"name": "x", "task": "kappa-ode", "kappa": [["1/0", "0", "0"], ["0", "0", "0"], ["0", "0", "0"]]},
        {"name": "x", "task": "ch-mass", "k": 1, "kappa": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "2"]]},
        {"name": "x", "task": "geon-mass", "moduli": ["1", "2"]},
        {"name": "x", "task": "geon-mass", "moduli": ["-1"]},
        {"name": "x", "task": "ch-mass", "radii": [200.0, 100.0]},
        {"name": "x", "task": "flow-pde", "dt": 0.0},
        {"name": "x", "task": "convergence-study", "levels": 1},
        {"name": "x", "task": "scaling-study", "ells": [1.0, -1.0]},
        ["not", "an", "object"],
    ],
)
def test_invalid_scenarios(document):
    with pytest.raises(ScenarioError):
        scenario_from_document(document)


@pytest.mark.unit
def test_unreadable_scenarios(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    with pytest.raises(ScenarioError):
        load_scenario(broken)


@pytest.mark.unit
def test_unknown_key_exits_with_scenario_status(tmp_path):
    path = write_scenario(tmp_path, task="kappa-ode", colour="red")
    result = CliRunner().invoke(main, ["run", str(path)])
    assert result.exit_code == EXIT_SCENARIO
    assert not (tmp_path / "out").exists()


@pytest.mark.integration
def test_geon_mass_run(tmp_path):
    path = write_scenario(tmp_path, task="geon-mass", n=3)
    result = CliRunner().invoke(main, ["run", str(path)])
    assert result.exit_code == EXIT_OK, result.output
    summary = read_summary(tmp_path)
    assert summary["passed"] is True
    assert summary["results"]["wang_mass_exact"] == "-8*pi**2/3"
    assert summary["checks"]["geon mass closed form"]["passed"] is True
    assert summary["files"] == ["ch_samples.csv"]
    assert read_table(tmp_path, "ch_samples")[0] == ["radius", "mass"]


@pytest.mark.integration
def test_verify_expansions_run(tmp_path):
    path = write_scenario(tmp_path, task="verify-expansions", n=3, seed=4)
    assert run_scenario(path) == EXIT_OK
    summary = read_summary(tmp_path)
    assert all(entry["residual"] == "0" for entry in summary["results"]["entries"])
    assert {entry["m"] for entry in summary["results"]["entries"]} == {1, 2, 3}
    assert "gauss-codazzi relations" in summary["checks"]
    rows = read_table(tmp_path, "residuals")
    assert rows[0] == ["m", "sample", "identity", "residual"]
    assert all(row[3] == "0" for row in rows[1:])


@pytest.mark.integration
def test_zero_kappa_ode_run(tmp_path):
    zero = [["0"] * 3 for _ in range(3)]
    path = write_scenario(tmp_path, task="kappa-ode", kappa=zero, m=2, duration=0.5, cadence=2)
    assert run_scenario(path) == EXIT_OK
    rows = read_table(tmp_path, "kappa")
    assert rows[0][:3] == ["t", "sigma", "sigma_predicted"]
    assert len(rows) == 4
    assert all(float(value) == 0.0 for row in rows[1:] for value in row[1:])
    assert read_summary(tmp_path)["checks"]["zero data stays zero"]["passed"] is True


@pytest.mark.integration
def test_mass_order_kappa_ode_run(tmp_path):
    path = write_scenario(tmp_path, task="kappa-ode", n=4, seed=3, duration=1.0, cadence=4)
    assert run_scenario(path) == EXIT_OK
    checks = read_summary(tmp_path)["checks"]
    assert checks["mass aspect eigenvector"]["passed"] is True


@pytest.mark.unit
def test_numerical_abort_exits_with_status_three(tmp_path, mocker):
    mocker.patch("ahflow.cli.execute", side_effect=StabilityError("component a lost positivity"))
    path = write_scenario(tmp_path, task="flow-pde")
    result = CliRunner().invoke(main, ["run", str(path)])
    assert result.exit_code == EXIT_NUMERICAL


@pytest.mark.unit
def test_failed_check_exits_with_status_one(tmp_path, mocker):
    failed = TaskResult("kappa-ode")
    failed.check("mass aspect decay", False, "relative error 1e-2")
    mocker.patch("ahflow.cli.execute", return_value=failed)
    path = write_scenario(tmp_path, task="kappa-ode")
    assert run_scenario(path) == EXIT_CHECK_FAILED
    summary = read_summary(tmp_path)
    assert summary["passed"] is False
    assert summary["checks"]["mass aspect decay"] == {"passed": False, "detail": "relative error 1e-2"}


@pytest.mark.unit
def test_raised_check_failure_exits_with_status_one(tmp_path, mocker):
    mocker.patch("ahflow.cli.execute", side_effect=CheckFailure("deficit exponent"))
    assert run_scenario(write_scenario(tmp_path, task="scaling-study")) == EXIT_CHECK_FAILED


@pytest.mark.unit
def test_converge_needs_a_grid_task(tmp_path):
    path = write_scenario(tmp_path, task="kappa-ode")
    result = CliRunner().invoke(main, ["converge", str(path), "--levels", "2"])
    assert result.exit_code == EXIT_SCENARIO


@pytest.mark.unit
def test_converge_refuses_a_single_level(tmp_path):
    path = write_scenario(tmp_path, task="flow-pde")
    result = CliRunner().invoke(main, ["converge", str(path), "--levels", "1"])
    assert result.exit_code == 2
    assert "levels" in result.output


@pytest.mark.unit
def test_empty_table_has_a_header(tmp_path):
    path = tmp_path / "empty.csv"
    write_csv(path, ("t", "mass"), [])
    assert path.read_text() == "t,mass\n"
    with pytest.raises(ValueError):
        write_csv(path, ("t", "mass"), [(1.0,)])


@pytest.mark.unit
def test_report_writes_every_table(tmp_path):
    scenario = scenario_from_document({"name": "x", "task": "kappa-ode", "output_dir": str(tmp_path / "out")})
    result = TaskResult("kappa-ode")
    result.tables["empty"] = Table(("t",))
    result.values["value"] = float("nan")
    summary = emit_report(scenario, result)
    assert (tmp_path / "out" / "empty.csv").read_text() == "t\n"
    document = json.loads(summary.read_text())
    assert document["results"]["value"] == "nan"
    assert document["files"] == ["empty.csv"]
    assert document["passed"] is True


@pytest.mark.unit
@pytest.mark.parametrize(
    "value, expected",
    [(3, "3"), (True, "true"), ("0", "0"), (None, ""), (0.5, "5.000000000000e-01")],
)
def test_cell_format(value, expected):
    assert format_cell(value) == expected


@pytest.mark.unit
def test_plain_values():
    assert plain({"a": (Fraction(1, 3), np.float64(2.0)), 1: np.arange(2)}) == {"a": ["1/3", 2.0], "1": [0, 1]}
    assert plain(float("inf")) == "inf"


@pytest.mark.slow
def test_hyperbolic_flow_run(tmp_path):
    path = write_scenario(tmp_path, task="flow-pde", initial="hyperbolic", points=32, duration=0.05, cadence=2)
    assert run_scenario(path) == EXIT_OK
    rows = read_table(tmp_path, "flow")
    assert rows[0] == ["t", "mass_fitted", "mass_predicted", "max_abs_E", "min_scalar", "fit_condition"]
    assert len(rows) == 4
    assert read_summary(tmp_path)["checks"]["vanishing mass stays zero"]["passed"] is True
