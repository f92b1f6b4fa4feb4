import dataclasses

import pytest

from ahflow.cli.convergence import SATURATED, ConvergenceTable, observed_orders
from ahflow.cli.scenario import Scenario
from ahflow.cli.tasks import TASK_RUNNERS, convergence_result
from ahflow.flow import flow_run, hyperbolic_state
from ahflow.options import get_options

pytestmark = pytest.mark.unit


def checks(result):
    return {c.name: c.passed for c in result.checks}


def table(residuals, decay, min_scalar=(0.0, 0.0, 0.0)):
    spacings = (0.04, 0.02, 0.01)
    residual_orders, residual_ratios = observed_orders(residuals, spacings, 1e-12)
    decay_orders, decay_ratios = observed_orders(decay, spacings, 1e-12)
    return ConvergenceTable(
        points=(100, 200, 400),
        spacings=spacings,
        errors={"scalar_residual": residuals, "decay_slope_error": decay, "min_scalar": min_scalar},
        orders={"scalar_residual": residual_orders, "decay_slope_error": decay_orders, "min_scalar": (None, None)},
        ratios={"scalar_residual": residual_ratios, "decay_slope_error": decay_ratios, "min_scalar": (None, None)},
    )


@pytest.mark.parametrize(
    "residuals, decay, min_scalar, expected",
    [
        ((1.6e-3, 4e-4, 1e-4), (4e-2, 1e-2, 2.5e-3), (0.0, 0.0, 0.0), {}),
        # only the last refinement is second order
        ((1e-3, 9e-4, 2.25e-4), (4e-2, 1e-2, 2.5e-3), (0.0, 0.0, 0.0), {"scalar residual converges": False}),
        # monotone but too slow
        ((1.6e-3, 4e-4, 1e-4), (4e-2, 3e-2, 2.9e-2), (0.0, 0.0, 0.0), {"decay error decreases": False}),
        ((1.6e-3, 4e-4, 1e-4), (4e-2, 1e-2, 2.5e-3), (2e-6, 0.0, 0.0), {"scalar curvature lower bound": False}),
        ((1e-14, 1e-15, 1e-15), (4e-2, 1e-2, 2.5e-3), (0.0, 0.0, 0.0), {}),
    ],
)
def test_convergence_checks_every_refinement(mocker, residuals, decay, min_scalar, expected):
    mocker.patch("ahflow.cli.tasks.convergence_study", return_value=table(residuals, decay, min_scalar))
    result = convergence_result(Scenario(name="x", task="flow-pde"))
    outcome = checks(result)
    assert set(outcome) == {"scalar residual converges", "decay error decreases", "scalar curvature lower bound"}
    for name, passed in outcome.items():
        assert passed == expected.get(name, True), name


def test_saturated_residuals_are_reported():
    orders, ratios = observed_orders((1e-14, 1e-15), (0.02, 0.01), 1e-12)
    assert orders == (SATURATED,)
    assert ratios == (None,)


@pytest.fixture
def hyperbolic_scenario():
    return Scenario(name="x", task="flow-pde", initial="hyperbolic", points=32, duration=0.01, cadence=1)


def test_scalar_bound_ignores_the_discretization_slack(mocker, hyperbolic_scenario):
    run = flow_run(hyperbolic_state(3, points=32), 0.01, 1)
    dipped = dataclasses.replace(run, samples=tuple(dataclasses.replace(s, min_scalar=-1e-5) for s in run.samples))
    mocker.patch("ahflow.cli.tasks.flow_run", return_value=dipped)
    mocker.patch("ahflow.cli.tasks.tolerance_from_initial", return_value=1e-3)
    mocker.patch("ahflow.cli.tasks.lower_order_leak", return_value=0.0)
    result = TASK_RUNNERS["flow-pde"](hyperbolic_scenario, get_options())
    assert checks(result)["scalar curvature lower bound"] is False
    assert result.values["max_principle_margin"] == pytest.approx(-1e-5 + 1e-6)
    assert result.values["max_principle_margin_with_slack"] > 0
    assert result.values["discretization_slack"] == 1e-3


def test_lower_orders_are_held_to_the_initial_noise_floor(mocker, hyperbolic_scenario):
    mocker.patch("ahflow.cli.tasks.lower_order_leak", return_value=1e6)
    result = TASK_RUNNERS["flow-pde"](hyperbolic_scenario, get_options())
    columns = result.tables["lower_orders"].columns
    rows = result.tables["lower_orders"].rows
    assert columns == ("t", "magnitude", "budget", "leak_allowance")
    # a large leak widens only the reported allowance
    assert rows[-1][3] == pytest.approx(1e6 * 0.01)
    assert rows[-1][2] == rows[0][2]
    assert checks(result)["lower orders stay at the noise floor"] is True
