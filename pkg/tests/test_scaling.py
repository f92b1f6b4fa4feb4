import numpy as np
import pytest

from ahflow.errors import FlowException
from ahflow.flow import KappaState, hyperbolic_state, parabolic_scaling_run, perturbed_state
from ahflow.flow import scaling
from ahflow.flow.scaling import closed_form_mass
from ahflow.geometry import kappa_matrix
from ahflow.mass import geon_boundary_data

pytestmark = pytest.mark.unit

ELLS = (1.0, 2.0, 4.0, 8.0)


@pytest.fixture
def geon_kappa():
    return KappaState(3, 3, geon_boundary_data(3).kappa)


def test_ode_scaling_table(geon_kappa):
    table = parabolic_scaling_run(geon_kappa, ELLS, (0.25,))
    assert table.backend == "ode"
    assert table.m0 == -1.0
    assert len(table.rows) == len(ELLS)
    assert table.max_disagreement() <= 1e-6
    for row in table.rows:
        assert row.direct == pytest.approx(row.closed_form, rel=1e-8)


def test_deficit_exponent_approaches_two(geon_kappa):
    table = parabolic_scaling_run(geon_kappa, ELLS, (0.25,))
    direct = table.deficit_exponent(0.25)
    closed = table.deficit_exponent(0.25, column="closed_form")
    assert abs(direct - closed) <= 1e-6
    assert abs(direct - 2.0) <= 0.1


def test_closed_form_mass():
    assert closed_form_mass(2.0, 4, 1.0, 2.0) == pytest.approx(2.0 * np.exp(-0.5))


def test_vanishing_mass_has_no_deficit_exponent():
    table = parabolic_scaling_run(hyperbolic_state(3, points=32), (1.0, 2.0), (0.01,))
    assert table.backend == "pde"
    assert table.m0 == 0.0
    assert table.deficit_exponent() is None


def test_scaling_needs_positive_radii(geon_kappa):
    with pytest.raises(FlowException):
        parabolic_scaling_run(geon_kappa, (1.0, -2.0), (0.25,))


def test_scaling_needs_the_mass_order():
    state = KappaState(3, 2, ((0, 0, 0), (0, 1, 0), (0, 0, 1)))
    with pytest.raises(FlowException):
        parabolic_scaling_run(state, ELLS, (0.25,))


def test_scaling_needs_a_known_initial_state():
    with pytest.raises(FlowException):
        parabolic_scaling_run(object(), ELLS, (0.25,))


def test_direct_ode_path_uses_the_curvature_matrix(geon_kappa, mocker):
    spy = mocker.spy(scaling, "curvature_system_matrix")
    table = parabolic_scaling_run(geon_kappa, (1.0, 4.0), (0.25,))
    assert sorted(call.args[2] for call in spy.call_args_list) == [1.0, 4.0]
    assert table.max_disagreement() <= 1e-6


def test_direct_pde_path_agrees_with_the_rescaled_run():
    state = perturbed_state(3, kappa_matrix([[1, 0, 0], [0, 2, 0], [0, 0, -1]]), points=40)
    table = parabolic_scaling_run(state, (1.0, 2.0), (0.01,))
    assert table.backend == "pde"
    assert table.m0 != 0.0
    assert table.max_disagreement() <= 1e-6
