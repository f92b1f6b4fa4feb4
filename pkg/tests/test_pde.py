import numpy as np
import pytest
import sympy

from ahflow.errors import FitConditionError, FlowException, InsufficientSamples, StabilityError
from ahflow.flow import (
    decay_slope,
    flow_run,
    geon_state,
    hyperbolic_state,
    mass_fit,
    perturbed_state,
    rdtf_step,
    scalar_evolution_residual,
)
from ahflow.flow.fitting import decay_error, noise_floor
from ahflow.flow.pde import (
    RicciDeTurckOperator,
    einstein_scalar,
    lower_order_budget,
    lower_order_leak,
    max_principle_margin,
    stable_time_step,
    step_history,
    tolerance_from_initial,
)
from ahflow.flow.residual import residual_at
from ahflow.geometry import kappa_matrix
from ahflow.options import get_options

PERTURBATION = kappa_matrix([[1, 0, 0], [0, 2, 0], [0, 0, -1]])


@pytest.mark.unit
def test_hyperbolic_state_is_stationary():
    state = hyperbolic_state(3, points=32)
    assert np.all(RicciDeTurckOperator(state)(state.vector()) == 0)
    np.testing.assert_array_equal(einstein_scalar(state)[:-1], 0.0)


@pytest.mark.unit
def test_fit_recovers_polynomial_data():
    fit = mass_fit(perturbed_state(3, PERTURBATION, points=40))
    np.testing.assert_allclose(np.diag(np.array(fit.kappa, dtype=float)), [1.0, 2.0, -1.0], atol=1e-8)
    expected = float(sympy.Rational(5, 3) * 8 * sympy.pi**2 / 3)
    assert fit.mass == pytest.approx(expected, rel=1e-8)
    assert fit.lower_order_magnitude() < 1e-10
    assert fit.window[0] > 0


@pytest.mark.unit
def test_fit_recovers_the_geon_mass():
    fit = mass_fit(geon_state(3, points=200))
    assert fit.mass == pytest.approx(float(-8 * sympy.pi**2 / 3), rel=1e-2)


@pytest.mark.unit
def test_fit_refuses_a_thin_window():
    options = get_options(fit_window=(2.0, 3.0))
    with pytest.raises(FitConditionError):
        mass_fit(hyperbolic_state(3, points=40), options)


@pytest.mark.unit
def test_decay_slope():
    t = np.linspace(0.0, 1.0, 5)
    assert decay_slope(t, 3.0 * np.exp(-2.0 * t)) == pytest.approx(-2.0)
    assert decay_slope(t, np.zeros_like(t)) is None
    with pytest.raises(FlowException):
        decay_slope(t[:1], t[:1])


@pytest.mark.unit
def test_vanishing_mass_stays_zero():
    run = flow_run(hyperbolic_state(3, points=32), 0.05, 2)
    assert len(run.samples) == 3
    assert np.all(run.masses == 0)
    assert run.decay_slope() is None
    assert decay_error(run) is None
    assert run.rows()[0][:3] == (0.0, 0.0, 0.0)
    assert run.metadata["boundary"] == "dirichlet"


@pytest.mark.unit
def test_flow_run_needs_an_interval():
    with pytest.raises(FlowException):
        flow_run(hyperbolic_state(3, points=32), 0.1, 0)


@pytest.mark.unit
def test_positivity_loss_aborts_the_flow():
    state = hyperbolic_state(3, points=32)
    a = state.a.copy()
    a[5] = -1.0
    broken = state.with_vector(np.concatenate([a[1:-1]] + [p[1:-1] for p in state.phis]), 0.0)
    with pytest.raises(StabilityError):
        rdtf_step(broken, 0.0)


@pytest.mark.unit
def test_stable_step_scales_with_the_curvature_radius():
    state = hyperbolic_state(3, points=32)
    wide = hyperbolic_state(3, points=32, ell=2.0)
    assert stable_time_step(wide) == pytest.approx(4 * stable_time_step(state))


@pytest.mark.unit
@pytest.mark.parametrize("ell", [2.0, 0.5])
def test_operator_on_the_scaled_metric_matches_the_unit_radius(ell):
    state = perturbed_state(3, PERTURBATION, points=40)
    scaled = perturbed_state(3, PERTURBATION, points=40, ell=ell)
    unit = RicciDeTurckOperator(state)(state.vector())
    rate = RicciDeTurckOperator(scaled)(scaled.vector())
    np.testing.assert_allclose(rate, unit / ell**2, rtol=1e-9, atol=1e-12)


@pytest.mark.unit
def test_scalar_residual_vanishes_on_the_hyperbolic_metric():
    history = step_history(hyperbolic_state(3, points=32), 2)
    field = scalar_evolution_residual(history)
    assert field.max_abs == 0.0
    assert residual_at(hyperbolic_state(3, points=32), 0.01).max_abs == 0.0


@pytest.mark.unit
def test_scalar_residual_needs_three_increasing_samples():
    state = hyperbolic_state(3, points=32)
    with pytest.raises(InsufficientSamples):
        scalar_evolution_residual([state, state])
    with pytest.raises(InsufficientSamples):
        scalar_evolution_residual([state, state, state])


@pytest.mark.unit
def test_noise_budgets():
    state = perturbed_state(3, PERTURBATION, points=40)
    tolerance = tolerance_from_initial(state)
    assert tolerance >= get_options().max_principle_floor
    fit = mass_fit(state)
    leak = lower_order_leak(state)
    assert leak >= 0
    assert lower_order_budget(fit) == pytest.approx(get_options().noise_floor_factor * noise_floor(fit))


@pytest.mark.slow
def test_geon_mass_decays_at_the_predicted_rate():
    state = geon_state(3, points=100)
    run = flow_run(state, 0.1, 2)
    assert decay_error(run) < 0.1
    assert max_principle_margin(run, tolerance_from_initial(state)) >= 0


@pytest.mark.slow
def test_geon_flow_at_desk_resolution():
    state = geon_state(3, points=400)
    initial_fit = mass_fit(state)
    run = flow_run(state, 0.5, 10, keep_states=False)
    assert decay_error(run) <= 0.05
    assert max_principle_margin(run, get_options().max_principle_floor) >= 0
    budget = lower_order_budget(initial_fit)
    assert all(s.fit.lower_order_magnitude() <= budget for s in run.samples)


@pytest.mark.slow
def test_decay_error_shrinks_under_refinement():
    errors = [decay_error(flow_run(geon_state(3, points=p), 0.5, 10, keep_states=False)) for p in (200, 400)]
    assert errors[1] <= 0.6 * errors[0]


@pytest.mark.slow
def test_geon_scalar_residual_is_second_order():
    residuals = [residual_at(geon_state(3, points=p), 0.05).max_abs for p in (100, 200, 400)]
    for coarse, fine in zip(residuals, residuals[1:]):
        assert 3.5 <= coarse / fine <= 4.5
