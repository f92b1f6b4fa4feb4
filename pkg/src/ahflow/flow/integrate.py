"""Explicit time stepping shared by the boundary ODE and the radial PDE."""
import math

from ..errors import FlowException


def rk4_step(rhs, state, dt):
    """One classical fourth-order Runge-Kutta step of ``d state/dt = rhs(state)``."""
    k1 = rhs(state)
    k2 = rhs(state + 0.5 * dt * k1)
    k3 = rhs(state + 0.5 * dt * k2)
    k4 = rhs(state + dt * k3)
    return state + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def step_count(duration, max_dt):
    """Smallest number of equal steps of length at most ``max_dt`` covering ``duration``."""
    if duration < 0:
        raise FlowException(f"flow duration must be non-negative, got {duration}")
    if max_dt <= 0:
        raise FlowException(f"time step must be positive, got {max_dt}")
    if duration == 0:
        return 0
    return max(1, math.ceil(duration / max_dt - 1e-9))
