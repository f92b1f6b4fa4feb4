"""Consistency of the flow with the evolution law of the scalar curvature.

Along the DeTurck-gauged flow ``E = R + n(n-1)`` satisfies

``dE/dt = ell^-2 (Lap E + 2 |E_ij|^2 - 2(n-1) E + X^x dE/dx)``

with ``Lap E = (x^2/a) (E'' + (Lam - alpha - (n-2)/x) E')`` for a radial function.
"""
import dataclasses
import logging
from typing import Sequence

import numpy as np

from ..errors import InsufficientSamples
from ..options import get_options
from .deturck import compactified_field, radial_fields
from .pde import advance, einstein_fields, step_history
from .state import EVEN

logger = logging.getLogger(__name__)

DEFAULT_WINDOW = (0.2, 0.8)


@dataclasses.dataclass(frozen=True, eq=False)
class ResidualField:
    t: float
    x: np.ndarray
    residual: np.ndarray
    time_derivative: np.ndarray
    spatial: np.ndarray

    @property
    def max_abs(self):
        return float(np.max(np.abs(self.residual))) if self.residual.size else 0.0


def _scalar_nodes(state, fields):
    """``E`` at every node plus the ghost, for differencing."""
    grid = state.grid
    einstein = einstein_fields(fields, state.fibres, state.n)
    values = np.zeros_like(state.x)
    values[grid.interior] = einstein.scalar
    if not grid.has_ghost:
        values[-1] = 2.0 * values[-2] - values[-3]
    return grid.extend(values, EVEN), einstein


def _time_derivative(times, values):
    t0, t1, t2 = times
    e0, e1, e2 = values
    h0, h1 = t1 - t0, t2 - t1
    return (-h1 / (h0 * (h0 + h1))) * e0 + ((h1 - h0) / (h0 * h1)) * e1 + (h0 / (h1 * (h0 + h1))) * e2


def scalar_evolution_residual(states: Sequence, window=DEFAULT_WINDOW):
    """Pointwise residual of the scalar-curvature law at the middle of the last three samples.

    Only nodes with computational coordinate ``z`` inside ``window`` are reported.
    """
    if len(states) < 3:
        raise InsufficientSamples(f"the scalar-curvature residual needs three time samples, got {len(states)}")
    samples = list(states[-3:])
    times = [s.t for s in samples]
    if not times[0] < times[1] < times[2]:
        raise InsufficientSamples("time samples must be strictly increasing")
    grid = samples[1].grid
    if any(s.grid.points != grid.points or s.grid.x_max != grid.x_max for s in samples):
        raise InsufficientSamples("time samples must share a grid")

    interior = grid.interior
    scalars = []
    for state in samples:
        fields = radial_fields(grid, state.a, state.phis, state.fibres)
        scalars.append(einstein_fields(fields, state.fibres, state.n).scalar)
    time_derivative = _time_derivative(times, scalars)

    middle = samples[1]
    n = middle.n
    fields = radial_fields(grid, middle.a, middle.phis, middle.fibres)
    a0, phis0 = middle.reference
    reference = radial_fields(grid, a0, phis0, middle.fibres)
    extended, einstein = _scalar_nodes(middle, fields)
    e_x, e_xx = grid.derivatives(extended)
    x = fields.x
    field = compactified_field(fields, reference, middle.fibres)
    laplacian = (x * x / fields.a) * (e_xx + (fields.trace - fields.alpha - (n - 2) / x) * e_x)
    scalar = einstein.scalar
    spatial = (laplacian + 2.0 * einstein.norm_squared - 2.0 * (n - 1) * scalar + field * e_x) / middle.ell**2

    z = grid.z[interior]
    keep = (z >= window[0]) & (z <= window[1])
    residual = time_derivative - spatial
    logger.debug("scalar residual at t=%.4g over %d nodes", middle.t, keep.sum())
    return ResidualField(middle.t, x[keep], residual[keep], time_derivative[keep], spatial[keep])


def residual_at(state, t_sample, window=DEFAULT_WINDOW, options=None):
    """Flow to ``t_sample`` then difference two further fixed steps."""
    options = get_options(options)
    current = advance(state, t_sample - state.t, options) if t_sample > state.t else state
    history = step_history(current, 2, options=options)
    return scalar_evolution_residual(history, window)
