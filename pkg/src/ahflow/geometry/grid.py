"""Finite-difference curvature of sampled warped metrics."""
import dataclasses
import functools
import logging
from typing import Tuple

import numpy as np
import scipy.special

from ..errors import DegenerateMetric, GeometryException
from .charts import GridMetric
from .warped import warped_curvature

logger = logging.getLogger(__name__)

MIN_POINTS = 5


@dataclasses.dataclass(frozen=True, eq=False)
class GridCurvature:
    grid: np.ndarray
    ricci_radial: np.ndarray
    ricci_fibres: Tuple[np.ndarray, ...]
    scalar: np.ndarray
    einstein_radial: np.ndarray
    einstein_fibres: Tuple[np.ndarray, ...]
    # sqrt(E_ij E^ij)
    einstein_norm: np.ndarray

    def scalar_deviation(self, n):
        """``R + n(n-1)``."""
        return self.scalar + n * (n - 1)


def stencil_weights(offsets, order):
    """Weights of the finite-difference ``order``-th derivative on nodes at ``offsets`` from the target."""
    offsets = np.asarray(offsets, dtype=float)
    powers = np.arange(offsets.size)
    moments = offsets[np.newaxis, :] ** powers[:, np.newaxis] / scipy.special.factorial(powers)[:, np.newaxis]
    rhs = np.zeros(offsets.size)
    rhs[order] = 1.0
    return np.linalg.solve(moments, rhs)


def grid_derivative(values, grid, order=1):
    """First or second derivative on a nonuniform grid.

    Three-point central stencils in the interior; ``order + 3`` one-sided nodes at each end.
    """
    values = np.asarray(values, dtype=float)
    a = np.diff(grid)[:-1]
    b = np.diff(grid)[1:]
    left, centre, right = values[:-2], values[1:-1], values[2:]
    result = np.empty_like(values)
    if order == 1:
        result[1:-1] = (-b / (a * (a + b))) * left + ((b - a) / (a * b)) * centre + (a / (b * (a + b))) * right
    elif order == 2:
        result[1:-1] = 2.0 * (left / (a * (a + b)) - centre / (a * b) + right / (b * (a + b)))
    else:
        raise GeometryException(f"grid derivatives of order {order} are not supported")
    width = order + 3
    result[0] = stencil_weights(grid[:width] - grid[0], order) @ values[:width]
    result[-1] = stencil_weights(grid[-width:] - grid[-1], order) @ values[-width:]
    return result


def physical_components(metric):
    """Radial and fibre components of the physical metric on ``metric.grid``."""
    if not metric.compactified:
        return metric.radial, metric.factors
    if metric.chart.k == 0:
        weight = metric.grid**-2
    else:
        weight = np.sinh(metric.grid) ** -2
    return metric.radial * weight, tuple(f * weight for f in metric.factors)


def curvature_grid(metric, ell=1):
    """Second-order curvature of ``metric``; third-order one-sided stencils at both ends."""
    if not isinstance(metric, GridMetric):
        raise GeometryException(f"expected a GridMetric, got {type(metric).__name__}")
    if metric.grid.size < MIN_POINTS:
        raise GeometryException(f"grid curvature needs at least {MIN_POINTS} points, got {metric.grid.size}")
    radial, factors = physical_components(metric)
    for name, values in (("radial", radial),) + tuple((f.name, v) for f, v in zip(metric.fibres, factors)):
        interior = values[1:-1]
        if not np.all(np.isfinite(interior)) or np.any(interior <= 0):
            raise DegenerateMetric(f"component {name} must be finite and positive in the interior")
    derivative = functools.partial(grid_derivative, grid=metric.grid)
    second = functools.partial(grid_derivative, grid=metric.grid, order=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        curvature = warped_curvature(radial, factors, metric.fibres, derivative, ell=ell, second_derivative=second)
        norm = np.sqrt(curvature.einstein_norm_squared(radial, factors, metric.fibres))
    logger.debug("grid curvature on %d points", metric.grid.size)
    return GridCurvature(
        grid=metric.grid,
        ricci_radial=curvature.ricci_radial,
        ricci_fibres=curvature.ricci_fibres,
        scalar=curvature.scalar,
        einstein_radial=curvature.einstein_radial,
        einstein_fibres=curvature.einstein_fibres,
        einstein_norm=norm,
    )
