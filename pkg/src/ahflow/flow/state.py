"""Grids and states for the radial flow of torus-boundary metrics.

The unknowns are the compactified components ``a = x^2 g_xx`` and ``phi_f = x^2 g_ff`` of
``g = x^-2 (a dx^2 + sum_f phi_f g_f)``, sampled on ``x = x_max z / (2 - z)`` for a uniform
computational coordinate ``z``. Points cluster toward ``x = 0`` by a factor of four.

Two outer ends are supported:

* ``bolt`` -- the geon's ``xi``-circle closes at ``x = x_max``. Nodes are cell-centred, the last
  one at ``z = 1 - h/2``, and a single ghost node at ``z = 1 + h/2`` is filled from the
  reflection ``x -> x_max^2 / x`` which fixes the smooth extension through the bolt.
* ``dirichlet`` -- the last node sits at ``x = x_max`` and is held fixed.
"""
import dataclasses
import functools
import logging
from typing import Optional, Tuple

import numpy as np

from ..errors import ChartError, FlowException
from ..geometry.charts import GridMetric, RadialChart, SeriesMetric, torus_fibres
from ..geometry.models import geon_bolt, geon_compactified
from ..options import get_options

logger = logging.getLogger(__name__)

BOUNDARY_KINDS = ("bolt", "dirichlet")

# how a quantity transforms under the reflection through the bolt
EVEN = "even"
WARP = "warp"
VECTOR = "vector"


@dataclasses.dataclass(frozen=True, eq=False)
class FlowGrid:
    points: int
    x_max: float
    boundary: str = "bolt"

    def __post_init__(self):
        if self.boundary not in BOUNDARY_KINDS:
            raise ChartError(f"unknown outer boundary {self.boundary!r}")
        if self.points < 8:
            raise ChartError(f"a flow grid needs at least 8 points, got {self.points}")
        if self.x_max <= 0:
            raise ChartError(f"outer defining-function value must be positive, got {self.x_max}")

    @functools.cached_property
    def spacing(self):
        if self.boundary == "bolt":
            return 1.0 / (self.points + 0.5)
        return 1.0 / self.points

    @functools.cached_property
    def z(self):
        """Computational coordinate of the nodes ``0..points`` (ghost excluded)."""
        return np.arange(self.points + 1) * self.spacing

    def _x_of(self, z):
        return self.x_max * z / (2.0 - z)

    @functools.cached_property
    def x(self):
        return self._x_of(self.z)

    @functools.cached_property
    def ghost_x(self):
        return self._x_of(1.0 + 0.5 * self.spacing)

    @property
    def has_ghost(self):
        return self.boundary == "bolt"

    @functools.cached_property
    def interior(self):
        """Nodes that evolve: everything but ``x = 0`` and a Dirichlet outer node."""
        stop = self.points + 1 if self.has_ghost else self.points
        return slice(1, stop)

    @functools.cached_property
    def _metric_terms(self):
        z = self.z[self.interior]
        x_z = 2.0 * self.x_max / (2.0 - z) ** 2
        x_zz = 4.0 * self.x_max / (2.0 - z) ** 3
        return x_z, x_zz

    @property
    def boundary_spacing(self):
        return float(self.x[1] - self.x[0])

    def local_spacing(self):
        """``dx`` at the interior nodes."""
        return self._metric_terms[0] * self.spacing

    def extend(self, values, parity=EVEN):
        """Append the ghost value; a no-op for Dirichlet grids."""
        if not self.has_ghost:
            return values
        ratio = self.ghost_x / self.x[-1]
        if parity == EVEN:
            ghost = values[-1]
        elif parity == WARP:
            ghost = ratio**2 * values[-1]
        elif parity == VECTOR:
            ghost = -ratio * values[-1]
        else:
            raise FlowException(f"unknown parity {parity!r}")
        return np.append(values, ghost)

    def derivatives(self, extended):
        """Second-order ``d/dx`` and ``d^2/dx^2`` at the interior nodes of an extended array."""
        h = self.spacing
        x_z, x_zz = self._metric_terms
        f_z = (extended[2:] - extended[:-2]) / (2.0 * h)
        f_zz = (extended[2:] - 2.0 * extended[1:-1] + extended[:-2]) / (h * h)
        f_x = f_z / x_z
        return f_x, (f_zz - x_zz * f_x) / (x_z * x_z)

    def first_derivative(self, extended):
        h = self.spacing
        return (extended[2:] - extended[:-2]) / (2.0 * h) / self._metric_terms[0]

    def refined(self, factor=2):
        """The same domain with ``factor`` times the resolution."""
        return dataclasses.replace(self, points=self.points * factor)


def _validate_component(name, values, grid):
    values = np.asarray(values, dtype=float)
    if values.shape != grid.x.shape:
        raise ChartError(f"component {name} has {values.size} values for {grid.x.size} nodes")
    return values


@dataclasses.dataclass(frozen=True, eq=False)
class FlowState:
    """Compactified metric ``g`` at time ``t`` with its fixed DeTurck reference ``h``.

    ``a`` and ``phis`` hold node values ``0..points``; ``reference`` is ``(a, phis)`` of ``h``.
    """

    chart: RadialChart
    grid: FlowGrid
    a: np.ndarray
    phis: Tuple[np.ndarray, ...]
    reference: Tuple[np.ndarray, Tuple[np.ndarray, ...]]
    t: float = 0.0
    ell: float = 1.0

    def __post_init__(self):
        if self.chart.k != 0:
            raise ChartError("the radial flow is implemented for torus boundaries")
        if self.ell <= 0:
            raise ChartError(f"curvature radius must be positive, got {self.ell}")
        if len(self.phis) != len(self.fibres):
            raise ChartError(f"expected {len(self.fibres)} fibre components, got {len(self.phis)}")
        object.__setattr__(self, "a", _validate_component("a", self.a, self.grid))
        object.__setattr__(
            self, "phis", tuple(_validate_component(f.name, p, self.grid) for f, p in zip(self.fibres, self.phis))
        )

    @property
    def n(self):
        return self.chart.n

    @property
    def fibres(self):
        return torus_fibres(self.chart.n)

    @property
    def x(self):
        return self.grid.x

    @property
    def metric(self):
        """``g`` as a compactified :class:`GridMetric`."""
        return GridMetric(self.chart, self.grid.x, self.a, self.fibres, self.phis, compactified=True)

    @property
    def reference_metric(self):
        a0, phis0 = self.reference
        return GridMetric(self.chart, self.grid.x, a0, self.fibres, phis0, compactified=True)

    def vector(self):
        """The evolved unknowns, interior nodes only, as one flat array."""
        interior = self.grid.interior
        return np.concatenate([self.a[interior]] + [p[interior] for p in self.phis])

    def with_vector(self, vector, t):
        interior = self.grid.interior
        size = interior.stop - interior.start
        parts = [vector[i * size : (i + 1) * size] for i in range(1 + len(self.phis))]
        a = self.a.copy()
        a[interior] = parts[0]
        phis = []
        for phi, part in zip(self.phis, parts[1:]):
            phi = phi.copy()
            phi[interior] = part
            phis.append(phi)
        return dataclasses.replace(self, a=a, phis=tuple(phis), t=t)


def _initial_state(chart, grid, a, phis, ell):
    a = np.asarray(a, dtype=float)
    phis = tuple(np.asarray(p, dtype=float) for p in phis)
    return FlowState(chart, grid, a, phis, (a.copy(), tuple(p.copy() for p in phis)), 0.0, ell)


def geon_state(n, moduli=(), points=None, ell=1.0, options=None):
    """The compactified geon on a bolt grid reaching ``x_b = 4^(1/n)``."""
    options = get_options(options)
    chart = RadialChart(n, 0, tuple(moduli))
    grid = FlowGrid(points or options.grid_points, geon_bolt(n), "bolt")
    a, closing, warp = geon_compactified(n, grid.x)
    logger.debug("geon state: n=%d, %d points, bolt at x=%.6f", n, grid.points, grid.x_max)
    return _initial_state(chart, grid, a, (closing, warp), ell)


def hyperbolic_state(n, moduli=(), points=None, x_max=1.0, ell=1.0, options=None):
    options = get_options(options)
    chart = RadialChart(n, 0, tuple(moduli))
    grid = FlowGrid(points or options.grid_points, x_max, "dirichlet")
    ones = np.ones_like(grid.x)
    return _initial_state(chart, grid, ones, (ones, ones), ell)


def torus_kappa_parts(kappa, n):
    """``(kappa_11, kappa_xi, kappa_theta)`` of ``diag(kappa_11, kappa_xi, kappa_theta, ..., kappa_theta)``."""
    values = np.asarray([[float(v) for v in row] for row in kappa])
    if values.shape != (n, n):
        raise ChartError(f"coefficient tensor must be {n}x{n}")
    diagonal = np.diag(values)
    if np.any(values - np.diag(diagonal) != 0):
        raise ChartError("flow data must have a diagonal coefficient tensor")
    if np.any(diagonal[2:] != diagonal[2]):
        raise ChartError("flow data must be homogeneous along the theta directions")
    return float(diagonal[0]), float(diagonal[1]), float(diagonal[2])


def perturbed_state(n, kappa, moduli=(), points=None, x_max=1.0, ell=1.0, options=None):
    """``dx^2 + g_(0) + x^n kappa / n`` (diagonal ``kappa``) on a Dirichlet grid."""
    options = get_options(options)
    chart = RadialChart(n, 0, tuple(moduli))
    grid = FlowGrid(points or options.grid_points, x_max, "dirichlet")
    k11, kxi, ktheta = torus_kappa_parts(kappa, n)
    xn = grid.x**n / n
    return _initial_state(chart, grid, 1 + k11 * xn, (1 + kxi * xn, 1 + ktheta * xn), ell)


def state_from_series(metric, points=None, x_max=1.0, ell=1.0, options=None):
    """Sample a diagonal torus :class:`SeriesMetric` onto a Dirichlet flow grid."""
    if not isinstance(metric, SeriesMetric):
        raise ChartError(f"expected a SeriesMetric, got {type(metric).__name__}")
    options = get_options(options)
    n = metric.n
    components = metric.compactified_components()
    for i in range(n):
        for j in range(n):
            if i != j and not components[i][j].is_zero:
                raise ChartError("only diagonal series metrics can be sampled onto a flow grid")
    for b in range(3, n):
        if components[b][b] != components[2][2]:
            raise ChartError("flow data must be homogeneous along the theta directions")
    grid = FlowGrid(points or options.grid_points, x_max, "dirichlet")
    sample = [
        np.broadcast_to(np.asarray(components[i][i].evaluate(grid.x), dtype=float), grid.x.shape) for i in range(3)
    ]
    return _initial_state(metric.chart, grid, sample[0], (sample[1], sample[2]), ell)


def fit_window(grid, options=None) -> Optional[np.ndarray]:
    """Indices of the nodes with ``lo h_b <= x <= hi h_b``."""
    options = get_options(options)
    lo, hi = options.fit_window
    h_b = grid.boundary_spacing
    mask = (grid.x >= lo * h_b * (1 - 1e-12)) & (grid.x <= hi * h_b * (1 + 1e-12))
    return np.nonzero(mask)[0]
