"""Charts and metric containers.

Three metric shapes are used:

* :class:`SeriesMetric` -- a full symmetric matrix of Laurent series on the flat
  torus boundary (k=0), coefficients independent of the boundary coordinates.
* :class:`WarpedMetric` -- ``A dx^2 + sum_f F_f g_f`` with Einstein fibres; the
  components are series or numpy arrays.
* :class:`GridMetric` -- a warped metric sampled on a radial grid.
"""
import dataclasses
from fractions import Fraction
from typing import Any, Tuple

import numpy as np
import sympy

from ..errors import ChartError, DegenerateMetric, GeometryException
from ..series import EXACT, LaurentSeries, csch2_series, sinh_series

COORDINATE_KINDS = ("x", "r")


def _symbolic_period(value):
    try:
        period = sympy.nsimplify(value) if isinstance(value, float) else sympy.sympify(value)
    except (sympy.SympifyError, TypeError) as e:
        raise ChartError(f"cannot read torus period {value!r}") from e
    if not period.is_real or not period.is_positive:
        raise ChartError(f"torus periods must be strictly positive, got {value!r}")
    return period


@dataclasses.dataclass(frozen=True)
class RadialChart:
    n: int
    k: int = 0
    moduli: Tuple[Any, ...] = ()
    coordinate_kind: str = "x"

    def __post_init__(self):
        if self.n < 3:
            raise ChartError(f"manifold dimension must be at least 3, got {self.n}")
        if self.k not in (0, 1):
            raise ChartError(f"boundary curvature must be 0 or 1, got {self.k}")
        if self.coordinate_kind not in COORDINATE_KINDS:
            raise ChartError(f"unknown coordinate kind {self.coordinate_kind!r}")
        if self.k == 1:
            if self.moduli:
                raise ChartError("the round sphere boundary takes no torus moduli")
            return
        moduli = self.moduli or (2 * sympy.pi,) * (self.n - 2)
        if len(moduli) != self.n - 2:
            raise ChartError(f"a {self.n}-dimensional torus chart needs {self.n - 2} moduli, got {len(moduli)}")
        periods = tuple(_symbolic_period(a) for a in moduli)
        if any(float(a) > float(b) for a, b in zip(periods, periods[1:])):
            raise ChartError("torus moduli must be sorted a_3 <= ... <= a_n")
        object.__setattr__(self, "moduli", periods)

    @property
    def boundary_dim(self):
        return self.n - 1

    @property
    def xi_period(self):
        return 4 * sympy.pi / self.n

    @property
    def periods(self):
        return (self.xi_period,) + tuple(self.moduli)

    @property
    def boundary_einstein_constant(self):
        """``Ric[g_(k)] = (n-2) k g_(k)``."""
        return (self.n - 2) * self.k

    def boundary_volume(self):
        if self.k == 0:
            return sympy.Mul(*self.periods)
        half = sympy.Rational(self.n, 2)
        return 2 * sympy.pi**half / sympy.gamma(half)

    def defining_function(self, order, kind=EXACT):
        """``rho_(k)``: ``x`` for the torus, ``sinh x`` for the sphere."""
        if self.k == 0:
            return LaurentSeries.variable(order, kind)
        return sinh_series(order, kind)

    def inverse_defining_square(self, order, kind=EXACT):
        """``rho_(k)**-2`` known through ``x**order``."""
        if self.k == 0:
            return LaurentSeries.monomial(-2, 1, order, kind)
        return csch2_series(order, kind)

    def with_coordinates(self, coordinate_kind):
        return dataclasses.replace(self, coordinate_kind=coordinate_kind)


def identity_matrix(n, order, kind=EXACT):
    one = LaurentSeries.constant(1, order, kind)
    zero = LaurentSeries.zero(order, kind)
    return tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n))


def scale_matrix(matrix, factor):
    return tuple(tuple(entry * factor for entry in row) for row in matrix)


def matrix_inverse(matrix):
    """Gauss-Jordan inverse of a square matrix of Laurent series."""
    n = len(matrix)
    kind = matrix[0][0].kind
    order = min(entry.truncation_order for row in matrix for entry in row)
    work = [list(row) + list(ident) for row, ident in zip(matrix, identity_matrix(n, order, kind))]
    for col in range(n):
        candidates = [row for row in range(col, n) if not work[row][col].is_zero]
        if not candidates:
            raise DegenerateMetric(f"metric is degenerate as a series: no pivot in column {col}")
        pivot = min(candidates, key=lambda row: work[row][col].valuation)
        work[col], work[pivot] = work[pivot], work[col]
        inverse_pivot = 1 / work[col][col]
        work[col] = [entry * inverse_pivot for entry in work[col]]
        for row in range(n):
            if row == col or work[row][col].is_zero:
                continue
            factor = work[row][col]
            work[row] = [entry - factor * pivot_entry for entry, pivot_entry in zip(work[row], work[col])]
    return tuple(tuple(row[n:]) for row in work)


def _check_symmetric(components):
    n = len(components)
    for row in components:
        if len(row) != n:
            raise GeometryException("metric components must form a square matrix")
    for i in range(n):
        for j in range(i + 1, n):
            if components[i][j] != components[j][i]:
                raise GeometryException(f"metric components are not symmetric at ({i}, {j})")


@dataclasses.dataclass(frozen=True)
class SeriesMetric:
    """Homogeneous metric near the torus boundary, index 0 is the defining function ``x``.

    ``compactified`` components are those of ``g~ = rho^2 g``.
    """

    chart: RadialChart
    components: Tuple[Tuple[LaurentSeries, ...], ...]
    compactified: bool = True

    def __post_init__(self):
        if self.chart.k != 0:
            raise ChartError("matrix series metrics live on the flat torus; use WarpedMetric for k=1")
        if len(self.components) != self.chart.n:
            raise GeometryException(f"expected {self.chart.n} rows of components, got {len(self.components)}")
        _check_symmetric(self.components)
        if self.compactified:
            for i, row in enumerate(self.components):
                for j, entry in enumerate(row):
                    if entry.valuation < 0 or entry.coefficient(0) != (1 if i == j else 0):
                        raise ChartError(f"compactified component ({i}, {j}) does not start at the boundary metric")

    @property
    def n(self):
        return self.chart.n

    @property
    def kind(self):
        return self.components[0][0].kind

    @property
    def order(self):
        return min(entry.truncation_order for row in self.components for entry in row)

    def physical(self):
        if not self.compactified:
            return self.components
        return scale_matrix(self.components, self.chart.inverse_defining_square(self.order + 2, self.kind))

    def compactified_components(self):
        if self.compactified:
            return self.components
        rho = self.chart.defining_function(self.order + 4, self.kind)
        return scale_matrix(self.components, rho * rho)

    def deviation(self):
        """``g~ - delta`` as a matrix of series."""
        comps = self.compactified_components()
        return tuple(
            tuple(entry - (1 if i == j else 0) for j, entry in enumerate(row)) for i, row in enumerate(comps)
        )


@dataclasses.dataclass(frozen=True)
class Fibre:
    name: str
    dim: int
    curvature: Fraction = Fraction(0)


def torus_fibres(n):
    """The geon split of the torus: the closing circle and the remaining flat directions."""
    return (Fibre("xi", 1, Fraction(0)), Fibre("theta", n - 2, Fraction(0)))


def sphere_fibres(n):
    return (Fibre("sphere", n - 1, Fraction(1)),)


def _check_fibres(chart, fibres, factors):
    if len(fibres) != len(factors):
        raise GeometryException("each fibre needs exactly one warping factor")
    if sum(f.dim for f in fibres) != chart.n - 1:
        raise GeometryException(f"fibre dimensions must add up to {chart.n - 1}")


@dataclasses.dataclass(frozen=True)
class WarpedMetric:
    """``A dx^2 + sum_f F_f g_f``; ``radial`` is ``A`` and ``factors`` the ``F_f``."""

    chart: RadialChart
    radial: Any
    fibres: Tuple[Fibre, ...]
    factors: Tuple[Any, ...]
    compactified: bool = True

    def __post_init__(self):
        _check_fibres(self.chart, self.fibres, self.factors)

    @property
    def n(self):
        return self.chart.n

    @property
    def order(self):
        return min(c.truncation_order for c in (self.radial,) + tuple(self.factors))

    @property
    def kind(self):
        return self.radial.kind

    def physical(self):
        if not self.compactified:
            return self.radial, self.factors
        weight = self.chart.inverse_defining_square(self.order + 2, self.kind)
        return self.radial * weight, tuple(f * weight for f in self.factors)

    def compactified_components(self):
        if self.compactified:
            return self.radial, self.factors
        rho = self.chart.defining_function(self.order + 4, self.kind)
        weight = rho * rho
        return self.radial * weight, tuple(f * weight for f in self.factors)

    def factor(self, name):
        for fibre, factor in zip(self.fibres, self.factors):
            if fibre.name == name:
                return factor
        raise KeyError(name)


@dataclasses.dataclass(frozen=True, eq=False)
class GridMetric:
    """Warped metric sampled on ``grid``; radial coordinate per ``chart.coordinate_kind``."""

    chart: RadialChart
    grid: np.ndarray
    radial: np.ndarray
    fibres: Tuple[Fibre, ...]
    factors: Tuple[np.ndarray, ...]
    compactified: bool = False

    def __post_init__(self):
        _check_fibres(self.chart, self.fibres, self.factors)
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
            raise GeometryException("grid points must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "radial", np.asarray(self.radial, dtype=float))
        object.__setattr__(self, "factors", tuple(np.asarray(f, dtype=float) for f in self.factors))
        for name, values in self.components():
            if values.shape != grid.shape:
                raise GeometryException(f"component {name} does not match the grid")
            interior = values[1:-1]
            if np.any(~(interior > 0)):
                raise DegenerateMetric(f"component {name} is not positive in the interior")

    def components(self):
        yield "radial", self.radial
        for fibre, factor in zip(self.fibres, self.factors):
            yield fibre.name, factor

    def factor(self, name):
        for fibre, factor in zip(self.fibres, self.factors):
            if fibre.name == name:
                return factor
        raise KeyError(name)

    @property
    def g_xx(self):
        return self.radial

    @property
    def g_xi(self):
        return self.factor("xi")

    @property
    def g_theta(self):
        return self.factor("theta")
