from fractions import Fraction

import numpy as np
import pytest
import sympy

from ahflow.errors import ChartError, DegenerateMetric, GeometryException
from ahflow.geometry import (
    GridMetric,
    RadialChart,
    SeriesMetric,
    identity_matrix,
    matrix_inverse,
    sphere_fibres,
    torus_fibres,
)
from ahflow.series import LaurentSeries

pytestmark = pytest.mark.unit


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n": 2},
        {"n": 3, "k": 2},
        {"n": 3, "k": -1},
        {"n": 3, "k": 1, "moduli": (1,)},
        {"n": 4, "moduli": (3, 1)},
        {"n": 4, "moduli": (1,)},
        {"n": 3, "moduli": ("-1",)},
        {"n": 3, "moduli": ("x",)},
        {"n": 3, "coordinate_kind": "z"},
    ],
)
def test_invalid_charts(kwargs):
    with pytest.raises(ChartError):
        RadialChart(**kwargs)


def test_default_moduli_are_two_pi():
    chart = RadialChart(5)
    assert chart.moduli == (2 * sympy.pi,) * 3
    assert chart.periods[0] == sympy.Rational(4, 5) * sympy.pi


def test_float_moduli_are_read_exactly():
    assert RadialChart(3, moduli=(0.5,)).moduli == (sympy.Rational(1, 2),)


@pytest.mark.parametrize(
    "chart, expected",
    [
        (RadialChart(3), 8 * sympy.pi**2 / 3),
        (RadialChart(4, moduli=(1, 2)), 2 * sympy.pi),
        (RadialChart(3, k=1), 4 * sympy.pi),
        (RadialChart(4, k=1), 2 * sympy.pi**2),
    ],
)
def test_boundary_volume(chart, expected):
    assert sympy.simplify(chart.boundary_volume() - expected) == 0


def test_boundary_einstein_constant():
    assert RadialChart(5).boundary_einstein_constant == 0
    assert RadialChart(5, k=1).boundary_einstein_constant == 3


def test_series_metric_lives_on_the_torus():
    with pytest.raises(ChartError):
        SeriesMetric(RadialChart(3, k=1), identity_matrix(3, 4))


def test_compactified_metric_starts_at_the_boundary_metric():
    rows = [list(row) for row in identity_matrix(3, 4)]
    rows[1][1] = LaurentSeries.constant(2, 4)
    with pytest.raises(ChartError):
        SeriesMetric(RadialChart(3), tuple(tuple(row) for row in rows))


def test_series_metric_must_be_symmetric():
    x = LaurentSeries.variable(4)
    rows = [list(row) for row in identity_matrix(3, 4)]
    rows[0][1] = x
    with pytest.raises(GeometryException):
        SeriesMetric(RadialChart(3), tuple(tuple(row) for row in rows))


def test_physical_and_compactified_forms():
    metric = SeriesMetric(RadialChart(3), identity_matrix(3, 4))
    physical = metric.physical()
    assert physical[0][0].valuation == -2
    assert physical[0][0].coefficient(-2) == 1
    assert metric.deviation()[2][2].is_zero


def test_matrix_inverse():
    x = LaurentSeries.variable(5)
    one = LaurentSeries.constant(1, 5)
    zero = LaurentSeries.zero(5)
    inverse = matrix_inverse(((1 + x, x), (x, one)))
    # det = 1 + x - x^2
    product = (1 + x) * inverse[0][0] + x * inverse[1][0]
    assert product.coefficient(0) == 1
    assert all(product.coefficient(p) == 0 for p in range(1, product.truncation_order + 1))
    off = (1 + x) * inverse[0][1] + x * inverse[1][1]
    assert off.is_zero
    with pytest.raises(DegenerateMetric):
        matrix_inverse(((zero, zero), (zero, one)))


def test_fibres():
    assert [f.dim for f in torus_fibres(5)] == [1, 3]
    assert all(f.curvature == 0 for f in torus_fibres(5))
    (sphere,) = sphere_fibres(4)
    assert sphere.dim == 3
    assert sphere.curvature == Fraction(1)


def test_grid_metric_validation():
    chart = RadialChart(3, coordinate_kind="r")
    r = np.linspace(1.0, 2.0, 6)
    fibres = torus_fibres(3)
    metric = GridMetric(chart, r, r**-2, fibres, (r**2, r**2))
    np.testing.assert_allclose(metric.g_theta, r**2)
    with pytest.raises(GeometryException):
        GridMetric(chart, r[::-1], r**-2, fibres, (r**2, r**2))
    with pytest.raises(DegenerateMetric):
        GridMetric(chart, r, -(r**-2), fibres, (r**2, r**2))
    with pytest.raises(GeometryException):
        GridMetric(chart, r, r**-2, fibres, (r**2,))
