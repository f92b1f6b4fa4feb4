from fractions import Fraction

import numpy as np
import pytest

from ahflow.errors import ChartError
from ahflow.geometry import (
    build_expansion_metric,
    build_geon_series,
    build_perturbed,
    build_rotational_metric,
    geon_bolt,
    geon_compactified,
    hyperbolic_model,
    kappa_matrix,
    random_kappa,
    RadialChart,
    SeriesMetric,
    WarpedMetric,
)
from ahflow.geometry.models import geon_closed_form_radius, geon_radius_series, rotational_parts, zero_kappa

pytestmark = pytest.mark.unit


def test_kappa_matrix_parses_rationals():
    kappa = kappa_matrix([["1/2", 0, 0], [0, "-3", "1/7"], [0, "1/7", 2]])
    assert kappa[0][0] == Fraction(1, 2)
    assert kappa[1][2] == Fraction(1, 7)


@pytest.mark.parametrize(
    "kappa",
    [
        [[0, 1], [2, 0]],
        [[0, 1, 2], [1, 0]],
    ],
)
def test_kappa_matrix_rejects_bad_tensors(kappa):
    with pytest.raises(ChartError):
        kappa_matrix(kappa)


def test_kappa_matrix_checks_size():
    with pytest.raises(ChartError):
        kappa_matrix(zero_kappa(3), 4)


@pytest.mark.parametrize("seed", [0, 1, 17])
def test_random_kappa_is_seeded_and_bounded(seed):
    kappa = random_kappa(4, seed)
    assert kappa == random_kappa(4, seed)
    for i in range(4):
        for j in range(4):
            assert kappa[i][j] == kappa[j][i]
            assert abs(kappa[i][j].numerator) <= 9
            assert 1 <= kappa[i][j].denominator <= 9


def test_random_kappa_depends_on_the_seed():
    assert random_kappa(4, 0) != random_kappa(4, 1)


def test_expansion_metric_coefficients():
    kappa = random_kappa(3, 5)
    metric = build_expansion_metric(3, 2, kappa)
    deviation = metric.deviation()
    for i in range(3):
        for j in range(3):
            assert deviation[i][j].coefficient(2) == kappa[i][j] / 2
            assert deviation[i][j].coefficient(1) == 0
            assert deviation[i][j].coefficient(3) == 0


@pytest.mark.parametrize("m", [0, 4])
def test_expansion_order_range(m):
    with pytest.raises(ChartError):
        build_expansion_metric(3, m, zero_kappa(3))


def test_rotational_parts():
    kappa = kappa_matrix([[2, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert rotational_parts(kappa) == (2, 1)
    with pytest.raises(ChartError):
        rotational_parts(kappa_matrix([[2, 0, 0], [0, 1, 0], [0, 0, 3]]))


def test_perturbed_metrics_by_boundary_curvature():
    kappa = kappa_matrix([[1, 0, 0], [0, 2, 0], [0, 0, 2]])
    assert isinstance(build_perturbed(3, 0, kappa), SeriesMetric)
    warped = build_perturbed(3, 1, kappa)
    assert isinstance(warped, WarpedMetric)
    assert warped.radial.coefficient(3) == Fraction(1, 3)
    with pytest.raises(ChartError):
        build_perturbed(3, 0, kappa, order=2)


def test_rotational_metric_is_on_the_sphere():
    metric = build_rotational_metric(4, 2, 1, -1)
    assert metric.chart.k == 1
    assert metric.factors[0].coefficient(2) == Fraction(-1, 2)


def test_hyperbolic_models():
    flat = hyperbolic_model(RadialChart(3))
    assert all(entry.is_zero for row in flat.deviation() for entry in row)
    round_ = hyperbolic_model(RadialChart(3, k=1))
    assert (round_.radial - 1).is_zero


@pytest.mark.parametrize("n", [3, 4, 5])
def test_geon_radius_matches_closed_form(n):
    order = 2 * n + 2
    series = geon_radius_series(n, order)
    closed = geon_closed_form_radius(n, order)
    upto = min(series.truncation_order, closed.truncation_order)
    for p in range(-1, upto + 1):
        assert series.coefficient(p) == closed.coefficient(p)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_geon_series_boundary_tensor(n):
    deviation = build_geon_series(n).deviation()
    assert deviation[0][0].is_zero
    assert deviation[1][1].valuation == n
    assert n * deviation[1][1].coefficient(n) == 1 - n
    for a in range(2, n):
        assert n * deviation[a][a].coefficient(n) == 1


@pytest.mark.parametrize("n", [3, 4, 5])
def test_geon_closes_at_the_bolt(n):
    x_b = geon_bolt(n)
    a, closing, warp = geon_compactified(n, np.array([0.0, x_b]))
    np.testing.assert_allclose(a, 1.0)
    np.testing.assert_allclose(closing, [1.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(warp, [1.0, 2.0 ** (4.0 / n)])
