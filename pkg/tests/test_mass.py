from fractions import Fraction

import numpy as np
import pytest
import sympy

from ahflow.errors import ChartError, ExtrapolationError, MassOrderError
from ahflow.geometry import RadialChart, build_geon, build_perturbed, kappa_matrix
from ahflow.mass import (
    BoundaryData,
    MassReport,
    boundary_data_from_series,
    boundary_data_from_warped,
    ch_mass,
    geon_boundary_data,
    geon_profile,
    mass_aspect,
    normalize_gauge,
    richardson_extrapolate,
    wang_mass,
)
from ahflow.options import get_options

pytestmark = pytest.mark.unit


def geon_mass(n, moduli):
    return -4 * sympy.pi / n * sympy.prod(moduli)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_geon_boundary_tensor(n):
    bd = geon_boundary_data(n)
    expected = [[0] * n for _ in range(n)]
    expected[1][1] = 1 - n
    for a in range(2, n):
        expected[a][a] = 1
    assert [list(row) for row in bd.kappa] == expected
    assert mass_aspect(bd) == -1


@pytest.mark.parametrize("n", [3, 4, 5])
def test_geon_mass_closed_form(n):
    mass = wang_mass(geon_boundary_data(n))
    assert sympy.simplify(mass - geon_mass(n, [2 * sympy.pi] * (n - 2))) == 0


def test_geon_mass_with_custom_moduli():
    mass = wang_mass(geon_boundary_data(4, moduli=(1, 3)))
    assert sympy.simplify(mass - geon_mass(4, [1, 3])) == 0


def test_mass_is_the_integrated_aspect():
    chart = RadialChart(3)
    bd = BoundaryData(chart, kappa_matrix([[3, 0, 0], [0, 1, 0], [0, 0, "1/2"]]), 3)
    assert mass_aspect(bd) == Fraction(7, 2)
    assert sympy.simplify(wang_mass(bd) - sympy.Rational(7, 2) * chart.boundary_volume()) == 0


def test_mass_needs_order_n():
    bd = BoundaryData(RadialChart(3), kappa_matrix([[0] * 3] * 3), 2)
    with pytest.raises(MassOrderError):
        wang_mass(bd)
    with pytest.raises(MassOrderError):
        mass_aspect(bd)


def test_trace_form_refuses_normal_components():
    bd = BoundaryData(RadialChart(3), kappa_matrix([[1, 0, 0], [0, 0, 0], [0, 0, 0]]), 3)
    with pytest.raises(MassOrderError):
        wang_mass(bd, generalized=False)
    gauged = BoundaryData(RadialChart(3), kappa_matrix([[0, 0, 0], [0, 2, 0], [0, 0, 1]]), 3)
    assert wang_mass(gauged, generalized=False) == wang_mass(gauged)


def test_gridded_boundary_data_integrates_by_the_mean():
    chart = RadialChart(3)
    theta = np.linspace(0.0, 1.0, 16, endpoint=False)
    wave = np.cos(2 * np.pi * theta)
    zero = np.zeros_like(theta)
    bd = BoundaryData(chart, ((zero, zero, zero), (zero, 1 + wave, zero), (zero, zero, zero)), 3)
    assert bd.is_gridded
    assert wang_mass(bd) == pytest.approx(float(chart.boundary_volume()))


def test_boundary_data_must_be_symmetric():
    with pytest.raises(ChartError):
        BoundaryData(RadialChart(3), ((0.0, 1.0, 0.0), (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)), 3)


@pytest.mark.parametrize("k", [0, 1])
def test_gauge_normalization_moves_kappa_into_the_boundary(k):
    n = 3
    if k == 0:
        kappa = kappa_matrix([[3, 1, 0], [1, 2, "1/2"], [0, "1/2", -1]])
    else:
        kappa = kappa_matrix([[3, 0, 0], [0, 2, 0], [0, 0, 2]])
    bd = BoundaryData(RadialChart(n, k=k), kappa, n)
    normal = normalize_gauge(bd)
    assert normal.kappa11 == 0
    assert all(value == 0 for value in normal.kappa1a)
    for a in range(1, n):
        for b in range(1, n):
            expected = kappa[a][b] + (Fraction(kappa[0][0], n) if a == b else 0)
            assert normal.kappa[a][b] == expected
    assert mass_aspect(normal) == mass_aspect(bd)


def test_series_boundary_data_round_trips_kappa():
    kappa = kappa_matrix([[1, 0, 0], [0, 2, 0], [0, 0, -1]])
    bd = boundary_data_from_series(build_perturbed(3, 0, kappa))
    assert bd.kappa == kappa
    warped = boundary_data_from_warped(build_perturbed(3, 1, kappa_matrix([[1, 0, 0], [0, 2, 0], [0, 0, 2]])))
    assert warped.chart.k == 1
    assert warped.kappa11 == 1
    assert warped.kappa_ab == ((2, 0), (0, 2))


@pytest.mark.parametrize("n", [3, 4])
def test_geon_flux_mass_matches_the_boundary_mass(n):
    bd = geon_boundary_data(n)
    report = ch_mass(geon_profile(n)).with_wang(bd)
    expected = float(report.wang_mass)
    assert abs(report.ch_extrapolated - expected) <= max(report.ch_error, 1e-6 * abs(expected))
    assert report.metadata["path"] == "profile"


@pytest.mark.parametrize("n", [3, 4, 5])
def test_sampled_geon_flux_mass_matches_the_boundary_mass(n):
    report = ch_mass(build_geon(n)).with_wang(geon_boundary_data(n))
    expected = float(report.wang_mass)
    assert abs(report.ch_extrapolated - expected) <= 1e-6 * abs(expected)
    assert report.metadata["path"] == "grid"
    assert [r for r, _ in report.ch_samples] == pytest.approx(get_options().grid_flux_radii(n))


def test_sampled_geon_with_moduli():
    moduli = (1, 3)
    report = ch_mass(build_geon(4, moduli)).with_wang(geon_boundary_data(4, moduli=moduli))
    expected = float(report.wang_mass)
    assert abs(report.ch_extrapolated - expected) <= 1e-6 * abs(expected)


@pytest.mark.parametrize(
    "radii, points",
    [
        # fit window of the outer radius leaves the grid
        ((100.0, 200.0, 400.0, 800.0), 20001),
        ((100.0, 200.0), 40),
    ],
)
def test_sampled_flux_needs_a_covering_grid(radii, points):
    with pytest.raises(ExtrapolationError):
        ch_mass(build_geon(3, r_max=300.0, points=points), radii=radii)


def test_series_flux_mass_matches_the_boundary_mass():
    metric = build_perturbed(3, 0, kappa_matrix([[1, 0, 0], [0, 2, 0], [0, 0, -1]]))
    report = ch_mass(metric).with_wang(boundary_data_from_series(metric))
    expected = float(report.wang_mass)
    assert abs(report.ch_extrapolated - expected) <= max(report.ch_error, 1e-6 * abs(expected))


def test_flux_mass_reference_must_match():
    with pytest.raises(ChartError):
        ch_mass(geon_profile(3), reference=RadialChart(3, k=1))


def test_flux_radii_must_increase():
    with pytest.raises(ExtrapolationError):
        ch_mass(geon_profile(3), radii=(200.0, 100.0))


def test_richardson_removes_the_inverse_radius_term():
    samples = [(r, 2.5 + 3.0 / r) for r in (100.0, 200.0, 400.0)]
    value, error, estimates = richardson_extrapolate(samples, floor=0.0)
    assert value == pytest.approx(2.5, rel=1e-12)
    assert error == pytest.approx(0.0, abs=1e-12)
    assert len(estimates) == 2


@pytest.mark.parametrize("samples", [[(100.0, 1.0)], [(200.0, 1.0), (100.0, 1.0)]])
def test_richardson_rejects_bad_samples(samples):
    with pytest.raises(ExtrapolationError):
        richardson_extrapolate(samples)


def test_report_summary():
    report = MassReport(wang_mass=sympy.Rational(-8, 3) * sympy.pi**2, ch_samples=((100.0, -26.0),))
    summary = report.to_summary()
    assert summary["wang_mass_exact"] == "-8*pi**2/3"
    assert summary["ch_samples"] == [[100.0, -26.0]]
    assert summary["ch_extrapolated"] is None
    assert not report.consistent()
