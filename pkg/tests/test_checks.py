from fractions import Fraction

import pytest

from ahflow.geometry import ResidualReport, expansion_coefficient_check, gauss_codazzi_check, random_kappa
from ahflow.geometry.models import kappa_matrix, zero_kappa

pytestmark = pytest.mark.unit


@pytest.mark.parametrize("seed", [0, 3])
@pytest.mark.parametrize("n, m", [(3, 1), (3, 2), (3, 3), (4, 2), (4, 4)])
def test_expansion_identities_hold_exactly(n, m, seed):
    report = expansion_coefficient_check(n, m, random_kappa(n, seed))
    assert report.passed, report.failures()
    assert report.max_residual == 0
    assert "E[1,1]" in report.residuals


def test_expansion_identities_for_zero_data():
    assert expansion_coefficient_check(3, 3, zero_kappa(3)).passed


@pytest.mark.parametrize("m", [1, 2, 3])
def test_expansion_identities_on_the_sphere(m):
    kappa = kappa_matrix([["1/2", 0, 0], [0, -2, 0], [0, 0, -2]])
    report = expansion_coefficient_check(3, m, kappa, k=1)
    assert report.passed, report.failures()
    assert set(report.residuals) == {"E[1,1]", "E[A,B]"}


@pytest.mark.parametrize("m", [1, 2, 3])
def test_gauss_codazzi_relations(m):
    report = gauss_codazzi_check(3, m, random_kappa(3, 7))
    assert report.passed, report.failures()
    assert ("riccati" in report.skipped) == (m == 1)


def test_residual_report_lists_failures():
    report = ResidualReport("demo", {"n": 3}, {"a": Fraction(0), "b": Fraction(-1, 2)})
    assert not report.passed
    assert report.max_residual == Fraction(1, 2)
    assert report.failures() == ["b"]


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_expansion_identities_over_many_draws(n, seed):
    kappa = random_kappa(n, seed)
    for m in range(1, n + 1):
        report = expansion_coefficient_check(n, m, kappa)
        assert report.passed, (m, report.failures())
        assert report.max_residual == 0
