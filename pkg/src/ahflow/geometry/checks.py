"""Exact coefficient identities for expansion-class metrics."""
import dataclasses
import logging
from fractions import Fraction
from typing import Any, Dict, Tuple

from ..series import series_derivative
from .charts import matrix_inverse
from .curvature import curvature_series, raw_curvature, riemann_component, series_sum
from .models import build_expansion_metric, build_rotational_metric, kappa_matrix, rotational_parts

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ResidualReport:
    """Named exact residuals; an identity holds when its residual is zero."""

    name: str
    parameters: Dict[str, Any]
    residuals: Dict[str, Fraction]
    skipped: Tuple[str, ...] = ()

    @property
    def passed(self):
        return all(value == 0 for value in self.residuals.values())

    @property
    def max_residual(self):
        return max((abs(value) for value in self.residuals.values()), default=Fraction(0))

    def failures(self):
        return sorted(name for name, value in self.residuals.items() if value != 0)


def max_abs_coefficient(series, upto=None):
    """Largest ``|coefficient|`` of ``series`` at exponents ``<= upto`` (all known ones by default)."""
    limit = series.truncation_order if upto is None else min(upto, series.truncation_order)
    values = [abs(c) for p, c in series.terms() if p <= limit]
    return max(values, default=Fraction(0))


def expected_einstein_coefficients(n, m, kappa11, trace, kappa_ab):
    """Closed forms of the ``x^(m-2)`` coefficients of ``E_11`` and ``E_AB`` (``E_1A`` vanishes).

    ``kappa_ab`` is the tangential tensor; the ``delta_AB`` term is added on the diagonal.
    """
    m = Fraction(m)
    e11 = -Fraction(1, 2) * (m - 2) * (Fraction(n - 1) / m * kappa11 + trace)
    diagonal = Fraction(1, 2) * ((Fraction(2 * n - 2) / m - 1) * kappa11 + trace)
    eab = [
        [(diagonal if a == b else 0) + Fraction(1, 2) * (n - m - 1) * kappa_ab[a][b] for b in range(len(kappa_ab))]
        for a in range(len(kappa_ab))
    ]
    return e11, eab


def expansion_coefficient_check(n, m, kappa, k=0, order=None):
    """Compare the ``x^(m-2)`` coefficients of ``E_ij`` against their closed forms.

    For ``k = 1`` ``kappa`` must be ``diag(psi, phi, ..., phi)``.
    """
    kappa = kappa_matrix(kappa, n)
    power = m - 2
    residuals = {}
    if k == 0:
        metric = build_expansion_metric(n, m, kappa, order)
        einstein = curvature_series(metric).einstein
        tangential = [row[1:] for row in kappa[1:]]
        trace = sum(kappa[a][a] for a in range(1, n))
        e11, eab = expected_einstein_coefficients(n, m, kappa[0][0], trace, tangential)
        residuals["E[1,1]"] = einstein[0][0].coefficient(power) - e11
        for a in range(1, n):
            residuals[f"E[1,{a + 1}]"] = einstein[0][a].coefficient(power)
            for b in range(a, n):
                residuals[f"E[{a + 1},{b + 1}]"] = einstein[a][b].coefficient(power) - eab[a - 1][b - 1]
    else:
        psi, phi = rotational_parts(kappa)
        metric = build_rotational_metric(n, m, psi, phi, order)
        curvature = curvature_series(metric)
        e11, eab = expected_einstein_coefficients(n, m, psi, (n - 1) * phi, [[phi]])
        residuals["E[1,1]"] = curvature.einstein_radial.coefficient(power) - e11
        residuals["E[A,B]"] = curvature.einstein_fibres[0].coefficient(power) - eab[0][0]
    logger.debug("expansion check n=%d m=%d k=%d: %d residuals", n, m, k, len(residuals))
    return ResidualReport("expansion", {"n": n, "m": m, "k": k}, residuals)


@dataclasses.dataclass(frozen=True)
class _Hypersurface:
    """Shape data of the level sets of ``x`` for a compactified metric."""

    shape: Any  # K_AB = 1/2 d/dx g^_AB
    mixed: Any  # K^C_B
    trace: Any
    norm_squared: Any
    quadratic: Any  # K_AC K^C_B
    inverse: Any


def _hypersurface(components):
    n = len(components)
    size = n - 1
    block = tuple(tuple(components[a][b] for b in range(1, n)) for a in range(1, n))
    like = block[0][0]
    shape = [[series_derivative(block[a][b]) / 2 for b in range(size)] for a in range(size)]
    inverse = matrix_inverse(block)
    mixed = [
        [series_sum((inverse[c][d] * shape[d][b] for d in range(size)), like) for b in range(size)] for c in range(size)
    ]
    trace = series_sum((mixed[c][c] for c in range(size)), like)
    norm_squared = series_sum((mixed[c][b] * mixed[b][c] for c in range(size) for b in range(size)), like)
    quadratic = [
        [series_sum((shape[a][c] * mixed[c][b] for c in range(size)), like) for b in range(size)] for a in range(size)
    ]
    return _Hypersurface(shape, mixed, trace, norm_squared, quadratic, inverse)


def _riccati(components, curvature, surface):
    """``dK_AB - K_AC K^C_B + R~^1_{A1B}``."""
    size = len(components) - 1
    return [
        [
            series_derivative(surface.shape[a][b])
            - surface.quadratic[a][b]
            + riemann_component(curvature.christoffel, 0, a + 1, 0, b + 1)
            for b in range(size)
        ]
        for a in range(size)
    ]


def gauss_codazzi_check(n, m, kappa, order=None):
    """Cross-check the series engine against the Gauss, Codazzi and Riccati relations.

    The relations hold exactly once ``kappa_11 = kappa_1A = 0`` (Gaussian normal form). For
    general ``kappa`` only the leading ``x^(m-2)`` Ricci coefficients are fixed, and the
    Riccati relation holds below ``x^(2m-2)``; for ``m = 1`` that window is empty.
    """
    kappa = kappa_matrix(kappa, n)
    power = m - 2
    residuals = {}
    skipped = []

    metric = build_expansion_metric(n, m, kappa, order)
    components = metric.components
    curvature = raw_curvature(components)
    ricci = curvature.ricci
    trace = sum(kappa[a][a] for a in range(1, n))
    residuals["ricci[1,1] leading"] = ricci[0][0].coefficient(power) + Fraction(m - 1, 2) * trace
    for a in range(1, n):
        residuals[f"ricci[1,{a + 1}] leading"] = ricci[0][a].coefficient(power)
        for b in range(a, n):
            expected = -Fraction(m - 1, 2) * kappa[a][b]
            residuals[f"ricci[{a + 1},{b + 1}] leading"] = ricci[a][b].coefficient(power) - expected
    if m >= 2:
        surface = _hypersurface(components)
        for a, row in enumerate(_riccati(components, curvature, surface)):
            for b, value in enumerate(row):
                residuals[f"riccati[{a + 2},{b + 2}]"] = max_abs_coefficient(value, upto=2 * m - 3)
    else:
        skipped.append("riccati")

    normal = tuple(tuple(Fraction(0) if 0 in (i, j) else kappa[i][j] for j in range(n)) for i in range(n))
    components = build_expansion_metric(n, m, normal, order).components
    curvature = raw_curvature(components)
    ricci = curvature.ricci
    surface = _hypersurface(components)
    riccati = _riccati(components, curvature, surface)
    size = n - 1
    # Gauss: R~_11 = (R~ - R^ + K^2 - |K|^2) / 2 with a flat boundary
    gauss = ricci[0][0] - (curvature.scalar + surface.trace * surface.trace - surface.norm_squared) / 2
    residuals["gauss[1,1]"] = max_abs_coefficient(gauss)
    # R~_11 = -g^^AB (dK_AB - K_AC K^C_B)
    traced = ricci[0][0] + series_sum(
        (
            surface.inverse[a][b] * (riccati[a][b] - riemann_component(curvature.christoffel, 0, a + 1, 0, b + 1))
            for a in range(size)
            for b in range(size)
        ),
        ricci[0][0],
    )
    residuals["riccati trace[1,1]"] = max_abs_coefficient(traced)
    for a in range(size):
        residuals[f"codazzi[1,{a + 2}]"] = max_abs_coefficient(ricci[0][a + 1])
        for b in range(a, size):
            tangential = (
                riemann_component(curvature.christoffel, 0, a + 1, 0, b + 1)
                + surface.quadratic[a][b]
                - surface.shape[a][b] * surface.trace
            )
            residuals[f"gauss[{a + 2},{b + 2}]"] = max_abs_coefficient(ricci[a + 1][b + 1] - tangential)
            residuals[f"riccati exact[{a + 2},{b + 2}]"] = max_abs_coefficient(riccati[a][b])
    return ResidualReport("gauss-codazzi", {"n": n, "m": m}, residuals, tuple(skipped))
