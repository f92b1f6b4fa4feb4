"""Series curvature for metrics whose components depend on ``x`` only.

Index 0 is ``x``; every other coordinate is a flat boundary direction, so partial
derivatives act on index 0 alone.
"""
import dataclasses
import logging
from typing import Any, Tuple

from ..errors import SeriesException
from ..series import LaurentSeries, series_derivative
from .charts import SeriesMetric, WarpedMetric, matrix_inverse
from .warped import warped_curvature, warped_hessian

logger = logging.getLogger(__name__)

Matrix = Tuple[Tuple[LaurentSeries, ...], ...]


@dataclasses.dataclass(frozen=True)
class SeriesCurvature:
    christoffel: Any  # christoffel[k][i][j] = Gamma^k_ij
    ricci: Matrix
    scalar: LaurentSeries
    einstein: Matrix
    inverse: Matrix


def _zero_like(series):
    return LaurentSeries.zero(series.truncation_order, series.kind)


def series_sum(terms, like):
    """Sum of series ``terms``; the zero of ``like`` when empty."""
    total = None
    for term in terms:
        total = term if total is None else total + term
    return _zero_like(like) if total is None else total


def christoffel_symbols(components, inverse=None):
    """``Gamma^k_ij`` (upper index first) and the inverse metric."""
    n = len(components)
    if inverse is None:
        inverse = matrix_inverse(components)
    dg = [[series_derivative(entry) for entry in row] for row in components]
    zero = _zero_like(dg[0][0])

    def lowered(l, i, j):
        total = zero
        if i == 0:
            total = total + dg[j][l]
        if j == 0:
            total = total + dg[i][l]
        if l == 0:
            total = total - dg[i][j]
        return total / 2

    low = [[[lowered(l, i, j) for j in range(n)] for i in range(n)] for l in range(n)]
    gamma = [[[None] * n for _ in range(n)] for _ in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                value = series_sum((inverse[k][l] * low[l][i][j] for l in range(n)), zero)
                gamma[k][i][j] = gamma[k][j][i] = value
    return gamma, inverse


def ricci_from_christoffel(gamma):
    n = len(gamma)
    like = gamma[0][0][0]
    trace = [series_sum((gamma[k][k][l] for k in range(n)), like) for l in range(n)]
    ricci = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            value = series_derivative(gamma[0][i][j])
            if i == 0 and j == 0:
                value = value - series_derivative(trace[0])
            value = value + series_sum((trace[l] * gamma[l][i][j] for l in range(n)), like)
            value = value - series_sum(
                (gamma[k][j][l] * gamma[l][i][k] for k in range(n) for l in range(n)),
                like,
            )
            ricci[i][j] = ricci[j][i] = value
    return tuple(tuple(row) for row in ricci)


def riemann_component(gamma, rho, sigma, mu, nu):
    """``R^rho_{sigma mu nu}``."""
    n = len(gamma)
    like = gamma[0][0][0]
    value = _zero_like(like)
    if mu == 0:
        value = value + series_derivative(gamma[rho][nu][sigma])
    if nu == 0:
        value = value - series_derivative(gamma[rho][mu][sigma])
    value = value + series_sum((gamma[rho][mu][lam] * gamma[lam][nu][sigma] for lam in range(n)), like)
    value = value - series_sum((gamma[rho][nu][lam] * gamma[lam][mu][sigma] for lam in range(n)), like)
    return value


def trace_with(inverse, matrix):
    n = len(matrix)
    return series_sum((inverse[i][j] * matrix[i][j] for i in range(n) for j in range(n)), matrix[0][0])


def raw_curvature(components, ell=1):
    """Curvature of an explicit component matrix (no chart conversion)."""
    n = len(components)
    gamma, inverse = christoffel_symbols(components)
    ricci = ricci_from_christoffel(gamma)
    scalar = trace_with(inverse, ricci)
    weight = n - 1 if ell == 1 else (n - 1) / ell**2
    einstein = tuple(tuple(ricci[i][j] + components[i][j] * weight for j in range(n)) for i in range(n))
    return SeriesCurvature(christoffel=gamma, ricci=ricci, scalar=scalar, einstein=einstein, inverse=inverse)


def curvature_series(metric, ell=1):
    """Christoffel symbols, Ricci, scalar curvature and ``E = Ric + (n-1) g`` of the physical metric.

    :class:`WarpedMetric` input returns a :class:`~ahflow.geometry.warped.WarpedCurvature`.
    """
    if isinstance(metric, WarpedMetric):
        radial, factors = metric.physical()
        return warped_curvature(radial, factors, metric.fibres, series_derivative, ell=ell)
    if not isinstance(metric, SeriesMetric):
        raise TypeError(f"expected a series metric, got {type(metric).__name__}")
    logger.debug("series curvature: n=%d order=%d", metric.n, metric.order)
    return raw_curvature(metric.physical(), ell=ell)


def _check_defining_function(rho, order):
    if rho.valuation != 1 or rho.coefficient(1) != 1:
        raise SeriesException("defining function must start as x + O(x^2)")
    if rho.truncation_order < order:
        raise SeriesException(
            f"inconsistent truncation orders: defining function known to {rho.truncation_order}, metric to {order}"
        )


def conformal_ricci(compactified, rho):
    """Ricci curvature of ``g = rho^-2 g~`` assembled from the curvature of ``g~``.

    ``R_ij = R~_ij + ((n-2) Hess~(rho)_ij + g~_ij Lap~(rho)) / rho - (n-1) g~_ij |d rho|~^2 / rho^2``
    """
    if isinstance(compactified, WarpedMetric):
        return _conformal_ricci_warped(compactified, rho)
    n = compactified.n
    components = compactified.compactified_components()
    _check_defining_function(rho, compactified.order)
    gamma, inverse = christoffel_symbols(components)
    ricci = ricci_from_christoffel(gamma)
    first = series_derivative(rho)
    second = series_derivative(first)
    hessian = [
        [(second if i == 0 and j == 0 else _zero_like(second)) - gamma[0][i][j] * first for j in range(n)]
        for i in range(n)
    ]
    laplacian = trace_with(inverse, hessian)
    gradient_squared = inverse[0][0] * first * first
    inverse_rho = 1 / rho
    result = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            value = ricci[i][j] + ((n - 2) * hessian[i][j] + components[i][j] * laplacian) * inverse_rho
            value = value - (n - 1) * components[i][j] * gradient_squared * inverse_rho * inverse_rho
            result[i][j] = result[j][i] = value
    return tuple(tuple(row) for row in result)


def _conformal_ricci_warped(compactified, rho):
    radial, factors = compactified.compactified_components()
    _check_defining_function(rho, compactified.order)
    n = compactified.n
    curvature = warped_curvature(radial, factors, compactified.fibres, series_derivative)
    hess_radial, hess_fibres = warped_hessian(radial, factors, curvature, series_derivative, rho)
    first = series_derivative(rho)
    laplacian = hess_radial / radial
    for fibre, factor, value in zip(compactified.fibres, factors, hess_fibres):
        laplacian = laplacian + fibre.dim * (value / factor)
    gradient_squared = first * first / radial
    inverse_rho = 1 / rho

    def assemble(ricci, hess, component):
        value = ricci + ((n - 2) * hess + component * laplacian) * inverse_rho
        return value - (n - 1) * component * gradient_squared * inverse_rho * inverse_rho

    ricci_radial = assemble(curvature.ricci_radial, hess_radial, radial)
    ricci_fibres = tuple(
        assemble(ricci, hess, factor) for ricci, hess, factor in zip(curvature.ricci_fibres, hess_fibres, factors)
    )
    return ricci_radial, ricci_fibres
