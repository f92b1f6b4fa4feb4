"""The DeTurck field ``X^k = g^ij (Gamma^k_ij - Gamma0^k_ij)`` against a fixed reference ``h``.

Series metrics give exact coefficients for the gauge identities; flow states give the field
on the grid in the regular compactified form

``X^x = (x^2/a)(alpha - alpha0) - x^2 sum_f d_f [lam_f/a - (phi0_f/phi_f) lam0_f/a0]
+ x sum_f d_f [1/a - (phi0_f/phi_f)/a0]``

where ``alpha = a'/2a`` and ``lam_f = phi_f'/2phi_f``.
"""
import dataclasses
import logging
from fractions import Fraction
from typing import Tuple

import numpy as np

from ..errors import FlowException
from ..geometry.checks import ResidualReport, max_abs_coefficient
from ..geometry.curvature import christoffel_symbols, raw_curvature, series_sum
from ..geometry.models import build_expansion_metric, kappa_matrix, zero_kappa
from ..options import get_options
from ..series import LaurentSeries, series_derivative
from .kappa import sigma_vector, system_matrix
from .state import VECTOR, WARP, fit_window

logger = logging.getLogger(__name__)


# -- series path


def deturck_vector(components, reference):
    """``X^k`` of two physical series metrics."""
    n = len(components)
    gamma, inverse = christoffel_symbols(components)
    gamma0, _ = christoffel_symbols(reference)
    like = components[0][0]
    return tuple(
        series_sum(
            (inverse[i][j] * (gamma[k][i][j] - gamma0[k][i][j]) for i in range(n) for j in range(n)),
            like,
        )
        for k in range(n)
    )


def lower_index(components, vector):
    n = len(components)
    return tuple(series_sum((components[k][l] * vector[l] for l in range(n)), vector[0]) for k in range(n))


def lie_derivative(components, vector):
    """``(L_X g)_ij`` for a field depending on ``x`` only."""
    n = len(components)
    slopes = [series_derivative(v) for v in vector]
    zero = LaurentSeries.zero(components[0][0].truncation_order, components[0][0].kind)

    def entry(i, j):
        value = vector[0] * series_derivative(components[i][j])
        if i == 0:
            value = value + series_sum((components[k][j] * slopes[k] for k in range(n)), zero)
        if j == 0:
            value = value + series_sum((components[i][k] * slopes[k] for k in range(n)), zero)
        return value

    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            rows[i][j] = rows[j][i] = entry(i, j)
    return tuple(tuple(row) for row in rows)


def _perturbation_metrics(n, m, w, kappa, order):
    """Physical ``h`` (order-``n`` data ``kappa``) and ``g = h + x^(m-2) w / m``."""
    reference = build_expansion_metric(n, n, kappa, order).physical()
    like = reference[0][0]
    bump = [
        [LaurentSeries.from_mapping({m - 2: w[i][j] / m}, like.truncation_order, like.kind) for j in range(n)]
        for i in range(n)
    ]
    metric = tuple(tuple(reference[i][j] + bump[i][j] for j in range(n)) for i in range(n))
    return metric, reference


def lie_coefficient_matrix(n, m):
    """The linear map ``w -> (L_X g)`` at ``x^(m-2)``, flattened row-major like :func:`system_matrix`."""
    size = n * n
    matrix = [[Fraction(0)] * size for _ in range(size)]
    matrix[0][0] = Fraction(-2 * (n - 2) + (m - 2))
    for c in range(1, n):
        matrix[0][c * n + c] = Fraction(-(m - 2))
    for a in range(1, n):
        mixed = Fraction((m + 1) * (m - n), m)
        matrix[a][a] = mixed
        matrix[a * n][a * n] = mixed
        row = a * n + a
        matrix[row][0] = Fraction(2 * (n - 2) - (m - 2), m)
        for c in range(1, n):
            matrix[row][c * n + c] = Fraction(m - 2, m)
    return tuple(tuple(row) for row in matrix)


def deturck_system_matrix(n, m, ell=1):
    """``A + m L``: the coefficient flow of ``w`` under the DeTurck-modified equation."""
    base = system_matrix(n, m, ell)
    lie = lie_coefficient_matrix(n, m)
    scale = 1 / Fraction(ell) ** 2
    return tuple(tuple(a + m * l * scale for a, l in zip(row_a, row_l)) for row_a, row_l in zip(base, lie))


def deturck_sigma_check(n):
    """``sigma^T (A + n L) = -(n-2) sigma^T``: the gauge term leaves the mass aspect alone."""
    matrix = deturck_system_matrix(n, n)
    weights = sigma_vector(n)
    residuals = {}
    for col in range(n * n):
        contracted = sum(weights[row] * matrix[row][col] for row in range(n * n))
        i, j = divmod(col, n)
        residuals[f"sigma A'[{i + 1},{j + 1}]"] = contracted + (n - 2) * weights[col]
    return ResidualReport("deturck-sigma", {"n": n}, residuals)


def _expected_lower_field(n, m, w):
    m = Fraction(m)
    trace = sum(w[a][a] for a in range(1, n))
    first = ((m / 2 - n + 1) * w[0][0] - (m - 2) / 2 * trace) / m
    return (first,) + tuple((m - n) / m * w[0][a] for a in range(1, n))


def deturck_expansion_check(n, m, w, kappa=None, order=None):
    """Exact leading coefficients of ``X`` and ``L_X g`` for ``g = h + x^(m-2) w / m``.

    Checks the lowered field at ``x^(m-1)``, the Lie derivative at ``x^(m-2)``, the upper field
    vanishing below ``x^(m+1)``, the full coefficient flow against ``A + m L`` and, for ``m = n``,
    that the mass-aspect combination of ``L_X g`` has no ``x^(n-2)`` term.
    """
    if not 1 <= m <= n:
        raise FlowException(f"expansion order m must satisfy 1 <= m <= n = {n}, got {m}")
    w = kappa_matrix(w, n)
    kappa = zero_kappa(n) if kappa is None else kappa_matrix(kappa, n)
    order = get_options().truncation(n) + 2 if order is None else order
    metric, reference = _perturbation_metrics(n, m, w, kappa, order)
    upper = deturck_vector(metric, reference)
    lowered = lower_index(metric, upper)
    lie = lie_derivative(metric, upper)

    residuals = {}
    for k, (value, expected) in enumerate(zip(lowered, _expected_lower_field(n, m, w))):
        residuals[f"X_{k + 1}"] = value.coefficient(m - 1) - expected
    for k, value in enumerate(upper):
        residuals[f"X^{k + 1} order"] = max_abs_coefficient(value, upto=m)

    lie_matrix = lie_coefficient_matrix(n, m)
    flat = [v for row in w for v in row]
    for i in range(n):
        for j in range(i, n):
            expected = sum(lie_matrix[i * n + j][c] * flat[c] for c in range(n * n))
            residuals[f"lie[{i + 1},{j + 1}]"] = lie[i][j].coefficient(m - 2) - expected

    if m == n:
        weight = Fraction(n - 1, n)
        combination = weight * lie[0][0] + series_sum((lie[a][a] for a in range(1, n)), lie[0][0])
        residuals["mass aspect combination"] = combination.coefficient(n - 2)

    einstein = raw_curvature(metric).einstein
    system = deturck_system_matrix(n, m)
    base = system_matrix(n, m)
    source = [v for row in kappa for v in row] if m == n else [Fraction(0)] * (n * n)
    for i in range(n):
        for j in range(i, n):
            row = i * n + j
            computed = -2 * m * einstein[i][j].coefficient(m - 2) + m * lie[i][j].coefficient(m - 2)
            expected = sum(system[row][c] * flat[c] + base[row][c] * source[c] for c in range(n * n))
            residuals[f"flow[{i + 1},{j + 1}]"] = computed - expected
    logger.debug("deturck check n=%d m=%d: %d residuals", n, m, len(residuals))
    return ResidualReport("deturck", {"n": n, "m": m}, residuals)


def series_field_samples(n, w, kappa=None, x=None, order=None):
    """``|X^x|`` of the order-``n`` perturbation ``w`` at small ``x``, from its exact series."""
    w = kappa_matrix(w, n)
    kappa = zero_kappa(n) if kappa is None else kappa_matrix(kappa, n)
    order = get_options().truncation(n) + 4 if order is None else order
    metric, reference = _perturbation_metrics(n, n, w, kappa, order)
    upper = deturck_vector(metric, reference)
    x = np.geomspace(1e-3, 1e-2, 12) if x is None else np.asarray(x, dtype=float)
    return x, np.abs(upper[0].to_float().evaluate(x))


def leading_field_coefficient(n, w):
    """``c`` in ``X^x = c x^(n+1) + O(x^(2n+1))`` for an order-``n`` perturbation ``w`` of the hyperbolic reference."""
    w = kappa_matrix(w, n)
    return Fraction(2 - n, 2 * n) * (w[0][0] + sum(w[a][a] for a in range(1, n)))


# -- grid path


@dataclasses.dataclass(frozen=True, eq=False)
class RadialFields:
    """Compactified components and their log-derivatives at the interior nodes."""

    x: np.ndarray
    a: np.ndarray
    phis: Tuple[np.ndarray, ...]
    alpha: np.ndarray
    lams: Tuple[np.ndarray, ...]
    lam_primes: Tuple[np.ndarray, ...]
    trace: np.ndarray  # sum_f d_f lam_f


def radial_fields(grid, a, phis, fibres):
    interior = grid.interior
    a_x, _ = grid.derivatives(grid.extend(a))
    a_in = a[interior]
    lams, lam_primes = [], []
    trace = np.zeros_like(a_in)
    for fibre, phi in zip(fibres, phis):
        phi_x, phi_xx = grid.derivatives(grid.extend(phi, WARP))
        phi_in = phi[interior]
        lam = phi_x / (2.0 * phi_in)
        lams.append(lam)
        lam_primes.append(phi_xx / (2.0 * phi_in) - 2.0 * lam * lam)
        trace = trace + fibre.dim * lam
    return RadialFields(
        x=grid.x[interior],
        a=a_in,
        phis=tuple(p[interior] for p in phis),
        alpha=a_x / (2.0 * a_in),
        lams=tuple(lams),
        lam_primes=tuple(lam_primes),
        trace=trace,
    )


def compactified_field(fields, reference, fibres):
    """``X^x`` at the interior nodes from the fields of ``g`` and of the reference."""
    x = fields.x
    value = (x * x / fields.a) * (fields.alpha - reference.alpha)
    for fibre, lam, lam0, phi, phi0 in zip(fibres, fields.lams, reference.lams, fields.phis, reference.phis):
        ratio = phi0 / phi
        value = value - fibre.dim * x * x * (lam / fields.a - ratio * lam0 / reference.a)
        value = value + fibre.dim * x * (1.0 / fields.a - ratio / reference.a)
    return value


def complete_field(grid, interior_values):
    """Node values ``0..points`` of ``X^x``: zero on ``x = 0``, extrapolated onto a Dirichlet end."""
    values = np.zeros_like(grid.x)
    values[grid.interior] = interior_values
    if not grid.has_ghost:
        values[-1] = 2.0 * values[-2] - values[-3]
    return values


def deturck_field(state):
    """``X^x`` of a :class:`~ahflow.flow.state.FlowState` at every node (ghost excluded)."""
    a0, phis0 = state.reference
    fields = radial_fields(state.grid, state.a, state.phis, state.fibres)
    reference = radial_fields(state.grid, a0, phis0, state.fibres)
    return complete_field(state.grid, compactified_field(fields, reference, state.fibres))


def extended_field(grid, values):
    return grid.extend(values, VECTOR)


def field_decay_exponent(x, values, floor=1e-300):
    """Log-log slope of ``|values|`` against ``x``; ``None`` when the field vanishes."""
    x = np.asarray(x, dtype=float)
    values = np.abs(np.asarray(values, dtype=float))
    keep = values > floor
    if keep.sum() < 2:
        return None
    slope, _ = np.polyfit(np.log(x[keep]), np.log(values[keep]), 1)
    return float(slope)


def state_field_decay(state, options=None):
    """Decay exponent of the grid DeTurck field over the near-boundary fit window."""
    window = fit_window(state.grid, options)
    field = deturck_field(state)
    return field_decay_exponent(state.x[window], field[window])
