"""Mass of asymptotically hyperbolic metrics.

Two functionals are computed from the same data and must agree:

* the boundary-expansion mass, the integral of the mass aspect
  ``sigma = tr(kappa_AB) + (n-1)/n kappa_11`` over the conformal boundary;
* the flux mass, a surface integral of ``U^i`` built from ``e = g - b`` against the
  hyperbolic reference ``b``, sampled on level sets ``r = R`` and extrapolated in ``1/R``.
"""
import dataclasses
import logging
from fractions import Fraction
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np
import sympy

from .errors import ChartError, ExtrapolationError, MassException, MassOrderError
from .geometry.charts import GridMetric, RadialChart, SeriesMetric, WarpedMetric, torus_fibres
from .geometry.models import build_geon_series, kappa_matrix
from .options import get_options
from .series import EXACT, FLOAT, LaurentSeries, series_derivative, series_revert, series_substitute, sinh_series

logger = logging.getLogger(__name__)


def _normalize_kappa(kappa, n):
    entries = [list(row) for row in kappa]
    if len(entries) != n or any(len(row) != n for row in entries):
        raise ChartError(f"coefficient tensor must be {n}x{n}")
    if any(isinstance(v, np.ndarray) for row in entries for v in row):
        shape = np.broadcast(*[np.asarray(v, dtype=float) for row in entries for v in row]).shape
        rows = tuple(tuple(np.broadcast_to(np.asarray(v, dtype=float), shape) for v in row) for row in entries)
        for i in range(n):
            for j in range(i + 1, n):
                if not np.array_equal(rows[i][j], rows[j][i]):
                    raise ChartError(f"coefficient tensor is not symmetric at ({i}, {j})")
        return rows
    if any(isinstance(v, float) for row in entries for v in row):
        rows = tuple(tuple(float(v) for v in row) for row in entries)
        for i in range(n):
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise ChartError(f"coefficient tensor is not symmetric at ({i}, {j})")
        return rows
    return kappa_matrix(entries, n)


@dataclasses.dataclass(frozen=True, eq=False)
class BoundaryData:
    """The order-``order`` coefficient tensor ``kappa`` of ``g~ = dx^2 + g_(k) + x^n kappa / n``.

    Entries are exact rationals, floats, or numpy arrays sampled on a uniform periodic
    boundary grid.
    """

    chart: RadialChart
    kappa: Tuple[Tuple[Any, ...], ...]
    order: int

    def __post_init__(self):
        object.__setattr__(self, "kappa", _normalize_kappa(self.kappa, self.chart.n))

    @property
    def n(self):
        return self.chart.n

    @property
    def is_gridded(self):
        return isinstance(self.kappa[0][0], np.ndarray)

    @property
    def is_exact(self):
        return isinstance(self.kappa[0][0], Fraction)

    @property
    def kappa11(self):
        return self.kappa[0][0]

    @property
    def kappa1a(self):
        return tuple(self.kappa[0][1:])

    @property
    def kappa_ab(self):
        return tuple(tuple(row[1:]) for row in self.kappa[1:])

    @property
    def tangential_trace(self):
        return sum(self.kappa[a][a] for a in range(1, self.n))


def _require_mass_order(bd):
    if bd.order != bd.n:
        raise MassOrderError(f"mass needs expansion order n = {bd.n}, got {bd.order}")


def mass_aspect(bd):
    """``sigma = g_(k)^AB kappa_AB + (n-1)/n kappa_11``, pointwise on the boundary."""
    _require_mass_order(bd)
    weight = Fraction(bd.n - 1, bd.n) if bd.is_exact else (bd.n - 1) / bd.n
    return bd.tangential_trace + weight * bd.kappa11


def _integrate(values, chart):
    volume = chart.boundary_volume()
    if isinstance(values, np.ndarray):
        # periodic trapezoid rule on a uniform grid is the sample mean
        return float(np.mean(values)) * float(volume)
    if isinstance(values, Fraction):
        return sympy.Rational(values.numerator, values.denominator) * volume
    return float(values) * float(volume)


def wang_mass(bd, generalized=True):
    """Integral of the mass aspect over the boundary.

    With ``generalized=False`` only ``tr(kappa_AB)`` is integrated, which is the mass once
    ``kappa_11 = kappa_1A = 0``; other data are refused.
    """
    _require_mass_order(bd)
    if generalized:
        return _integrate(mass_aspect(bd), bd.chart)
    for value in (bd.kappa11,) + bd.kappa1a:
        if np.any(np.asarray(value, dtype=float) != 0):
            raise MassOrderError("the trace form of the mass needs kappa_11 = kappa_1A = 0")
    return _integrate(bd.tangential_trace, bd.chart)


def boundary_data_from_series(metric, order=None):
    """Read ``kappa`` off a compactified series metric whose deviation starts at ``x^n``."""
    n = metric.n
    order = n if order is None else order
    deviation = metric.deviation()
    kappa = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            entry = deviation[i][j]
            if entry.valuation < order:
                raise MassOrderError(f"component ({i}, {j}) deviates from the boundary metric at x^{entry.valuation}")
            kappa[i][j] = order * entry.coefficient(order)
    return BoundaryData(metric.chart, tuple(tuple(row) for row in kappa), order)


def boundary_data_from_warped(metric, order=None):
    """``kappa = diag(psi, phi, ..., phi)`` of a compactified warped series metric."""
    n = metric.n
    order = n if order is None else order
    radial, factors = metric.compactified_components()
    values = []
    for series in (radial,) + tuple(factors):
        deviation = series - 1
        if deviation.valuation < order:
            raise MassOrderError(f"warped component deviates from the boundary metric at x^{deviation.valuation}")
        values.append(order * deviation.coefficient(order))
    diagonal = [values[0]]
    for fibre, value in zip(metric.fibres, values[1:]):
        diagonal.extend([value] * fibre.dim)
    zero = diagonal[0] * 0
    kappa = tuple(tuple(diagonal[i] if i == j else zero for j in range(n)) for i in range(n))
    return BoundaryData(metric.chart, kappa, order)


def geon_boundary_data(n, moduli=()):
    """Boundary data of the toroidal geon, read from its exact series in the special defining function."""
    metric = build_geon_series(n, moduli)
    if metric.components[0][0] != LaurentSeries.constant(1, metric.order, EXACT):
        raise MassException("geon defining function does not give a unit dx^2 component")
    return boundary_data_from_series(metric, n)


# -- gauge normalization


def _matrix_product_t(jacobian, matrix):
    """``J^T G J`` for matrices of series."""
    n = len(matrix)
    like = matrix[0][0]
    zero = LaurentSeries.zero(like.truncation_order, like.kind)

    def entry(i, j):
        total = zero
        for k in range(n):
            if jacobian[k][i].is_zero:
                continue
            for l in range(n):
                if not jacobian[l][j].is_zero and not matrix[k][l].is_zero:
                    total = total + jacobian[k][i] * matrix[k][l] * jacobian[l][j]
        return total

    return tuple(tuple(entry(i, j) for j in range(n)) for i in range(n))


def _defining_ratio_squared(chart, s, order, kind):
    """``(rho(x) / rho(s(x)))^2``."""
    if chart.k == 0:
        ratio = 1 / s.shift(-1)
    else:
        sinh = sinh_series(order + 1, kind)
        ratio = sinh.shift(-1) / series_substitute(sinh, s).shift(-1)
    return ratio * ratio


def normalize_gauge(bd):
    """Remove ``kappa_1A`` by a shift of the boundary coordinates and ``kappa_11`` by a change of defining function.

    The result has ``kappa'_AB = kappa_AB + kappa_11 g_(k)AB / n`` and ``kappa'_11 = kappa'_1A = 0``.
    """
    _require_mass_order(bd)
    n = bd.n
    if bd.is_gridded:
        shift = bd.kappa11 / n
        zero = np.zeros_like(bd.kappa11)
        kappa = tuple(
            tuple(zero if 0 in (i, j) else bd.kappa[i][j] + (shift if i == j else 0) for j in range(n))
            for i in range(n)
        )
        return BoundaryData(bd.chart, kappa, n)

    kind = EXACT if bd.is_exact else FLOAT
    order = get_options().truncation(n) + 2
    one = 1 if kind == EXACT else 1.0

    def monomial(coefficient, constant=0):
        return LaurentSeries.from_mapping({0: constant, n: coefficient / n}, order, kind)

    metric = tuple(tuple(monomial(bd.kappa[i][j], one if i == j else 0) for j in range(n)) for i in range(n))
    zero = LaurentSeries.zero(order, kind)
    identity = LaurentSeries.constant(one, order, kind)
    jacobian = [[identity if i == j else zero for j in range(n)] for i in range(n)]
    for a in range(1, n):
        # y^A = y'^A + beta^A(x), d beta^A / dx = -x^n kappa_1A / n
        jacobian[a][0] = -monomial(bd.kappa[0][a])
    shifted = _matrix_product_t(jacobian, metric)

    # x' = x (1 + kappa_11 x^n / (2 n^2)) makes the dx'^2 part exactly dx'^2 / x'^2 through order n
    forward = LaurentSeries.from_mapping({1: one, n + 1: bd.kappa11 / (2 * n * n)}, order, kind)
    s = series_revert(forward)
    ds = series_derivative(s)
    ratio = _defining_ratio_squared(bd.chart, s, order, kind)
    composed = [[series_substitute(shifted[i][j], s) * ratio for j in range(n)] for i in range(n)]
    composed[0][0] = composed[0][0] * ds * ds
    for a in range(1, n):
        composed[0][a] = composed[0][a] * ds
        composed[a][0] = composed[a][0] * ds
    kappa = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            deviation = composed[i][j] - (one if i == j else 0)
            kappa[i][j] = n * deviation.coefficient(n)
    logger.debug("normalized gauge for n=%d k=%d", n, bd.chart.k)
    return BoundaryData(bd.chart, tuple(tuple(row) for row in kappa), n)


# -- flux mass


@dataclasses.dataclass(frozen=True)
class RadialProfile:
    """Deviation from the reference of a warped metric in the radius ``r``.

    ``deviations(r)`` returns ``(eta, eps, deps)``: ``g_rr - 1/(k + r^2)``, the fibre
    deviations ``g_ff - r^2`` and their ``r``-derivatives.
    """

    chart: RadialChart
    fibres: Tuple[Any, ...]
    deviations: Callable[[np.ndarray], Tuple[Any, Tuple[Any, ...], Tuple[Any, ...]]]


def geon_profile(n, moduli=()):
    """Closed-form deviation of the geon from ``dr^2/r^2 + r^2 g_(0)``."""
    chart = RadialChart(n, 0, tuple(moduli), coordinate_kind="r")

    def deviations(r):
        r = np.asarray(r, dtype=float)
        decay = r ** (-float(n))
        eta = r**-2 * decay / (1 - decay)
        eps_xi = -(r**2) * decay
        deps_xi = (n - 2) * r * decay
        zero = np.zeros_like(r)
        return eta, (eps_xi, zero), (deps_xi, zero)

    return RadialProfile(chart, torus_fibres(n), deviations)


def warped_profile(metric):
    """Deviation profile of a compactified warped series metric, evaluated through its series."""
    chart = metric.chart
    radial, factors = metric.compactified_components()
    radial_dev = radial - 1
    factor_devs = tuple(f - 1 for f in factors)

    def deviations(r):
        r = np.asarray(r, dtype=float)
        if chart.k == 0:
            x = 1 / r
            rho, drho = x, np.ones_like(x)
        else:
            x = np.arcsinh(1 / r)
            rho, drho = np.sinh(x), np.cosh(x)
        eta = radial_dev.evaluate(x) * rho**2 / drho**2
        eps, deps = [], []
        for dev in factor_devs:
            value = dev.evaluate(x)
            slope = dev.evaluate(x, derivative=1)
            eps.append(value / rho**2)
            deps.append(-(rho**2 / drho) * (slope / rho**2 - 2 * value * drho / rho**3))
        return eta, tuple(eps), tuple(deps)

    return RadialProfile(chart.with_coordinates("r"), metric.fibres, deviations)


def _warped_flux(profile, radii):
    """``U^r`` on ``r = R``, per unit boundary volume."""
    k = profile.chart.k
    r = np.asarray(radii, dtype=float)
    eta, eps, deps = profile.deviations(r)
    beta = 1 / (k + r**2)
    radial = beta + eta
    log_v = r / (k + r**2)
    volume_density = radial
    a_term = 0.0
    b_term = 0.0
    for fibre, e, de in zip(profile.fibres, eps, deps):
        factor = r**2 + e
        volume_density = volume_density * factor**fibre.dim
        a_term = a_term + fibre.dim / factor * (e / r - de + r * eta / beta)
        b_term = b_term + fibre.dim * e / factor
    flux = (a_term + log_v * b_term) / radial
    return np.sqrt(volume_density) * np.sqrt(k + r**2) * flux


def _local_fit(r, values, radius, options):
    """Value and ``r``-slope at ``radius`` of a polynomial fit over ``|r - radius| <= half_width * radius``."""
    half_width = options.flux_fit_half_width * radius
    if radius - half_width < r[0] or radius + half_width > r[-1]:
        raise ExtrapolationError(
            f"the fit window around R={radius:g} leaves the sampled range [{r[0]:g}, {r[-1]:g}]"
        )
    window = np.abs(r - radius) <= half_width
    if window.sum() < 2 * (options.flux_fit_degree + 1):
        raise ExtrapolationError(f"too few samples around R={radius:g} for a degree {options.flux_fit_degree} fit")
    s = (r[window] - radius) / radius
    coefficients = np.polynomial.polynomial.polyfit(s, values[window], options.flux_fit_degree)
    return coefficients[0], coefficients[1] / radius


def _grid_flux(metric, radii, options):
    chart = metric.chart
    if chart.coordinate_kind != "r" or metric.compactified:
        raise ChartError("grid flux mass needs a physical metric in the radius r")
    n = chart.n
    r = metric.grid
    radii = np.asarray(radii, dtype=float)
    # deviations rescaled to O(1) at large r
    scaled_fibres = tuple((f - r**2) * r ** (n - 2.0) for f in metric.factors)
    scaled_radial = (metric.radial - 1 / (chart.k + r**2)) * r ** (n + 2.0)
    eta, eps, deps = [], [[] for _ in scaled_fibres], [[] for _ in scaled_fibres]
    for radius in radii:
        value, _ = _local_fit(r, scaled_radial, radius, options)
        eta.append(value * radius ** (-n - 2.0))
        for index, scaled in enumerate(scaled_fibres):
            value, slope = _local_fit(r, scaled, radius, options)
            eps[index].append(value * radius ** (2.0 - n))
            deps[index].append(slope * radius ** (2.0 - n) + (2.0 - n) * value * radius ** (1.0 - n))
    fitted = (np.array(eta), tuple(np.array(e) for e in eps), tuple(np.array(d) for d in deps))
    logger.debug("grid flux fits at radii %s", radii)
    return _warped_flux(RadialProfile(chart, metric.fibres, lambda samples: fitted), radii)


def _reference_christoffel(n, r):
    """``Gamma^m_jk`` of ``dr^2/r^2 + r^2 delta``, index 0 is ``r``."""
    gamma = np.zeros((n, n, n))
    gamma[0, 0, 0] = -1 / r
    for a in range(1, n):
        gamma[0, a, a] = -(r**3)
        gamma[a, 0, a] = gamma[a, a, 0] = 1 / r
    return gamma


def _matrix_flux(deviation, derivative, n, radius):
    """Normal flux and tangential ``A^A`` at ``r = radius`` for a homogeneous torus metric."""
    r = float(radius)
    x = 1 / r
    dev = np.array([[d.evaluate(x) for d in row] for row in deviation])
    ddev = np.array([[d.evaluate(x) for d in row] for row in derivative])
    e = np.empty((n, n))
    de = np.zeros((n, n, n))
    e[0, 0] = dev[0, 0] / r**2
    e[0, 1:] = e[1:, 0] = -dev[0, 1:]
    e[1:, 1:] = r**2 * dev[1:, 1:]
    de[0, 0, 0] = -2 * dev[0, 0] / r**3 - ddev[0, 0] / r**4
    de[0, 0, 1:] = de[0, 1:, 0] = ddev[0, 1:] / r**2
    de[0, 1:, 1:] = 2 * r * dev[1:, 1:] - ddev[1:, 1:]
    g = e.copy()
    g[0, 0] += 1 / r**2
    g[1:, 1:] += r**2 * np.eye(n - 1)
    gamma = _reference_christoffel(n, r)
    covariant = de - np.einsum("mjk,ml->jkl", gamma, e) - np.einsum("mjl,km->jkl", gamma, e)
    inverse = np.linalg.inv(g)
    a_vec = np.einsum("ik,jl,jkl->i", inverse, inverse, covariant) - np.einsum(
        "ij,kl,jkl->i", inverse, inverse, covariant
    )
    mixed = inverse @ e
    b_vec = inverse[:, 0] * np.trace(mixed) - (mixed @ inverse)[:, 0]
    flux = np.sqrt(np.linalg.det(g)) * (r * a_vec + b_vec)
    return flux[0], a_vec[1:]


def richardson_extrapolate(samples, floor=None):
    """Eliminate the ``c/R`` term between consecutive radii; the error is the spread of the last two estimates."""
    floor = get_options().extrapolation_floor if floor is None else floor
    radii = [float(r) for r, _ in samples]
    values = [float(m) for _, m in samples]
    if len(samples) < 2:
        raise ExtrapolationError("extrapolation needs at least two radii")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ExtrapolationError("radii must be strictly increasing")
    estimates = [(r2 * m2 - r1 * m1) / (r2 - r1) for r1, r2, m1, m2 in zip(radii, radii[1:], values, values[1:])]
    spread = abs(estimates[-1] - estimates[-2]) if len(estimates) > 1 else 0.0
    error = spread + floor * max(abs(v) for v in values + estimates)
    return estimates[-1], error, tuple(estimates)


@dataclasses.dataclass(frozen=True)
class MassReport:
    wang_mass: Optional[Any] = None
    mass_aspect: Optional[Any] = None
    ch_samples: Tuple[Tuple[float, float], ...] = ()
    ch_extrapolated: Optional[float] = None
    ch_error: Optional[float] = None
    tangential: Tuple[Tuple[float, float], ...] = ()
    metadata: Dict[str, Any] = dataclasses.field(default_factory=dict)

    def consistent(self):
        """Whether the extrapolated flux mass matches the boundary-expansion mass within its error."""
        if self.wang_mass is None or self.ch_extrapolated is None:
            return False
        return abs(self.ch_extrapolated - float(self.wang_mass)) <= self.ch_error

    def with_wang(self, bd):
        return dataclasses.replace(self, wang_mass=wang_mass(bd), mass_aspect=mass_aspect(bd))

    def to_summary(self):
        def number(value):
            return None if value is None else float(value)

        return {
            "wang_mass": number(self.wang_mass),
            "wang_mass_exact": None if self.wang_mass is None else str(self.wang_mass),
            "mass_aspect": None if self.mass_aspect is None else str(self.mass_aspect),
            "ch_extrapolated": number(self.ch_extrapolated),
            "ch_error": number(self.ch_error),
            "ch_samples": [[float(r), float(m)] for r, m in self.ch_samples],
        }


def _check_reference(metric_chart, reference):
    if reference is None:
        return
    if reference.n != metric_chart.n or reference.k != metric_chart.k:
        raise ChartError(
            f"reference chart (n={reference.n}, k={reference.k}) does not match "
            f"the metric chart (n={metric_chart.n}, k={metric_chart.k})"
        )


def ch_mass(metric, radii=None, reference=None, options=None):
    """Flux mass on ``r = R`` for each radius, extrapolated to infinity.

    ``metric`` is a compactified :class:`SeriesMetric` (torus boundary, general components),
    a compactified :class:`WarpedMetric`, a physical :class:`GridMetric` in ``r``, or a
    :class:`RadialProfile`. ``reference`` is the chart of the hyperbolic reference.
    """
    options = get_options(options)
    if not radii:
        if isinstance(metric, GridMetric):
            radii = options.grid_flux_radii(metric.chart.n)
        else:
            radii = options.extrapolation_radii
    radii = tuple(float(r) for r in radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ExtrapolationError("radii must be strictly increasing")
    _check_reference(metric.chart, reference)
    volume = float(metric.chart.boundary_volume())
    tangential = ()
    if isinstance(metric, SeriesMetric):
        path = "matrix"
        deviation = metric.deviation()
        derivative = tuple(tuple(series_derivative(d) for d in row) for row in deviation)
        fluxes = []
        tangential_values = []
        for radius in radii:
            normal, tangent = _matrix_flux(deviation, derivative, metric.n, radius)
            fluxes.append(normal)
            tangential_values.append((radius, float(np.max(np.abs(tangent))) if tangent.size else 0.0))
        fluxes = np.array(fluxes)
        tangential = tuple(tangential_values)
    elif isinstance(metric, WarpedMetric):
        path = "warped"
        fluxes = _warped_flux(warped_profile(metric), radii)
    elif isinstance(metric, GridMetric):
        path = "grid"
        fluxes = _grid_flux(metric, radii, options)
    elif isinstance(metric, RadialProfile):
        path = "profile"
        fluxes = _warped_flux(metric, radii)
    else:
        raise MassException(f"cannot compute a flux mass for {type(metric).__name__}")
    samples = tuple((radius, volume * float(flux)) for radius, flux in zip(radii, fluxes))
    value, error, estimates = richardson_extrapolate(samples, options.extrapolation_floor)
    logger.info("flux mass (%s path): %.12g +/- %.3g", path, value, error)
    return MassReport(
        ch_samples=samples,
        ch_extrapolated=value,
        ch_error=error,
        tangential=tangential,
        metadata={"path": path, "estimates": estimates, "boundary_volume": volume},
    )


def tangential_decay_exponent(report, floor=1e-300):
    """Log-log slope of the tangential flux against ``R``; ``None`` when it vanishes to roundoff."""
    radii = np.array([r for r, _ in report.tangential])
    values = np.array([v for _, v in report.tangential])
    if radii.size < 2 or np.any(values <= floor):
        return None
    slope, _ = np.polyfit(np.log(radii), np.log(values), 1)
    return float(slope)
