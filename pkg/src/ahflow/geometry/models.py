"""Model metrics: the hyperbolic reference, expansion-class data and the toroidal geon."""
import logging
import math
from fractions import Fraction

import numpy as np

from ..errors import ChartError, GeometryException
from ..options import get_options
from ..series import (
    EXACT,
    LaurentSeries,
    rational,
    series_exp,
    series_pow,
    series_revert,
)
from .charts import (
    GridMetric,
    RadialChart,
    SeriesMetric,
    WarpedMetric,
    identity_matrix,
    sphere_fibres,
    torus_fibres,
)

logger = logging.getLogger(__name__)


def kappa_matrix(kappa, n=None):
    """Validate a coefficient tensor and return it as a tuple of tuples of Fractions."""
    rows = tuple(tuple(rational(v) for v in row) for row in kappa)
    size = len(rows)
    if n is not None and size != n:
        raise ChartError(f"coefficient tensor must be {n}x{n}, got {size} rows")
    if any(len(row) != size for row in rows):
        raise ChartError("coefficient tensor must be square")
    for i in range(size):
        for j in range(i + 1, size):
            if rows[i][j] != rows[j][i]:
                raise ChartError(f"coefficient tensor is not symmetric at ({i}, {j})")
    return rows


def zero_kappa(n):
    return tuple(tuple(Fraction(0) for _ in range(n)) for _ in range(n))


def random_kappa(n, seed, bound=None, rng=None):
    """Seeded symmetric rational tensor with numerators and denominators bounded by ``bound``."""
    bound = bound or get_options().random_entry_bound
    rng = rng or np.random.default_rng(seed)
    entries = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            value = Fraction(int(rng.integers(-bound, bound + 1)), int(rng.integers(1, bound + 1)))
            entries[i][j] = entries[j][i] = value
    return tuple(tuple(row) for row in entries)


def hyperbolic_model(chart, order=None, kind=EXACT):
    """The compactified hyperbolic metric ``dx^2 + g_(k)``."""
    order = get_options().truncation(chart.n) if order is None else order
    if chart.k == 0:
        return SeriesMetric(chart, identity_matrix(chart.n, order, kind))
    one = LaurentSeries.constant(1, order, kind)
    return WarpedMetric(chart, one, sphere_fibres(chart.n), (one,))


def hyperbolic_grid(chart, grid):
    """The hyperbolic metric in the radius ``r`` sampled on ``grid``."""
    r = np.asarray(grid, dtype=float)
    chart = chart.with_coordinates("r")
    if chart.k == 0:
        return GridMetric(chart, r, r**-2, torus_fibres(chart.n), (r**2, r**2))
    return GridMetric(chart, r, 1 / (1 + r**2), sphere_fibres(chart.n), (r**2,))


def _check_expansion_order(n, m):
    if not 1 <= m <= n:
        raise ChartError(f"expansion order m must satisfy 1 <= m <= n = {n}, got {m}")


def build_expansion_metric(n, m, kappa, order=None, kind=EXACT, chart=None):
    """``g~ = dx^2 + g_(0) + x^m kappa / m`` with a vanishing tail, as a compactified series metric."""
    _check_expansion_order(n, m)
    kappa = kappa_matrix(kappa, n)
    order = get_options().truncation(n) if order is None else order
    chart = chart or RadialChart(n)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            terms = {m: kappa[i][j] / m}
            if i == j:
                terms[0] = Fraction(1)
            series = LaurentSeries.from_mapping(terms, order, EXACT)
            row.append(series if kind == EXACT else series.to_float())
        rows.append(tuple(row))
    return SeriesMetric(chart, tuple(rows))


def rotational_parts(kappa):
    """``(psi, phi)`` of a rotationally symmetric tensor ``diag(psi, phi, ..., phi)``."""
    n = len(kappa)
    psi = kappa[0][0]
    phi = kappa[1][1]
    for i in range(n):
        for j in range(n):
            expected = psi if i == j == 0 else (phi if i == j else 0)
            if kappa[i][j] != expected:
                raise ChartError("k=1 data must be rotationally symmetric: diag(psi, phi, ..., phi)")
    return psi, phi


def build_rotational_metric(n, m, psi, phi, order=None, kind=EXACT):
    """Compactified ``(1 + x^m psi/m) dx^2 + (1 + x^m phi/m) g_sphere`` for the defining function ``sinh x``."""
    _check_expansion_order(n, m)
    order = get_options().truncation(n) if order is None else order
    chart = RadialChart(n, k=1)
    parts = []
    for value in (rational(psi), rational(phi)):
        series = LaurentSeries.from_mapping({0: Fraction(1), m: value / m}, order, EXACT)
        parts.append(series if kind == EXACT else series.to_float())
    return WarpedMetric(chart, parts[0], sphere_fibres(n), (parts[1],))


def build_perturbed(n, k, kappa, order=None, kind=EXACT, chart=None):
    """``rho_(k)^-2 [dx^2 + g_(k) + x^n kappa / n]`` with a vanishing tail."""
    order = get_options().truncation(n) if order is None else order
    if order < n:
        raise ChartError(f"perturbed metrics need order >= n = {n}, got {order}")
    kappa = kappa_matrix(kappa, n)
    if k == 0:
        return build_expansion_metric(n, n, kappa, order, kind, chart=chart)
    if k == 1:
        psi, phi = rotational_parts(kappa)
        return build_rotational_metric(n, n, psi, phi, order, kind)
    raise ChartError(f"boundary curvature must be 0 or 1, got {k}")


# -- geon


def geon_bolt(n):
    """Defining-function value of the bolt ``r = 1``."""
    return 4.0 ** (1.0 / n)


def _geon_log_series(n, order):
    """``G(u) = sum_j C(2j, j) 4^-j u^(nj) / (nj)``, so that ``x = u exp(G(u))`` with ``u = 1/r``."""
    terms = {}
    j = 1
    while n * j <= order:
        terms[n * j] = Fraction(math.comb(2 * j, j), 4**j) / (n * j)
        j += 1
    return LaurentSeries.from_mapping(terms, order, EXACT)


def geon_inverse_radius(n, order):
    """``u = 1/r`` as a series in the special defining function ``x``."""
    x_of_u = series_exp(_geon_log_series(n, order)).shift(1)
    return series_revert(x_of_u)


def geon_radius_series(n, order):
    """``r(x)`` with a simple pole, known through ``x**(order - 1)``."""
    return 1 / geon_inverse_radius(n, order)


def geon_closed_form_radius(n, order):
    """``r(x) = x^-1 (1 + x^n/4)^(2/n)``."""
    base = LaurentSeries.from_mapping({0: 1, n: Fraction(1, 4)}, order, EXACT)
    return series_pow(base, Fraction(2, n)).shift(-1)


def build_geon_series(n, moduli=(), order=None):
    """The compactified geon ``diag(1, x^2 r^2 f, x^2 r^2, ...)`` near infinity."""
    order = get_options().truncation(n) if order is None else order
    chart = RadialChart(n, 0, tuple(moduli))
    u = geon_inverse_radius(n, order)
    xr = 1 / u.shift(-1)
    warp = (xr * xr).truncate(order)
    closing = (warp * (1 - u**n)).truncate(order)
    zero = LaurentSeries.zero(order, EXACT)
    rows = []
    for i in range(n):
        row = [zero] * n
        if i == 0:
            row[0] = LaurentSeries.constant(1, order, EXACT)
        elif i == 1:
            row[1] = closing
        else:
            row[i] = warp
        rows.append(tuple(row))
    return SeriesMetric(chart, tuple(rows))


def geon_compactified(n, x):
    """Closed-form compactified geon ``(a, phi_xi, phi_theta)`` at defining-function values ``x``."""
    x = np.asarray(x, dtype=float)
    xn = x**n
    warp = (1 + xn / 4) ** (4.0 / n)
    closing = warp * ((4 - xn) / (4 + xn)) ** 2
    return np.ones_like(x), closing, warp


def build_geon(n, moduli=(), r_max=None, points=20001, r_min=1.0, options=None):
    """Samples of ``dr^2/(r^2 f) + r^2 f dxi^2 + r^2 sum dtheta_i^2`` with ``f = 1 - r^-n``.

    The default ``r_max`` reaches past the flux radii :func:`~ahflow.mass.ch_mass` uses for sampled metrics.
    """
    if r_max is None:
        r_max = get_options(options).grid_flux_extent(n)
    if r_min < 1.0 or r_max <= r_min:
        raise GeometryException(f"geon radii must satisfy 1 <= r_min < r_max, got [{r_min}, {r_max}]")
    chart = RadialChart(n, 0, tuple(moduli), coordinate_kind="r")
    r = np.linspace(r_min, r_max, points)
    f = 1 - r ** (-float(n))
    with np.errstate(divide="ignore"):
        radial = 1 / (r**2 * f)
    return GridMetric(chart, r, radial, torus_fibres(n), (r**2 * f, r**2))
