"""Recover the boundary coefficient tensor of a sampled flow state.

Each compactified component is fitted near ``x = 0`` by ``sum_p c_p x^p`` for ``p = 1..n+1``
over the window ``[2 h_b, 20 h_b]`` (``h_b`` the first grid spacing); the order-``n``
coefficient gives ``kappa = n c_n`` and the mass follows from the boundary-expansion formula.
"""
import dataclasses
import logging
from typing import Dict, Optional, Tuple

import numpy as np

from ..errors import FitConditionError, FlowException
from ..mass import BoundaryData, MassReport, wang_mass
from ..options import get_options
from .state import fit_window

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class ComponentFit:
    name: str
    coefficients: np.ndarray  # c_p for p = 1..len
    scale: float  # largest x in the window

    def coefficient(self, power):
        return float(self.coefficients[power - 1])

    def magnitude(self, power):
        """Size of the order-``power`` term across the window."""
        return abs(self.coefficient(power)) * self.scale**power


@dataclasses.dataclass(frozen=True, eq=False)
class MassFit:
    boundary_data: BoundaryData
    report: MassReport
    components: Tuple[ComponentFit, ...]
    condition: float
    window: Tuple[float, float]

    @property
    def mass(self):
        return float(self.report.wang_mass)

    @property
    def kappa(self):
        return self.boundary_data.kappa

    def lower_orders(self) -> Dict[str, float]:
        """Largest fitted magnitude below order ``n``, per component."""
        n = self.boundary_data.n
        return {c.name: max((c.magnitude(p) for p in range(1, n)), default=0.0) for c in self.components}

    def lower_order_magnitude(self):
        return max(self.lower_orders().values(), default=0.0)


def design_matrix(x, orders, scale):
    scaled = np.asarray(x, dtype=float) / scale
    return np.stack([scaled**p for p in range(1, orders + 1)], axis=1)


def fit_components(x, values, names, orders, options=None):
    """Least-squares fit of ``values[k] - values[k][0]`` on the window nodes ``x``.

    ``values`` are full node arrays; the first node is ``x = 0``.
    """
    options = get_options(options)
    if len(x) < orders + 1:
        raise FitConditionError(
            f"fit window holds {len(x)} nodes for {orders} orders; refine the grid", condition_number=np.inf
        )
    scale = float(np.max(x))
    design = design_matrix(x, orders, scale)
    condition = float(np.linalg.cond(design))
    if not condition <= options.fit_max_condition:
        logger.error("mass fit ill-conditioned: condition number %.3e", condition)
        raise FitConditionError(
            f"near-boundary fit is ill-conditioned (condition number {condition:.3e} > "
            f"{options.fit_max_condition:.1e})",
            condition_number=condition,
        )
    fits = []
    for name, (window_values, boundary_value) in zip(names, values):
        solution, *_ = np.linalg.lstsq(design, window_values - boundary_value, rcond=None)
        coefficients = solution / scale ** np.arange(1, orders + 1)
        fits.append(ComponentFit(name, coefficients, scale))
    return tuple(fits), condition


def _state_components(state):
    names = ("a",) + tuple(f.name for f in state.fibres)
    arrays = (state.a,) + tuple(state.phis)
    return names, arrays


def mass_fit(state, options=None):
    """Fitted ``kappa`` (as :class:`BoundaryData`) and the mass of a flow state."""
    options = get_options(options)
    n = state.n
    window = fit_window(state.grid, options)
    x = state.x[window]
    names, arrays = _state_components(state)
    orders = n + options.fit_extra_orders
    fits, condition = fit_components(x, [(arr[window], arr[0]) for arr in arrays], names, orders, options)
    diagonal = [n * fits[0].coefficient(n)]
    for fibre, fit in zip(state.fibres, fits[1:]):
        diagonal.extend([n * fit.coefficient(n)] * fibre.dim)
    kappa = tuple(tuple(diagonal[i] if i == j else 0.0 for j in range(n)) for i in range(n))
    bd = BoundaryData(state.chart, kappa, n)
    report = MassReport(metadata={"t": state.t, "condition": condition}).with_wang(bd)
    logger.debug("mass fit at t=%.4g: %.12g (condition %.3e)", state.t, float(report.wang_mass), condition)
    return MassFit(bd, report, fits, condition, (float(x.min()), float(x.max())))


def rate_fit(state, rates, options=None):
    """Fit interior time derivatives the same way as the state, for the lower-order leak rate."""
    options = get_options(options)
    window = fit_window(state.grid, options)
    names, _ = _state_components(state)
    full = []
    for rate in rates:
        values = np.zeros_like(state.x)
        values[state.grid.interior] = rate
        full.append((values[window], 0.0))
    fits, _ = fit_components(state.x[window], full, names, state.n + options.fit_extra_orders, options)
    return fits


def noise_floor(fit, floor=1e-15):
    """Lower-order fit magnitude of a state, bounded below by ``floor``."""
    return max(fit.lower_order_magnitude(), floor)


def decay_slope(times, masses) -> Optional[float]:
    """Slope of ``log|m|`` against ``t``; ``None`` when a mass vanishes."""
    times = np.asarray(times, dtype=float)
    masses = np.abs(np.asarray(masses, dtype=float))
    if times.size < 2:
        raise FlowException("a decay slope needs at least two samples")
    if np.any(masses == 0) or not np.all(np.isfinite(masses)):
        return None
    slope, _ = np.polyfit(times, np.log(masses), 1)
    return float(slope)


def decay_error(run):
    """``|slope + (n-2)/ell^2| / ((n-2)/ell^2)``."""
    expected = (run.n - 2) / run.ell**2
    slope = run.decay_slope()
    return None if slope is None else abs(slope + expected) / expected
