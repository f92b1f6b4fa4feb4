"""Refinement studies: rerun a grid-based scenario at h, h/2, h/4, ... and read off observed orders."""
import concurrent.futures
import dataclasses
import logging
import math
from fractions import Fraction
from typing import Dict, Optional, Tuple, Union

from ..errors import ScenarioError
from ..flow.fitting import decay_error
from ..flow.pde import flow_run
from ..flow.residual import residual_at
from ..flow.state import geon_state, hyperbolic_state, perturbed_state
from ..options import get_options, worker_count

logger = logging.getLogger(__name__)

SATURATED = "saturated"

Order = Union[float, str, None]


def torus_kappa(scenario):
    """A ``diag(k11, k_xi, k_theta, ..., k_theta)`` tensor: the given one, or built from a seeded draw."""
    if scenario.kappa is not None:
        return scenario.kappas()[0]
    draw = scenario.kappas()[0]
    n = scenario.n
    diagonal = [draw[0][0], draw[1][1]] + [draw[2][2]] * (n - 2)
    return tuple(tuple(diagonal[i] if i == j else Fraction(0) for j in range(n)) for i in range(n))


def initial_state(scenario, points=None, options=None):
    points = points or scenario.points
    n, moduli, ell = scenario.n, scenario.moduli, scenario.ell
    if scenario.initial == "geon":
        return geon_state(n, moduli, points, ell, options)
    if scenario.initial == "hyperbolic":
        return hyperbolic_state(n, moduli, points, scenario.x_max, ell, options)
    if scenario.initial == "perturbed":
        return perturbed_state(n, torus_kappa(scenario), moduli, points, scenario.x_max, ell, options)
    raise ScenarioError(f"unknown initial data {scenario.initial!r}")


@dataclasses.dataclass(frozen=True)
class ConvergenceTable:
    points: Tuple[int, ...]
    spacings: Tuple[float, ...]
    errors: Dict[str, Tuple[Optional[float], ...]]
    orders: Dict[str, Tuple[Order, ...]]
    ratios: Dict[str, Tuple[Optional[float], ...]]

    def rows(self):
        """``diagnostic, points, spacing, error, ratio, order`` with the ratio and order against the coarser level."""
        rows = []
        for name in sorted(self.errors):
            for index, (points, spacing, error) in enumerate(zip(self.points, self.spacings, self.errors[name])):
                ratio = self.ratios[name][index - 1] if index else None
                order = self.orders[name][index - 1] if index else None
                rows.append((name, points, spacing, error, ratio, order))
        return rows


def observed_orders(errors, spacings, threshold):
    """Orders ``log(e_coarse/e_fine) / log(h_coarse/h_fine)``; ``saturated`` once both errors are roundoff."""
    orders, ratios = [], []
    for (e0, e1), (h0, h1) in zip(zip(errors, errors[1:]), zip(spacings, spacings[1:])):
        if e0 is None or e1 is None:
            orders.append(None)
            ratios.append(None)
        elif e0 < threshold and e1 < threshold:
            orders.append(SATURATED)
            ratios.append(None)
        elif e1 == 0:
            orders.append(math.inf)
            ratios.append(math.inf)
        else:
            ratios.append(e0 / e1)
            orders.append(math.log(e0 / e1) / math.log(h0 / h1))
    return tuple(orders), tuple(ratios)


def _level(scenario, points, options):
    state = initial_state(scenario, points, options)
    errors = {"scalar_residual": residual_at(state, scenario.residual_time, options=options).max_abs}
    run = flow_run(state, scenario.duration, scenario.cadence, options, keep_states=False, dt=scenario.dt)
    errors["decay_slope_error"] = decay_error(run) if run.mass0 != 0 else None
    errors["min_scalar"] = -min(0.0, min(s.min_scalar for s in run.samples))
    logger.info("convergence level %d points: %s", points, errors)
    return state.grid.spacing, errors


def convergence_study(scenario, levels=None, options=None) -> ConvergenceTable:
    """Rerun ``scenario`` with ``points * 2^i`` nodes for ``i < levels``."""
    options = get_options(options)
    levels = levels or scenario.levels
    if scenario.task not in ("flow-pde", "convergence-study"):
        raise ScenarioError(f"task {scenario.task} is not grid-based")
    if levels < 2:
        raise ScenarioError("a convergence study needs at least two levels")
    points = tuple(scenario.points * 2**level for level in range(levels))
    with concurrent.futures.ThreadPoolExecutor(max_workers=worker_count(options)) as executor:
        results = list(executor.map(lambda p: _level(scenario, p, options), points))
    spacings = tuple(spacing for spacing, _ in results)
    errors, orders, ratios = {}, {}, {}
    for name in results[0][1]:
        errors[name] = tuple(errs[name] for _, errs in results)
        orders[name], ratios[name] = observed_orders(errors[name], spacings, options.saturation_threshold)
    return ConvergenceTable(points, spacings, errors, orders, ratios)
