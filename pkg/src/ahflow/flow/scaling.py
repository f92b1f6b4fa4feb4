"""Flows with curvature radius ``ell``.

If ``g(t)`` solves the ``ell = 1`` flow then ``ell^2 g(t / ell^2)`` solves the flow normalized to
curvature ``-1/ell^2``, so ``m(t; ell) = m0 exp(-(n-2) t / ell^2)``. Each radius is evaluated three
ways: the closed form, the ``ell = 1`` run read at ``t / ell^2``, and a direct run of ``G = ell^2 g``
under ``dG/dt = -2 (Ric + (n-1) G / ell^2)``. On the boundary ODE the direct run uses the system
matrix read off the series curvature of ``G`` and the matrix exponential; on the PDE it steps
the operator that evaluates ``E`` on ``ell^2 g``.
"""
import concurrent.futures
import dataclasses
import logging
from typing import Sequence, Tuple

import numpy as np

from ..errors import FlowException
from ..options import get_options, worker_count
from .fitting import mass_fit
from .kappa import KappaState, curvature_system_matrix, kappa_evolve, sigma_of
from .pde import advance
from .state import FlowState

logger = logging.getLogger(__name__)


def closed_form_mass(m0, n, t, ell=1.0):
    return m0 * np.exp(-(n - 2) * np.asarray(t, dtype=float) / ell**2)


@dataclasses.dataclass(frozen=True)
class ScalingRow:
    ell: float
    t: float
    closed_form: float
    rescaled: float
    direct: float


@dataclasses.dataclass(frozen=True)
class ScalingTable:
    n: int
    m0: float
    backend: str
    rows: Tuple[ScalingRow, ...]

    def at_time(self, t):
        return [row for row in self.rows if np.isclose(row.t, t)]

    def deficit_exponent(self, t=None, column="direct"):
        """``p`` in ``|m(t; ell) - m0| ~ c / ell^p`` from a log-log fit over the radii."""
        t = self.rows[-1].t if t is None else t
        rows = self.at_time(t)
        ells = np.array([row.ell for row in rows])
        deficits = np.abs(np.array([getattr(row, column) for row in rows]) - self.m0)
        if ells.size < 2 or np.any(deficits == 0):
            return None
        slope, _ = np.polyfit(np.log(ells), np.log(deficits), 1)
        return float(-slope)

    def max_disagreement(self):
        """Largest relative gap between the rescaled and the direct run."""
        gaps = [abs(row.direct - row.rescaled) / max(abs(row.rescaled), 1e-300) for row in self.rows]
        return max(gaps, default=0.0)


def _kappa_mass(state):
    return float(sigma_of(state))


def _ode_paths(initial, ell, times, options):
    if initial.m != initial.n:
        raise FlowException("the scaling study follows the order-n coefficient, which needs m = n")
    base = dataclasses.replace(initial, ell=1.0)
    scaled = dataclasses.replace(initial, ell=float(ell))
    matrix = curvature_system_matrix(initial.n, initial.m, ell)
    rescaled, direct = [], []
    for t in times:
        rescaled.append(_kappa_mass(kappa_evolve(base, t / ell**2, options=options)))
        direct.append(_kappa_mass(kappa_evolve(scaled, t, "exact-exponential", options=options, matrix=matrix)))
    return rescaled, direct


def _pde_paths(initial, ell, times, options):
    base = dataclasses.replace(initial, ell=1.0)
    scaled = dataclasses.replace(initial, ell=float(ell))
    rescaled, direct = [], []
    current_base, current_scaled = base, scaled
    for t in times:
        current_base = advance(current_base, t / ell**2 - current_base.t, options)
        current_scaled = advance(current_scaled, t - current_scaled.t, options)
        rescaled.append(mass_fit(current_base, options).mass)
        direct.append(mass_fit(current_scaled, options).mass)
    return rescaled, direct


def parabolic_scaling_run(initial, ells: Sequence[float], times: Sequence[float], options=None):
    """Tabulate ``m(t; ell)`` for a :class:`KappaState` (mass aspect) or a :class:`FlowState`."""
    options = get_options(options)
    ells = [float(ell) for ell in ells]
    times = sorted(float(t) for t in times)
    if any(ell <= 0 for ell in ells):
        raise FlowException("curvature radii must be positive")
    if isinstance(initial, KappaState):
        backend, paths = "ode", _ode_paths
        m0 = _kappa_mass(initial)
    elif isinstance(initial, FlowState):
        backend, paths = "pde", _pde_paths
        m0 = mass_fit(initial, options).mass
    else:
        raise FlowException(f"cannot run a scaling study from {type(initial).__name__}")
    with concurrent.futures.ThreadPoolExecutor(max_workers=worker_count(options)) as executor:
        results = list(executor.map(lambda ell: paths(initial, ell, times, options), ells))
    rows = []
    for ell, (rescaled, direct) in zip(ells, results):
        for t, r, d in zip(times, rescaled, direct):
            rows.append(ScalingRow(ell, t, float(closed_form_mass(m0, initial.n, t, ell)), r, d))
    logger.info("scaling study (%s): %d radii x %d times", backend, len(ells), len(times))
    return ScalingTable(initial.n, m0, backend, tuple(rows))

