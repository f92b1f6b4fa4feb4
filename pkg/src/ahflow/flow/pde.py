"""Method-of-lines integration of the normalized Ricci-DeTurck flow for radial torus metrics.

A state holds ``g`` normalized to curvature ``-1``. The operator evaluates the flow of
``G = ell^2 g``, ``dG/dt = -2 E + L_X G`` with ``E = Ric + (n-1) G / ell^2``, and returns
``dg/dt = ell^-2 dG/dt``. In compactified components every term stays finite at ``x = 0``:

* ``x^2 E_xx = -x^2 sum d (lam' - alpha lam + lam^2) - x sum d (alpha - lam) + (n-1)(a/ell^2 - 1)``
* ``x^2 E_f = (d-1) k x^2 - (phi/a) [x^2 (lam' - alpha lam + lam Lam) + x (alpha - (n-2) lam - Lam)]
  + (n-1) phi (a/ell^2 - 1)/a``
* ``x^2 (L_X g)_xx = 2a (X' + X (alpha - 1/x))`` and ``x^2 (L_X g)_f = 2 phi X (lam - 1/x)``
"""
import dataclasses
import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..errors import FlowException, StabilityError
from ..options import get_options
from .deturck import compactified_field, complete_field, extended_field, radial_fields
from .fitting import decay_slope, mass_fit, noise_floor, rate_fit
from .integrate import rk4_step, step_count

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class EinsteinFields:
    """``x^2 E`` components, ``E = R + n(n-1)`` and ``|E|^2`` at the interior nodes."""

    radial: np.ndarray
    fibres: Tuple[np.ndarray, ...]
    scalar: np.ndarray
    norm_squared: np.ndarray


def einstein_fields(fields, fibres, n, ell=1.0):
    x = fields.x
    a = fields.a
    alpha = fields.alpha
    trace = fields.trace
    normalized = a / ell**2 - 1.0
    radial = (n - 1) * normalized
    fibre_values = []
    for fibre, phi, lam, lam_prime in zip(fibres, fields.phis, fields.lams, fields.lam_primes):
        radial = radial - fibre.dim * (x * x * (lam_prime - alpha * lam + lam * lam) + x * (alpha - lam))
        bracket = x * x * (lam_prime - alpha * lam + lam * trace) + x * (alpha - (n - 2) * lam - trace)
        value = (n - 1) * phi * normalized / a - (phi / a) * bracket
        if fibre.curvature:
            value = value + (fibre.dim - 1) * float(fibre.curvature) * x * x
        fibre_values.append(value)
    scalar = radial / a
    norm_squared = scalar * scalar
    for fibre, phi, value in zip(fibres, fields.phis, fibre_values):
        mixed = value / phi
        scalar = scalar + fibre.dim * mixed
        norm_squared = norm_squared + fibre.dim * mixed * mixed
    return EinsteinFields(radial, tuple(fibre_values), scalar, norm_squared)


class RicciDeTurckOperator:
    """Right-hand side of the flow on the packed interior unknowns of a fixed template state."""

    def __init__(self, state):
        self.template = state
        self.grid = state.grid
        self.fibres = state.fibres
        self.n = state.n
        self.ell = state.ell
        self.square = state.ell**2
        a0, phis0 = state.reference
        phis0 = tuple(self.square * p for p in phis0)
        self.reference = radial_fields(self.grid, self.square * a0, phis0, self.fibres)

    def unpack(self, vector):
        return self.template.with_vector(vector, self.template.t)

    def evaluate(self, state):
        """``(da/dt, dphi/dt, fields, einstein, X)`` at the interior nodes; fields and ``E`` belong to ``ell^2 g``."""
        phis = tuple(self.square * phi for phi in state.phis)
        fields = radial_fields(self.grid, self.square * state.a, phis, self.fibres)
        einstein = einstein_fields(fields, self.fibres, self.n, self.ell)
        field = compactified_field(fields, self.reference, self.fibres)
        nodes = complete_field(self.grid, field)
        slope = self.grid.first_derivative(extended_field(self.grid, nodes))
        x = fields.x
        da = -2.0 * einstein.radial + 2.0 * fields.a * (slope + field * (fields.alpha - 1.0 / x))
        dphis = tuple(
            -2.0 * value + 2.0 * phi * field * (lam - 1.0 / x)
            for value, phi, lam in zip(einstein.fibres, fields.phis, fields.lams)
        )
        return da / self.square, tuple(d / self.square for d in dphis), fields, einstein, field

    def __call__(self, vector):
        da, dphis, *_ = self.evaluate(self.unpack(vector))
        return np.concatenate((da,) + dphis)


def einstein_scalar(state):
    """``E = R + n(n-1)`` at every node; zero at ``x = 0``."""
    fields = radial_fields(state.grid, state.a, state.phis, state.fibres)
    values = np.zeros_like(state.x)
    values[state.grid.interior] = einstein_fields(fields, state.fibres, state.n).scalar
    if not state.grid.has_ghost:
        values[-1] = np.nan
    return values


def stable_time_step(state, options=None):
    """``C min(dx^2 a / x^2)`` over the interior, times ``ell^2``."""
    options = get_options(options)
    interior = state.grid.interior
    x = state.x[interior]
    dx = state.grid.local_spacing()
    limit = np.min(dx * dx * state.a[interior] / (x * x))
    return float(options.cfl * limit * state.ell**2)


def _check_state(state):
    values = [state.a] + list(state.phis)
    for name, array in zip(["a"] + [f.name for f in state.fibres], values):
        interior = array[state.grid.interior]
        if not np.all(np.isfinite(interior)) or np.any(interior <= 0):
            bad = int(np.argmax(~np.isfinite(interior) | (interior <= 0))) + state.grid.interior.start
            message = f"component {name} lost positivity at node {bad} (x={state.x[bad]:.6g}) at t={state.t:.6g}"
            logger.error("flow aborted: %s", message)
            raise StabilityError(message)


def rdtf_step(state, dt, operator=None):
    """One rk4 step; boundary nodes are untouched."""
    operator = operator or RicciDeTurckOperator(state)
    with np.errstate(all="ignore"):
        vector = rk4_step(operator, state.vector(), dt)
    advanced = state.with_vector(vector, state.t + dt)
    _check_state(advanced)
    return advanced


def advance(state, duration, options=None, dt=None):
    """Advance by ``duration`` with equal steps no longer than the stable step."""
    options = get_options(options)
    max_dt = dt or stable_time_step(state, options)
    steps = step_count(duration, max_dt)
    if not steps:
        return state
    h = duration / steps
    operator = RicciDeTurckOperator(state)
    vector = state.vector()
    with np.errstate(all="ignore"):
        for _ in range(steps):
            vector = rk4_step(operator, vector, h)
    advanced = state.with_vector(vector, state.t + duration)
    _check_state(advanced)
    return advanced


@dataclasses.dataclass(frozen=True, eq=False)
class FlowSample:
    t: float
    state: Any
    fit: Any
    max_einstein: float
    min_scalar: float


@dataclasses.dataclass(frozen=True, eq=False)
class FlowRun:
    """Samples of a flow; ``mass0`` is the fitted mass at the first sample."""

    samples: Tuple[FlowSample, ...]
    n: int
    ell: float
    metadata: Dict[str, Any] = dataclasses.field(default_factory=dict)

    @property
    def times(self):
        return np.array([s.t for s in self.samples])

    @property
    def masses(self):
        return np.array([s.fit.mass for s in self.samples])

    @property
    def mass0(self):
        return self.samples[0].fit.mass

    def predicted(self, t=None):
        t = self.times if t is None else np.asarray(t, dtype=float)
        return self.mass0 * np.exp(-(self.n - 2) * t / self.ell**2)

    def decay_slope(self):
        """Least-squares slope of ``log|m(t)|``."""
        return decay_slope(self.times, self.masses)

    def rows(self) -> List[Tuple[float, ...]]:
        """``t, mass_fitted, mass_predicted, max|E|, min(R + n(n-1)), condition``."""
        predicted = self.predicted()
        return [
            (s.t, s.fit.mass, p, s.max_einstein, s.min_scalar, s.fit.condition)
            for s, p in zip(self.samples, predicted)
        ]


def _sample(state, options):
    fields = radial_fields(state.grid, state.a, state.phis, state.fibres)
    einstein = einstein_fields(fields, state.fibres, state.n)
    fit = mass_fit(state, options)
    return FlowSample(
        t=state.t,
        state=state,
        fit=fit,
        max_einstein=float(np.max(np.sqrt(einstein.norm_squared))),
        min_scalar=float(np.min(einstein.scalar)),
    )


def flow_run(state, duration, cadence, options=None, keep_states=True, dt=None):
    """Flow ``state`` for ``duration``, fitting the mass at ``cadence + 1`` equally spaced times."""
    options = get_options(options)
    if cadence < 1:
        raise FlowException(f"a flow run needs at least one output interval, got {cadence}")
    interval = duration / cadence
    samples = [_sample(state, options)]
    current = state
    for index in range(cadence):
        current = advance(current, interval, options, dt)
        sample = _sample(current, options)
        if not keep_states and index < cadence - 1:
            sample = dataclasses.replace(sample, state=None)
        samples.append(sample)
        logger.info(
            "flow t=%.4f mass=%.10g max|E|=%.3e min E=%.3e",
            sample.t,
            sample.fit.mass,
            sample.max_einstein,
            sample.min_scalar,
        )
    metadata = {"points": state.grid.points, "boundary": state.grid.boundary}
    metadata["dt"] = dt or stable_time_step(state, options)
    return FlowRun(tuple(samples), state.n, state.ell, metadata=metadata)


def step_history(state, steps, dt=None, options=None) -> List[Any]:
    """``steps + 1`` consecutive states a fixed step apart."""
    dt = dt or stable_time_step(state, options)
    operator = RicciDeTurckOperator(state)
    history = [state]
    for _ in range(steps):
        history.append(rdtf_step(history[-1], dt, operator))
    return history


def tolerance_from_initial(state, options=None) -> float:
    """``max(floor, 2 max|E_h(0)|)``: the discretization slack of ``R + n(n-1)`` at ``t = 0``."""
    options = get_options(options)
    values = einstein_scalar(state)
    finite = values[np.isfinite(values)]
    return float(max(options.max_principle_floor, 2.0 * np.max(np.abs(finite))))


def max_principle_margin(run, tolerance) -> Optional[float]:
    """Smallest ``min E + tolerance`` over the run; negative means the lower bound failed."""
    if not run.samples:
        return None
    return float(min(s.min_scalar for s in run.samples) + tolerance)


def lower_order_leak(state, options=None):
    """Rate at which the discrete right-hand side feeds orders below ``n`` in the fit window."""
    da, dphis, *_ = RicciDeTurckOperator(state).evaluate(state)
    fits = rate_fit(state, (da,) + dphis, options)
    return max(fit.magnitude(p) for fit in fits for p in range(1, state.n))


def lower_order_budget(initial_fit, options=None):
    """``noise_floor_factor`` times the noise floor of the initial fit."""
    options = get_options(options)
    return options.noise_floor_factor * noise_floor(initial_fit)
