"""The linear flow of the order-``m`` boundary coefficient tensor.

Under the normalized flow ``dg/dt = -2 (Ric + (n-1) g / ell^2)`` the leading coefficient
``kappa`` of ``g~ = dx^2 + g_(0) + x^m kappa / m`` obeys ``d kappa/dt = A kappa``, where ``A``
collects the ``x^(m-2)`` coefficients of the Einstein quantity. Entries of ``kappa`` are
flattened row-major: component ``(i, j)`` sits at ``i * n + j``.
"""
import dataclasses
import functools
import logging
from fractions import Fraction
from typing import Any, Tuple

import numpy as np
import scipy.linalg

from ..errors import ChartError, FlowException
from ..geometry.charts import scale_matrix
from ..geometry.checks import ResidualReport
from ..geometry.curvature import raw_curvature
from ..geometry.models import build_expansion_metric, kappa_matrix
from ..options import get_options
from .integrate import rk4_step, step_count

logger = logging.getLogger(__name__)

METHODS = ("rk4", "exact-exponential")


def _check_orders(n, m):
    if n < 3:
        raise ChartError(f"manifold dimension must be at least 3, got {n}")
    if not 1 <= m <= n:
        raise ChartError(f"expansion order m must satisfy 1 <= m <= n = {n}, got {m}")


@dataclasses.dataclass(frozen=True)
class KappaState:
    """Coefficient tensor ``kappa`` at flow time ``t``; exact until it is integrated numerically."""

    n: int
    m: int
    kappa: Tuple[Tuple[Any, ...], ...]
    t: float = 0.0
    ell: float = 1.0

    def __post_init__(self):
        _check_orders(self.n, self.m)
        if self.ell <= 0:
            raise ChartError(f"curvature radius must be positive, got {self.ell}")
        rows = tuple(tuple(row) for row in self.kappa)
        if any(isinstance(v, float) for row in rows for v in row):
            values = np.array(rows, dtype=float)
            if values.shape != (self.n, self.n):
                raise ChartError(f"coefficient tensor must be {self.n}x{self.n}")
            if not np.array_equal(values, values.T):
                raise ChartError("coefficient tensor is not symmetric")
            object.__setattr__(self, "kappa", tuple(tuple(float(v) for v in row) for row in values))
        else:
            object.__setattr__(self, "kappa", kappa_matrix(rows, self.n))

    @classmethod
    def from_vector(cls, n, m, vector, t=0.0, ell=1.0):
        values = np.asarray(vector, dtype=float).reshape(n, n)
        # roundoff can break symmetry by an ulp; the flow preserves it exactly
        values = (values + values.T) / 2
        return cls(n, m, tuple(tuple(float(v) for v in row) for row in values), t, ell)

    @property
    def vector(self):
        return np.array([float(v) for row in self.kappa for v in row])

    @property
    def is_exact(self):
        return isinstance(self.kappa[0][0], Fraction)


def system_matrix(n, m, ell=1):
    """The ``n^2 x n^2`` matrix ``A`` as exact rationals (scaled by ``1/ell^2``).

    * ``d kappa_11/dt = (m-2)(n-1) kappa_11 + m(m-2) tr(kappa_AB)``
    * ``d kappa_1A/dt = 0``
    * ``d kappa_AB/dt = -(2n-2-m) kappa_11 delta_AB - m delta_AB tr(kappa_CD) - m(n-m-1) kappa_AB``
    """
    _check_orders(n, m)
    scale = 1 / Fraction(ell) ** 2
    size = n * n
    matrix = [[Fraction(0)] * size for _ in range(size)]
    origin = 0
    matrix[origin][origin] = Fraction((m - 2) * (n - 1))
    for c in range(1, n):
        matrix[origin][c * n + c] = Fraction(m * (m - 2))
    for a in range(1, n):
        for b in range(1, n):
            row = a * n + b
            if a == b:
                matrix[row][origin] = -Fraction(2 * n - 2 - m)
                for c in range(1, n):
                    matrix[row][c * n + c] -= m
            matrix[row][row] -= m * (n - m - 1)
    return tuple(tuple(entry * scale for entry in row) for row in matrix)


@functools.lru_cache(maxsize=None)
def curvature_system_matrix(n, m, ell=1):
    """``A`` for curvature radius ``ell`` read off the series curvature of ``G = ell^2 g``.

    Column ``(i, j)`` is the response ``-2m [E]_(x^(m-2)) / ell^2`` of ``E = Ric + (n-1) G / ell^2``
    to the symmetric unit tensor on ``(i, j)``, split evenly between ``(i, j)`` and ``(j, i)``.
    Only products with symmetric tensors are meaningful; those agree with :func:`system_matrix`.
    """
    _check_orders(n, m)
    ell = Fraction(ell)
    size = n * n
    matrix = [[Fraction(0)] * size for _ in range(size)]
    for i in range(n):
        for j in range(i, n):
            unit = [[Fraction(0)] * n for _ in range(n)]
            unit[i][j] = unit[j][i] = Fraction(1)
            metric = build_expansion_metric(n, m, unit)
            einstein = raw_curvature(scale_matrix(metric.physical(), ell**2), ell=ell).einstein
            weight = Fraction(1) if i == j else Fraction(1, 2)
            for k in range(n):
                for l in range(n):
                    rate = -2 * m * einstein[k][l].coefficient(m - 2) / ell**2
                    matrix[k * n + l][i * n + j] = weight * rate
                    matrix[k * n + l][j * n + i] = weight * rate
    logger.debug("curvature system matrix for n=%d m=%d ell=%s", n, m, ell)
    return tuple(tuple(row) for row in matrix)


def sigma_vector(n):
    """Coefficients of ``sigma = tr(kappa_AB) + (n-1)/n kappa_11`` on the flattened tensor."""
    weights = [Fraction(0)] * (n * n)
    weights[0] = Fraction(n - 1, n)
    for c in range(1, n):
        weights[c * n + c] = Fraction(1)
    return tuple(weights)


def sigma_of(state):
    """The mass aspect of a homogeneous order-``n`` state."""
    kappa = state.kappa
    n = state.n
    weight = Fraction(n - 1, n) if state.is_exact else (n - 1) / n
    return sum(kappa[c][c] for c in range(1, n)) + weight * kappa[0][0]


def sigma_eigen_check(n, ell=1):
    """Check ``sigma^T A = -(n-2)/ell^2 sigma^T`` for the order-``n`` system."""
    matrix = system_matrix(n, n, ell)
    weights = sigma_vector(n)
    rate = -Fraction(n - 2) / Fraction(ell) ** 2
    residuals = {}
    for col in range(n * n):
        contracted = sum(weights[row] * matrix[row][col] for row in range(n * n))
        i, j = divmod(col, n)
        residuals[f"sigma A[{i + 1},{j + 1}]"] = contracted - rate * weights[col]
    return ResidualReport("sigma-eigen", {"n": n, "ell": ell}, residuals)


def kappa_rhs(state):
    """``A kappa`` for the state's ``(n, m, ell)``; exact when the state is."""
    matrix = system_matrix(state.n, state.m, state.ell)
    n = state.n
    flat = [v for row in state.kappa for v in row]
    values = [sum(matrix[row][col] * flat[col] for col in range(n * n) if flat[col]) for row in range(n * n)]
    if not state.is_exact:
        values = [float(v) for v in values]
    return tuple(tuple(values[i * n : (i + 1) * n]) for i in range(n))


def _float_matrix(n, m, ell):
    return np.array(system_matrix(n, m, ell), dtype=float)


def kappa_evolve(state, duration, method="rk4", dt=None, options=None, matrix=None):
    """Integrate ``d kappa/dt = A kappa`` over ``duration``; ``matrix`` overrides the closed-form ``A``.

    ``rk4`` takes equal steps no longer than ``dt`` (``options.kappa_dt`` by default);
    ``exact-exponential`` applies ``expm(A duration)`` as the reference solution.
    """
    if method not in METHODS:
        raise FlowException(f"unknown integration method {method!r}; expected one of {', '.join(METHODS)}")
    options = get_options(options)
    matrix = _float_matrix(state.n, state.m, state.ell) if matrix is None else np.asarray(matrix, dtype=float)
    vector = state.vector
    if method == "exact-exponential":
        result = scipy.linalg.expm(matrix * duration) @ vector
    else:
        steps = step_count(duration, dt or options.kappa_dt)
        result = vector
        if steps:
            h = duration / steps
            for _ in range(steps):
                result = rk4_step(matrix.dot, result, h)
        logger.debug("kappa rk4: %d steps of %.3g", steps, duration / steps if steps else 0.0)
    return KappaState.from_vector(state.n, state.m, result, state.t + duration, state.ell)


def kappa_trajectory(state, duration, samples, method="rk4", dt=None, options=None):
    """States at ``samples + 1`` equally spaced times on ``[t, t + duration]``."""
    if samples < 1:
        raise FlowException(f"a trajectory needs at least one interval, got {samples}")
    states = [state]
    interval = duration / samples
    current = state
    for _ in range(samples):
        current = kappa_evolve(current, interval, method, dt, options)
        states.append(current)
    return states


def predicted_sigma(sigma0, n, t, ell=1.0):
    """``sigma0 exp(-(n-2) t / ell^2)``."""
    return sigma0 * np.exp(-(n - 2) * t / ell**2)
