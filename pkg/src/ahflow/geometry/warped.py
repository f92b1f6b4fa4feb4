"""Curvature of multiply-warped metrics ``A dx^2 + sum_f F_f g_f``.

Every fibre ``g_f`` is Einstein with ``Ric[g_f] = (d_f - 1) k_f g_f``. The formulas only use
``+ - * /`` and a caller-supplied ``derivative``, so the same code runs on Laurent series and
on numpy arrays.
"""
import dataclasses
from typing import Any, Tuple

import numpy as np


@dataclasses.dataclass(frozen=True)
class WarpedCurvature:
    """Ricci and Einstein quantity; fibre entries are per unit ``g_f``."""

    ricci_radial: Any
    ricci_fibres: Tuple[Any, ...]
    scalar: Any
    einstein_radial: Any
    einstein_fibres: Tuple[Any, ...]
    # d(log A)/dx / 2 and d(log F_f)/dx / 2, reused by Hessians and the flow
    radial_log_derivative: Any
    fibre_log_derivatives: Tuple[Any, ...]

    def einstein_norm_squared(self, radial, factors, fibres):
        """``E_ij E^ij`` with the metric components the curvature came from."""
        total = (self.einstein_radial / radial) * (self.einstein_radial / radial)
        for fibre, factor, value in zip(fibres, factors, self.einstein_fibres):
            total = total + fibre.dim * (value / factor) * (value / factor)
        return total


def warped_curvature(radial, factors, fibres, derivative, ell=1, second_derivative=None):
    """Ricci curvature of ``radial dx^2 + sum factors[f] g_f``.

    ``ell`` is the asymptotic curvature radius entering ``E = Ric + (n-1) g / ell^2``.
    Without ``second_derivative`` second derivatives are ``derivative`` applied twice.
    """
    second_derivative = second_derivative or (lambda values: derivative(derivative(values)))
    n = 1 + sum(f.dim for f in fibres)
    alpha = derivative(radial) / (2 * radial)
    logs = []
    log_primes = []
    for factor in factors:
        first = derivative(factor)
        log = first / (2 * factor)
        logs.append(log)
        log_primes.append(second_derivative(factor) / (2 * factor) - 2 * log * log)
    trace_log = sum(f.dim * log for f, log in zip(fibres, logs))

    ricci_radial = 0
    ricci_fibres = []
    for fibre, factor, log, log_prime in zip(fibres, factors, logs, log_primes):
        ricci_radial = ricci_radial - fibre.dim * (log_prime - alpha * log + log * log)
        bracket = log_prime - alpha * log + log * trace_log
        constant = (fibre.dim - 1) * fibre.curvature
        if isinstance(factor, np.ndarray):
            constant = float(constant)
        ricci_fibres.append(constant - (factor / radial) * bracket)

    scalar = ricci_radial / radial
    for fibre, factor, value in zip(fibres, factors, ricci_fibres):
        scalar = scalar + fibre.dim * (value / factor)

    weight = n - 1
    if ell != 1:
        weight = weight / ell**2
    einstein_radial = ricci_radial + weight * radial
    einstein_fibres = tuple(value + weight * factor for value, factor in zip(ricci_fibres, factors))
    return WarpedCurvature(
        ricci_radial=ricci_radial,
        ricci_fibres=tuple(ricci_fibres),
        scalar=scalar,
        einstein_radial=einstein_radial,
        einstein_fibres=einstein_fibres,
        radial_log_derivative=alpha,
        fibre_log_derivatives=tuple(logs),
    )


def warped_hessian(radial, factors, curvature, derivative, function):
    """Hessian of a radial ``function``: the ``dx dx`` entry and the per-unit-fibre entries."""
    first = derivative(function)
    hess_radial = derivative(first) - curvature.radial_log_derivative * first
    logs = curvature.fibre_log_derivatives
    hess_fibres = tuple((factor / radial) * log * first for factor, log in zip(factors, logs))
    return hess_radial, hess_fibres
