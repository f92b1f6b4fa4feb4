import dataclasses
import os
from typing import Tuple


@dataclasses.dataclass(frozen=True)
class Options:
    """Numerical defaults shared by every pipeline.

    Values are immutable; derive variants with :meth:`replace`.
    """

    # series truncation is n + truncation_padding
    truncation_padding: int = 2
    cfl: float = 0.2
    fit_window: Tuple[float, float] = (2.0, 20.0)
    # fitted orders are 1..n + fit_extra_orders
    fit_extra_orders: int = 1
    fit_max_condition: float = 1e12
    grid_points: int = 400
    extrapolation_radii: Tuple[float, ...] = (100.0, 200.0, 400.0, 800.0)
    extrapolation_floor: float = 1e-12
    # sampled metrics: the outer flux radius is grid_flux_scale ** (1/n)
    grid_flux_scale: float = 2.0**30
    flux_fit_degree: int = 4
    # local fits span R (1 +- flux_fit_half_width)
    flux_fit_half_width: float = 0.25
    max_principle_floor: float = 1e-6
    noise_floor_factor: float = 10.0
    decay_tolerance: float = 0.05
    kappa_dt: float = 1e-3
    random_entry_bound: int = 9
    saturation_threshold: float = 1e-12
    threads: int = 0

    def replace(self, **kwargs):
        return dataclasses.replace(self, **kwargs)

    def truncation(self, n):
        return n + self.truncation_padding

    def grid_flux_radii(self, n):
        """Flux radii for a sampled metric: the deviation there is about ``1 / grid_flux_scale`` of the leading term."""
        top = self.grid_flux_scale ** (1.0 / n)
        return tuple(top * fraction for fraction in (0.125, 0.25, 0.5, 1.0))

    def grid_flux_extent(self, n):
        """Outer sampled radius that still contains the fit window of the largest flux radius."""
        return (1.0 + 2.0 * self.flux_fit_half_width) * self.grid_flux_radii(n)[-1]


def _threads_from_env():
    value = os.environ.get("AHFLOW_THREADS", "")
    try:
        return max(int(value), 0)
    except ValueError:
        return 0


OPTIONS = Options()


def get_options(base=None, **kwargs):
    if base is None:
        base = OPTIONS
    if kwargs:
        base = base.replace(**{key: value for key, value in kwargs.items() if value is not None})
    return base


def worker_count(options=None):
    options = get_options(options)
    if options.threads:
        return options.threads
    return _threads_from_env() or min(32, (os.cpu_count() or 1) + 4)
