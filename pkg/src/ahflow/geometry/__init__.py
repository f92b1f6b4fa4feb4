from .charts import (
    Fibre,
    GridMetric,
    RadialChart,
    SeriesMetric,
    WarpedMetric,
    identity_matrix,
    matrix_inverse,
    sphere_fibres,
    torus_fibres,
)
from .checks import ResidualReport, expansion_coefficient_check, gauss_codazzi_check
from .curvature import SeriesCurvature, conformal_ricci, curvature_series, raw_curvature, riemann_component
from .grid import GridCurvature, curvature_grid
from .models import (
    build_expansion_metric,
    build_geon,
    build_geon_series,
    build_perturbed,
    build_rotational_metric,
    geon_bolt,
    geon_compactified,
    hyperbolic_grid,
    hyperbolic_model,
    kappa_matrix,
    random_kappa,
)
from .warped import WarpedCurvature, warped_curvature

__all__ = [
    "Fibre",
    "GridCurvature",
    "GridMetric",
    "RadialChart",
    "ResidualReport",
    "SeriesCurvature",
    "SeriesMetric",
    "WarpedCurvature",
    "WarpedMetric",
    "build_expansion_metric",
    "build_geon",
    "build_geon_series",
    "build_perturbed",
    "build_rotational_metric",
    "conformal_ricci",
    "curvature_grid",
    "curvature_series",
    "expansion_coefficient_check",
    "gauss_codazzi_check",
    "geon_bolt",
    "geon_compactified",
    "hyperbolic_grid",
    "hyperbolic_model",
    "identity_matrix",
    "kappa_matrix",
    "matrix_inverse",
    "random_kappa",
    "raw_curvature",
    "riemann_component",
    "sphere_fibres",
    "torus_fibres",
    "warped_curvature",
]
