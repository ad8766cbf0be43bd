"""Generating functions, phases, local-lemma bounds and samplers for
1-dependent, 1-hard-core point processes on finite metric spaces."""

from .space import (
    AtomicMeasure,
    FiniteMetricSpace,
    GridRegion,
    RegionSet,
    SizeLimitError,
    SpaceError,
    build_space,
    grid_space,
    growth_bound_K,
    kappa,
    unit_sphere,
)
from .zfun import (
    Phase,
    PhaseLabel,
    ZeroDenominator,
    classify_phase,
    critical_lambda,
    delta_Z,
    hard_sphere_partition,
    mc_estimate_Z,
    z_exact,
    z_ratio,
)
from .cluster import ClusterSeries, log_z_series, penrose_coefficient
from .lll import (
    BoundCertificate,
    bound_value,
    check_euclidean,
    check_inflation,
    check_kp,
    check_symmetric,
    euclidean_alpha,
)
from .sim import (
    BinaryField,
    PointConfiguration,
    construct_zero_phase,
    empirical_stats,
    sample_hard_sphere,
    sample_matern,
    sample_shearer,
    sample_zero_dependent,
    thin_field,
)

__version__ = "0.1.0"

__all__ = [
    "ClusterSeries",
    "log_z_series",
    "penrose_coefficient",
    "AtomicMeasure",
    "FiniteMetricSpace",
    "GridRegion",
    "RegionSet",
    "SizeLimitError",
    "SpaceError",
    "build_space",
    "grid_space",
    "growth_bound_K",
    "kappa",
    "unit_sphere",
    "Phase",
    "PhaseLabel",
    "ZeroDenominator",
    "classify_phase",
    "critical_lambda",
    "delta_Z",
    "hard_sphere_partition",
    "mc_estimate_Z",
    "z_exact",
    "z_ratio",
    "BoundCertificate",
    "bound_value",
    "check_euclidean",
    "check_inflation",
    "check_kp",
    "check_symmetric",
    "euclidean_alpha",
    "BinaryField",
    "PointConfiguration",
    "construct_zero_phase",
    "empirical_stats",
    "sample_hard_sphere",
    "sample_matern",
    "sample_shearer",
    "sample_zero_dependent",
    "thin_field",
]
