"""Spatial statistics against complete spatial randomness.

Ripley K/L/H estimation for point patterns and voxel grids, clustering-index
tests with Gamma / weighted-Poisson-sum / permutation / resampling CSR nulls,
synthetic scenario generators, and profile-correlation analysis.
"""

from .analysis import (
    PairingReport,
    Profile,
    build_profiles,
    mann_whitney_one_tailed,
    pair_zscore,
    pairing_report,
    pearson,
)
from .cluster_test import (
    ClusterTestResult,
    QuantileBands,
    TestConfig,
    clustering_index,
    degree_of_clustering,
    quantile_bands,
    run_test,
)
from .errors import CsrStatsError, InputError, NumericalError
from .grids import (
    PointSample,
    VoxelGrid,
    VoxelizeResult,
    Window,
    project_to_2d,
    total_and_intensity,
    voxelize,
)
from .nulls import (
    DEFAULT_WEIGHTS,
    GammaParams,
    NullModelSpec,
    PoissonSumParams,
    enumerate_decompositions,
    fit_gamma_mle,
    fit_poisson_sum_em,
    permute_grid,
    poisson_sum_loglik,
    resample_empirical,
    resample_reference,
    round_to_representable,
    sample_binomial_points,
    sample_dirichlet_conditioned,
    sample_gamma_grid,
    sample_poisson_points,
    sample_poisson_sum_grid,
)
from .ripley import (
    RipleyCurves,
    ball_volume,
    k_grid,
    k_points,
    k_points_edge_corrected,
    l_h_from_k,
    window_overlap,
)
from .rng import derive_seed, make_generator
from .synth import (
    ScenarioItem,
    ShotNoiseParams,
    gen_poisson_grid,
    gen_scenario_suite,
    gen_shot_noise,
)

__version__ = "0.1.0"
