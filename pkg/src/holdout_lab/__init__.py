"""Expected holdout error for rotationally invariant covariance estimation.

The package covers the full pipeline: rotationally invariant noise laws and
their moment ratios, the white inverse-Wishart population ensemble,
orthogonal Weingarten calculus on pair partitions, the covariance estimators
(sample, shrinkage, oracle, holdout, k-fold, eigenvalue cleaning), the
closed-form expected-error curves with their optimal train-test split, and a
deterministic Monte Carlo harness with BCa confidence intervals.
"""

__version__ = "0.1.0"

from .errors import (
    DegenerateSystem,
    DomainError,
    InfiniteMoment,
    NoInteriorOptimum,
    NotPositiveSemidefinite,
    UnsupportedLaw,
)
from .estimators import (
    QuadCoeffs,
    SplitPlan,
    holdout_estimator,
    kfold_estimator,
    ledoit_peche_rie,
    linear_shrink,
    optimal_linear_r,
    oracle_estimator,
    quadratic_coeffs,
    sample_covariance,
)
from .linalg import (
    SymmetricSpectrum,
    eigh,
    frobenius_error,
    normalized_trace,
    spd_sqrt,
)
from .noise import (
    GammaMoments,
    RadialLaw,
    gamma_moments,
    limit_gamma_moments,
    parse_radial,
    raw_moment,
    sample_noise_matrix,
)
from .population import (
    InverseWishartModel,
    SigmaMoments,
    sample_inverse_wishart,
    sigma_cross_moment_e2s,
    sigma_moments,
)
from .simulate import (
    ErrorReport,
    StudyRanges,
    TrialConfig,
    bca_interval,
    child_seed,
    default_t_out_grid,
    random_param_study,
    run_holdout_trial,
    sweep_k,
)
from .theory import (
    CurvePoint,
    ErrorCurve,
    error_curve,
    holdout_error_general,
    holdout_error_linear,
    holdout_error_quadratic,
    moment_e2,
    moment_e3,
    moment_e4,
    optimal_k_asymptotic,
    optimal_k_exact,
    oracle_sq_linear,
    q_in_eff,
)
from .weingarten import (
    PairPartition,
    WeingartenTable,
    enumerate_pair_partitions,
    gram_matrix,
    joint_moment_order4,
    loop_count,
    weingarten_matrix,
    weingarten_table,
)
