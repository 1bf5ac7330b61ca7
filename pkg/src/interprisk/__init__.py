"""Stress-testing delta-interpolating regression estimators under
input-perturbation (adversarial) attacks.

The package provides base estimators (local polynomial with rectangular or
singular kernels, k-NN, zero), an interpolation wrapper that pins training
residuals to a chosen level delta, adversarial risk evaluation over clipped
l_p balls, closed-form and Monte-Carlo rate calculations with the associated
regime logic and phase diagrams, and a synthetic benchmark driving all of it
from a CLI.
"""

from .adversarial import (
    RiskEstimate,
    adversarial_risk,
    standard_risk,
    sweep_losses,
    training_error,
)
from .backend import backend_name, get_kernels
from .estimators import (
    FitError,
    KernelSpec,
    KnnEstimator,
    LocalPolyConfig,
    LocalPolyEstimator,
    ZeroEstimator,
    default_bandwidth_grid,
    fit_knn,
    fit_local_polynomial,
    fit_zero,
    select_bandwidth,
)
from .gaussian import norm_pdf, upper_tail, upper_tail_inv
from .geometry import (
    AttackSpec,
    BoxDomain,
    Dataset,
    GridTooLargeError,
    NoiseModel,
    SeededRng,
    clipped_ball_grid,
    neighbor_indices,
    stream_generator,
)
from .interpolate import (
    InterpolationConfig,
    WrappedEstimator,
    max_admissible_tau,
    soft_threshold,
    verify_membership,
    wrap_interpolator,
)
from .rates import (
    MaxMomentEstimate,
    PhaseCell,
    RateParams,
    RateReport,
    RegimeConstants,
    classify_regime,
    curse_of_sample_size_curve,
    expected_max_soft_threshold,
    high_regime_boundary,
    low_regime_boundary,
    mc_interpolation_cost,
    phase_diagram,
    rate_report,
    soft_threshold_second_moment,
    stein_lower_bound,
)
from .experiments import (
    METHODS,
    ExperimentPlan,
    ReplicationRecord,
    SyntheticCase,
    aggregate,
    curse_experiment,
    generate_case,
    make_case,
    median_and_se,
    run_plan,
)

__version__ = "0.1.0"
