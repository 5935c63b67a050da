"""debiaslr: debiased estimates and confidence intervals for constrained
and regularized linear regression.

The pipeline: fit a pilot (constrained least squares over a cone,
constrained lasso, SLOPE, or square-root SLOPE), select a nearby simple
point v with a small tangent cone, solve a cone-constrained program for a
projection direction on the held-out half of the data, and report a
debiased value with a (1 - alpha) interval.
"""

__version__ = "0.1.0"

from .cones import (
    ConstraintModel,
    TangentConeAt,
    pieces_of,
    project_constraint,
    project_l1_ball,
    project_monotone,
    project_monotone_pieces,
    project_negative_cone,
    project_normal_l1ball,
    project_positive_monotone,
    project_tangent_cone,
    tangent_cone_at,
    width_bound,
)
from .data import (
    CovarianceSpec,
    Dataset,
    NoiseSpec,
    SplitDataset,
    generate_dataset,
    gram_matrix,
    load_dataset_csv,
    make_covariance,
    save_dataset_csv,
    split_sample,
)
from .engine import (
    DebiasOutput,
    DeltaDiagnostic,
    EtaConfig,
    EtaInfeasibleError,
    EtaResult,
    PsiEval,
    debias_known_sigma,
    debias_output,
    debias_target,
    delta_diagnostic,
    psi,
    solve_eta,
    solve_eta_subgaussian,
)
from .estimators import (
    ConvergenceWarning,
    DegenerateFitError,
    FitConfig,
    SlopeLambdas,
    fit_constrained_lasso,
    fit_constrained_ls,
    fit_slope,
    fit_sqrt_slope,
    prox_sorted_l1,
    slope_lambda,
)
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    build_beta_star,
    emit_report,
    run_experiment,
)
from .intervals import (
    ConfidenceInterval,
    confidence_interval,
    confidence_interval_subgaussian,
    estimate_sigma,
)
from .pilot import (
    PilotSelection,
    choose_C_slope,
    l1_sparse_projection,
    select_v_l1,
    select_v_monotone,
    select_v_nonneg,
    select_v_positive_monotone,
    select_v_slope,
    width_floor,
)
