"""Individualized multi-treatment response curves via a Bayesian RBF network
with shared hidden neurons, with best-linear-projection inference and a
reproducible simulation harness."""

__version__ = "0.1.0"

from .data import (
    ColumnKind,
    CovariateTransform,
    Dataset,
    OutcomeTransform,
    fit_covariate_transform,
    fit_outcome_transform,
    load_dataset,
)
from .model import (
    Hyperparams,
    RbfParams,
    cate,
    design_matrix,
    evaluate_outcome,
    log_likelihood,
    rbf_kernel,
)
from .sampler import (
    PosteriorChain,
    SamplerConfig,
    load_chain,
    run_chain,
    save_chain,
)
from .initialization import (
    InitPlan,
    RvmFit,
    build_fixed_sets,
    build_init_plan,
    ewkm,
    estimate_sigma_hat,
    fit_rvm,
    init_bandwidth,
    init_theta_ls,
    jitter_centers,
    select_k,
)
from .blp import (
    BlpDesign,
    BlpSummary,
    CateSampleMatrix,
    blp_coefficients,
    blp_summary,
    posterior_cate_samples,
    threshold_scores,
)
from .pipeline import fit_model, posterior_mean_cate, posterior_mean_surfaces, predict_cate_summary
from .simharness import (
    SimConfig,
    SimReport,
    friedman_components,
    gen_from_covariates,
    gen_setting1,
    mse,
    outcome_functions,
    run_replications,
)

__all__ = [
    "__version__",
    "ColumnKind", "CovariateTransform", "Dataset", "OutcomeTransform",
    "fit_covariate_transform", "fit_outcome_transform", "load_dataset",
    "Hyperparams", "RbfParams", "cate", "design_matrix", "evaluate_outcome",
    "log_likelihood", "rbf_kernel",
    "PosteriorChain", "SamplerConfig", "load_chain", "run_chain", "save_chain",
    "InitPlan", "RvmFit", "build_fixed_sets", "build_init_plan", "ewkm",
    "estimate_sigma_hat", "fit_rvm", "init_bandwidth", "init_theta_ls",
    "jitter_centers", "select_k",
    "BlpDesign", "BlpSummary", "CateSampleMatrix", "blp_coefficients",
    "blp_summary", "posterior_cate_samples", "threshold_scores",
    "fit_model", "posterior_mean_cate", "posterior_mean_surfaces", "predict_cate_summary",
    "SimConfig", "SimReport", "friedman_components", "gen_from_covariates",
    "gen_setting1", "mse", "outcome_functions", "run_replications",
]
