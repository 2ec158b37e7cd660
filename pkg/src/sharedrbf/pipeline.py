"""End-to-end fitting: scale, initialize, sample, and summarize."""

from __future__ import annotations

import numpy as np

from .blp import cate_samples_at, posterior_surfaces
from .data import Dataset, fit_covariate_transform, fit_outcome_transform
from .initialization import build_init_plan
from .sampler import PosteriorChain, SamplerConfig, run_chain


def fit_model(dataset: Dataset, config: SamplerConfig) -> PosteriorChain:
    """Fit the shared-neuron network on a raw dataset.

    Transforms are fitted on this data, the initialization pipeline picks the
    neuron budget and starting values, and the full chain runs; the returned
    chain carries the transforms so downstream summaries report on the
    original outcome scale.
    """
    outcome_t = fit_outcome_transform(dataset.y)
    covariate_t = fit_covariate_transform(dataset.X, dataset.column_kinds, dataset.names)
    scaled = Dataset(
        X=covariate_t.apply(dataset.X), y=outcome_t.apply(dataset.y), z=dataset.z
    )
    plan = build_init_plan(scaled, config.seed)
    return run_chain(
        scaled,
        config,
        plan.initial_params(),
        fixed_sets=plan.fixed_sets,
        hyper=plan.hyperparams(),
        outcome_transform=outcome_t,
        covariate_transform=covariate_t,
        init_plan_dict=plan.to_dict(),
    )


def posterior_mean_surfaces(chain: PosteriorChain, X) -> np.ndarray:
    """Posterior-mean outcome surface per treatment (N x G, original scale)."""
    if chain.covariate_transform is not None:
        X_scaled = chain.covariate_transform.apply(X)
    else:
        X_scaled = np.atleast_2d(np.asarray(X, dtype=float))
    mean_scaled = posterior_surfaces(chain, X_scaled).mean(axis=0)
    if chain.outcome_transform is None:
        return mean_scaled
    return chain.outcome_transform.invert(mean_scaled)


def posterior_mean_cate(chain: PosteriorChain, X, g: int, g_prime: int) -> np.ndarray:
    """Posterior-mean treatment effect of g over g_prime (original scale)."""
    return cate_samples_at(chain, X, g, g_prime).values.mean(axis=0)


def predict_cate_summary(chain: PosteriorChain, X, g: int, g_prime: int) -> dict:
    """Row-wise posterior mean and central 95% interval of the effect."""
    values = cate_samples_at(chain, X, g, g_prime).values
    q = np.percentile(values, [2.5, 97.5], axis=0)
    return {"mean": values.mean(axis=0), "q2.5": q[0], "q97.5": q[1]}
