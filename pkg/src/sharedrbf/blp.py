"""Best-linear-projection summaries of posterior CATE surfaces.

Each posterior sample's treatment-effect surface tau(x_i) (original outcome
scale) is projected onto [1, x_i] by exact least squares, giving one
coefficient vector per sample; the threshold score s[p, t] is the fraction of
samples whose coefficient for predictor p exceeds t in magnitude.  Slowly
decaying scores flag important predictors.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularDesignWarning
from .model import kernel_matrix

# threshold grids used in reporting: a fine grid for simulation-style
# screening and a short grid for real-data summaries
SIM_THRESHOLDS = tuple(np.round(np.arange(0.1, 2.01, 0.1), 10).tolist())
REAL_THRESHOLDS = (0.0, 0.1, 0.15, 0.2, 0.25, 0.3)


@dataclass
class CateSampleMatrix:
    """B x N matrix of per-sample treatment effects at the design points."""

    values: np.ndarray
    pair: tuple[int, int]

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[0] < 1:
            raise ValueError("need at least one posterior sample")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("treatment-effect samples must be finite")


@dataclass
class BlpDesign:
    """Intercept-augmented design and its least-squares solve."""

    X: np.ndarray
    _chol: tuple

    @staticmethod
    def build(covariates) -> "BlpDesign":
        covariates = np.atleast_2d(np.asarray(covariates, dtype=float))
        X = np.column_stack([np.ones(covariates.shape[0]), covariates])
        Q = X.T @ X
        try:
            L = scipy.linalg.cholesky(Q, lower=True)
        except scipy.linalg.LinAlgError:
            warnings.warn(
                "singular projection design; adding a 1e-10 ridge",
                SingularDesignWarning,
                stacklevel=2,
            )
            L = scipy.linalg.cholesky(Q + 1e-10 * np.eye(Q.shape[0]), lower=True)
        return BlpDesign(X=X, _chol=(L, True))

    def coefficients(self, targets) -> np.ndarray:
        """Least-squares coefficients for each row of targets (B x N)."""
        targets = np.atleast_2d(np.asarray(targets, dtype=float))
        rhs = self.X.T @ targets.T
        return scipy.linalg.cho_solve(self._chol, rhs).T


@dataclass
class BlpSummary:
    """Per-sample projection coefficients and their threshold scores."""

    beta: np.ndarray
    thresholds: np.ndarray
    scores: np.ndarray
    pair: tuple[int, int]
    names: tuple[str, ...]


def posterior_surfaces(chain, X_scaled) -> np.ndarray:
    """B x N x G array of f_g evaluations over all posterior samples."""
    X_scaled = np.atleast_2d(np.asarray(X_scaled, dtype=float))
    out = np.empty((len(chain.samples), X_scaled.shape[0], chain.samples[0].n_groups))
    for b, params in enumerate(chain.samples):
        phi = kernel_matrix(params, X_scaled)
        out[b] = params.alpha + phi @ (params.theta[:, None] * params.gamma)
    return out


def cate_samples_at(chain, X, g: int, g_prime: int) -> CateSampleMatrix:
    """Per-sample treatment effects of g over g_prime at raw covariate rows X,
    on the original outcome scale."""
    if not chain.samples:
        raise ValueError("chain holds no posterior samples")
    G = chain.samples[0].n_groups
    for label in (g, g_prime):
        if not 1 <= label <= G:
            raise ValueError(f"treatment index {label} outside 1..{G}")
    if chain.covariate_transform is not None:
        X_scaled = chain.covariate_transform.apply(X)
    else:
        X_scaled = np.atleast_2d(np.asarray(X, dtype=float))
    scale = 1.0 if chain.outcome_transform is None else chain.outcome_transform.scale
    surfaces = posterior_surfaces(chain, X_scaled)
    values = scale * (surfaces[:, :, g - 1] - surfaces[:, :, g_prime - 1])
    return CateSampleMatrix(values=values, pair=(g, g_prime))


def posterior_cate_samples(chain, dataset, g: int, g_prime: int) -> CateSampleMatrix:
    """Per-sample treatment effects of g over g_prime at the dataset's rows."""
    return cate_samples_at(chain, dataset.X, g, g_prime)


def blp_coefficients(cates: CateSampleMatrix, design: BlpDesign) -> np.ndarray:
    """B x (P+1) matrix of exact per-sample least-squares coefficients."""
    if design.X.shape[0] <= design.X.shape[1]:
        raise ValueError("projection needs more rows than coefficients")
    return design.coefficients(cates.values)


def threshold_scores(beta, thresholds) -> np.ndarray:
    """scores[p, t] = fraction of samples with |beta_p| > thresholds[t]."""
    beta = np.atleast_2d(np.asarray(beta, dtype=float))
    thresholds = np.asarray(thresholds, dtype=float)
    if thresholds.ndim != 1 or np.any(thresholds < 0):
        raise ValueError("thresholds must be a non-negative 1-d grid")
    if np.any(np.diff(thresholds) < 0):
        raise ValueError("thresholds must be sorted ascending")
    return (np.abs(beta)[:, :, None] > thresholds[None, None, :]).mean(axis=0)


def blp_summary(chain, dataset, g: int, g_prime: int, thresholds=SIM_THRESHOLDS) -> BlpSummary:
    """Full projection pipeline for one treatment pair."""
    cates = posterior_cate_samples(chain, dataset, g, g_prime)
    if chain.covariate_transform is not None:
        X_scaled = chain.covariate_transform.apply(dataset.X)
        names = ("intercept",) + chain.covariate_transform.expanded_names()
    else:
        X_scaled = dataset.X
        names = ("intercept",) + dataset.covariate_names()
    design = BlpDesign.build(X_scaled)
    beta = blp_coefficients(cates, design)
    thresholds = np.asarray(thresholds, dtype=float)
    scores = threshold_scores(beta, thresholds)
    return BlpSummary(
        beta=beta, thresholds=thresholds, scores=scores, pair=(g, g_prime), names=names
    )


def write_coefficients_csv(summary: BlpSummary, path) -> None:
    """predictor, mean, and 2.5/50/97.5% sample quantiles, one row each."""
    q = np.percentile(summary.beta, [2.5, 50.0, 97.5], axis=0)
    mean = summary.beta.mean(axis=0)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["predictor", "mean", "q2.5", "q50", "q97.5"])
        for j, name in enumerate(summary.names):
            writer.writerow([name, repr(float(mean[j])), repr(float(q[0, j])),
                             repr(float(q[1, j])), repr(float(q[2, j]))])


def write_scores_csv(summary: BlpSummary, path) -> None:
    """Threshold grid down the rows, predictors across the columns."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", *summary.names])
        for t_idx, t in enumerate(summary.thresholds):
            row = [repr(float(t))]
            row.extend(repr(float(s)) for s in summary.scores[:, t_idx])
            writer.writerow(row)


def blp_report(summary: BlpSummary, coefficients_path, scores_path) -> None:
    """Emit both CSV artifacts for one treatment pair."""
    write_coefficients_csv(summary, coefficients_path)
    write_scores_csv(summary, scores_path)
