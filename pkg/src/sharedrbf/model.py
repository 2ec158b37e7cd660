"""Shared-neuron RBF network: parameter state, evaluation, and likelihood.

Each treatment g has an outcome surface

    f_g(x) = alpha + sum_k gamma[k, g] * theta[k] * exp(-||x - mu[:, k]||^2 / b[k]^2)

built from one common pool of K radial basis neurons; the binary gamma matrix
selects which neurons enter which treatment's surface.  The conditional
average treatment effect of g over g' at x is f_g(x) - f_g'(x), reported on
the original outcome scale via the affine outcome transform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import OutcomeTransform


@dataclass
class RbfParams:
    """Full parameter state of the network.

    gamma: K x G binary inclusion matrix; mu: P x K centers (columns are
    neurons); theta: length-K coefficients; alpha: shared intercept;
    sigma: error standard deviation; p: length-G inclusion probabilities;
    b: length-K kernel bandwidths.  Treated as an immutable value; the
    sampler works on copies.
    """

    gamma: np.ndarray
    mu: np.ndarray
    theta: np.ndarray
    alpha: float
    sigma: float
    p: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=np.int8)
        self.mu = np.asarray(self.mu, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float).ravel()
        self.p = np.asarray(self.p, dtype=float).ravel()
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.alpha = float(self.alpha)
        self.sigma = float(self.sigma)
        self.validate()

    def validate(self):
        K, G = self.gamma.shape
        if self.mu.ndim != 2 or self.mu.shape[1] != K:
            raise ValueError("mu must be P x K")
        if self.theta.shape != (K,) or self.b.shape != (K,):
            raise ValueError("theta and b must have length K")
        if self.p.shape != (G,):
            raise ValueError("p must have length G")
        if not np.all((self.gamma == 0) | (self.gamma == 1)):
            raise ValueError("gamma entries must be 0/1")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not np.all(self.b > 0):
            raise ValueError("bandwidths must be positive")
        if not np.all((self.p > 0) & (self.p < 1)):
            raise ValueError("inclusion probabilities must lie in (0, 1)")

    @property
    def n_neurons(self) -> int:
        return self.gamma.shape[0]

    @property
    def n_groups(self) -> int:
        return self.gamma.shape[1]

    @property
    def n_covariates(self) -> int:
        return self.mu.shape[0]

    def copy(self) -> "RbfParams":
        return RbfParams(
            gamma=self.gamma.copy(),
            mu=self.mu.copy(),
            theta=self.theta.copy(),
            alpha=self.alpha,
            sigma=self.sigma,
            p=self.p.copy(),
            b=self.b.copy(),
        )

    def to_dict(self) -> dict:
        return {
            "K": int(self.n_neurons),
            "G": int(self.n_groups),
            "P": int(self.n_covariates),
            "gamma": self.gamma.astype(int).tolist(),
            "mu": self.mu.tolist(),
            "theta": self.theta.tolist(),
            "alpha": float(self.alpha),
            "sigma": float(self.sigma),
            "p": self.p.tolist(),
            "b": self.b.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "RbfParams":
        return RbfParams(
            gamma=np.array(d["gamma"], dtype=np.int8),
            mu=np.array(d["mu"], dtype=float),
            theta=np.array(d["theta"], dtype=float),
            alpha=d["alpha"],
            sigma=d["sigma"],
            p=np.array(d["p"], dtype=float),
            b=np.array(d["b"], dtype=float),
        )


@dataclass
class Hyperparams:
    """Prior scales: sigma_mu for centers, sigma_d for intercept/coefficients,
    Beta(c, d) for inclusion probabilities, half-Cauchy scale sigma_hat for
    the error sd.  sigma_d is recalibrated during burn-in."""

    sigma_mu: float = 1.0
    sigma_d: float = 0.25
    c: float = 1.0
    d: float = 1.0
    sigma_hat: float = 1.0

    def __post_init__(self):
        for name in ("sigma_mu", "sigma_d", "c", "d", "sigma_hat"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def copy(self) -> "Hyperparams":
        return Hyperparams(self.sigma_mu, self.sigma_d, self.c, self.d, self.sigma_hat)

    def to_dict(self) -> dict:
        return {
            "sigma_mu": self.sigma_mu,
            "sigma_d": self.sigma_d,
            "c": self.c,
            "d": self.d,
            "sigma_hat": self.sigma_hat,
        }

    @staticmethod
    def from_dict(d: dict) -> "Hyperparams":
        return Hyperparams(**d)


def kernel_matrix(params: RbfParams, X: np.ndarray) -> np.ndarray:
    """N x K matrix of exp(-||x_i - mu_k||^2 / b_k^2), ungated."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    # (N, P, K) differences are fine at the scales this package targets
    diff = X[:, :, None] - params.mu[None, :, :]
    sq = np.einsum("ipk,ipk->ik", diff, diff)
    return np.exp(-sq / params.b[None, :] ** 2)


def rbf_kernel(x, k: int, params: RbfParams) -> float:
    """Activation of neuron k at covariate vector x, in (0, 1]."""
    x = np.asarray(x, dtype=float).ravel()
    d = x - params.mu[:, k]
    return float(np.exp(-(d @ d) / params.b[k] ** 2))


def evaluate_outcome(params: RbfParams, g: int, x) -> float | np.ndarray:
    """f_g at one covariate vector or row-wise over an N x P matrix."""
    if not 1 <= g <= params.n_groups:
        raise ValueError(f"treatment index {g} outside 1..{params.n_groups}")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    phi = kernel_matrix(params, x)
    w = params.gamma[:, g - 1] * params.theta
    out = params.alpha + phi @ w
    return float(out[0]) if single else out


def design_matrix(params: RbfParams, dataset) -> np.ndarray:
    """N x K gated design: entry (i, k) = gamma[k, z_i] * kernel_k(x_i)."""
    phi = kernel_matrix(params, dataset.X)
    gate = params.gamma[:, dataset.z - 1].T.astype(float)
    return phi * gate


def cate(
    params: RbfParams,
    g: int,
    g_prime: int,
    x,
    outcome_transform: OutcomeTransform,
) -> float | np.ndarray:
    """Treatment effect of g over g' at x on the original outcome scale.

    The outcome inversion is affine, so this equals (y_max - y_min) times the
    scaled-space surface difference.
    """
    diff = evaluate_outcome(params, g, x) - evaluate_outcome(params, g_prime, x)
    return outcome_transform.scale * diff


def log_likelihood(params: RbfParams, dataset) -> float:
    """Full Gaussian data log-likelihood, normalizing constant included."""
    fitted = params.alpha + design_matrix(params, dataset) @ params.theta
    resid = dataset.y - fitted
    n = resid.shape[0]
    s2 = params.sigma**2
    return float(-0.5 * n * np.log(2 * np.pi * s2) - (resid @ resid) / (2 * s2))
