"""MCMC kernel for the shared-neuron RBF network.

One sweep updates, in order: the intercept alpha and coefficient vector theta
(conjugate normal draws), the binary inclusion matrix gamma (Bernoulli Gibbs
in fresh random order), the inclusion probabilities p_g (Beta draws), the
error sd sigma (independence MH with a Jacobian-corrected half-Cauchy
acceptance), and each center mu_k (MALA with per-neuron step size).  Step
sizes and the coefficient prior scale sigma_d adapt during burn-in only.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .data import CovariateTransform, OutcomeTransform
from .errors import DegenerateResidualWarning, NumericalError
from .model import Hyperparams, RbfParams
from .seeds import STREAM_CHAIN, derived_rng

EPS_MIN = 1e-10
EPS_MAX = 1e2

CHAIN_FORMAT = "sharedrbf-chain"
CHAIN_FORMAT_VERSION = 1


@dataclass
class SamplerConfig:
    """Chain length, adaptation, and seeding knobs.

    gamma entries pinned by the fixed index sets stay at 1 for the first
    n_fixed_gamma iterations.  MALA step sizes are retuned every
    tune_interval iterations during burn-in toward an acceptance rate in
    [acc_low, acc_high]; sigma_d is recalculated every recalib_interval
    iterations during burn-in.  Both freeze after burn-in.
    """

    n_iter: int = 6000
    n_burn: int = 3000
    n_fixed_gamma: int = 1000
    tune_interval: int = 200
    acc_low: float = 0.45
    acc_high: float = 0.70
    epsilon0: float = 0.01
    recalib_interval: int = 100
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.n_burn < self.n_iter:
            raise ValueError("need 0 <= n_burn < n_iter")
        if not 0 <= self.n_fixed_gamma <= self.n_burn:
            raise ValueError("need n_fixed_gamma <= n_burn")
        if not 0 < self.acc_low < self.acc_high < 1:
            raise ValueError("need 0 < acc_low < acc_high < 1")
        if not self.epsilon0 > 0:
            raise ValueError("epsilon0 must be positive")
        if self.tune_interval < 1 or self.recalib_interval < 1:
            raise ValueError("adaptation intervals must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def to_dict(self) -> dict:
        return {
            "n_iter": self.n_iter,
            "n_burn": self.n_burn,
            "n_fixed_gamma": self.n_fixed_gamma,
            "tune_interval": self.tune_interval,
            "acc_low": self.acc_low,
            "acc_high": self.acc_high,
            "epsilon0": self.epsilon0,
            "recalib_interval": self.recalib_interval,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "SamplerConfig":
        return SamplerConfig(**d)


@dataclass
class PosteriorChain:
    """Ordered post-burn-in parameter samples plus run diagnostics."""

    samples: list[RbfParams]
    acceptance: dict
    fixed_sets: tuple[tuple[int, ...], ...]
    config: SamplerConfig
    hyper: Hyperparams
    outcome_transform: OutcomeTransform | None = None
    covariate_transform: CovariateTransform | None = None
    adaptation_log: tuple = ()
    epsilon: np.ndarray | None = None
    init_plan: dict | None = None

    def __len__(self) -> int:
        return len(self.samples)


def half_cauchy_pdf(x: float, scale: float) -> float:
    """Density of the half-Cauchy distribution on (0, inf)."""
    if x <= 0:
        return 0.0
    return 2.0 / (np.pi * scale * (1.0 + (x / scale) ** 2))


def sigma_acceptance_probability(sigma_cur: float, sigma_prop: float, sigma_hat: float) -> float:
    """MH acceptance for the error-sd move: half-Cauchy ratio times the
    (sigma'/sigma)^3 Jacobian of the precision-to-sd change of variables,
    capped at 1."""
    num = half_cauchy_pdf(sigma_prop, sigma_hat) * sigma_prop**3
    den = half_cauchy_pdf(sigma_cur, sigma_hat) * sigma_cur**3
    return min(1.0, num / den)


def gamma_bernoulli_prob(p_g: float, delta: float) -> float:
    """Posterior inclusion probability from the log-likelihood difference
    delta = log l1 - log l0, computed stably for large |delta|."""
    log_p = np.log(p_g)
    log_q = np.log1p(-p_g)
    return float(np.exp(log_p - np.logaddexp(log_p, log_q - delta)))


def tune_step_size(accept_rate: float, eps: float, low: float = 0.45, high: float = 0.70) -> float:
    """Multiplicative step-size control toward the target acceptance band."""
    if accept_rate < low:
        eps = eps * 0.8
    elif accept_rate > high:
        eps = eps * 1.25
    return float(min(max(eps, EPS_MIN), EPS_MAX))


def recalibrate_sigma_d(params: RbfParams) -> float:
    """Coefficient prior scale 1 / (4 sqrt(K1)) with K1 the largest per-group
    active-neuron count (floored at 1)."""
    k1 = max(1, int(params.gamma.sum(axis=0).max(initial=0)))
    return 1.0 / (4.0 * np.sqrt(k1))


class SamplerState:
    """Mutable working state for one chain: parameters plus cached kernel
    matrix, per-subject gating, and residuals kept consistent incrementally.

    Not thread-safe; one chain owns one state.
    """

    def __init__(self, params: RbfParams, dataset, hyper: Hyperparams, fixed_sets=()):
        self.params = params.copy()
        self.hyper = hyper.copy()
        self.X = np.asarray(dataset.X, dtype=float)
        self.y = np.asarray(dataset.y, dtype=float)
        self.z = np.asarray(dataset.z, dtype=int)
        self.n = self.y.shape[0]
        G = self.params.n_groups
        if self.z.max() > G:
            raise ValueError("dataset has treatment labels beyond the parameter G")
        self.group_rows = [np.flatnonzero(self.z == g + 1) for g in range(G)]
        self.fixed_sets = tuple(tuple(int(k) for k in s) for s in fixed_sets) or tuple(
            () for _ in range(G)
        )
        if len(self.fixed_sets) != G:
            raise ValueError("need one fixed index set per treatment group")
        self.grad_failures = 0
        self._build_pair_lists()
        self.refresh()

    # -- cache management ---------------------------------------------------

    def refresh(self):
        """Recompute kernel matrix, gating, and residuals from scratch."""
        p = self.params
        diff = self.X[:, :, None] - p.mu[None, :, :]
        sq = np.einsum("ipk,ipk->ik", diff, diff)
        self.phi = np.exp(-sq / p.b[None, :] ** 2)
        self.gate = p.gamma[:, self.z - 1].T.astype(float)
        self.resid = self.y - p.alpha - (self.phi * self.gate) @ p.theta

    def _build_pair_lists(self):
        K, G = self.params.gamma.shape
        fixed = np.zeros((K, G), dtype=bool)
        for g, idx in enumerate(self.fixed_sets):
            for k in idx:
                fixed[k, g] = True
        ks, gs = np.meshgrid(np.arange(K), np.arange(G), indexing="ij")
        self._pairs_all = np.column_stack([ks.ravel(), gs.ravel()])
        free = ~fixed.ravel()
        self._pairs_free = self._pairs_all[free]

    # -- conjugate updates --------------------------------------------------

    def alpha_full_conditional(self) -> tuple[float, float]:
        s2 = self.params.sigma**2
        prec = 1.0 / self.hyper.sigma_d**2 + self.n / s2
        var = 1.0 / prec
        alpha0 = float(np.sum(self.resid + self.params.alpha)) / s2
        return alpha0 * var, float(np.sqrt(var))

    def update_alpha(self, rng) -> float:
        mean, sd = self.alpha_full_conditional()
        new = float(rng.normal(mean, sd))
        self.resid += self.params.alpha - new
        self.params.alpha = new
        return new

    def theta_full_conditional(self):
        """Partition into prior-only rows (gamma row all zero) and the rest;
        return (zero_idx, free_idx, mean, covariance) for the free block."""
        p = self.params
        zero = p.gamma.sum(axis=1) == 0
        zero_idx = np.flatnonzero(zero)
        free_idx = np.flatnonzero(~zero)
        if free_idx.size == 0:
            return zero_idx, free_idx, np.empty(0), np.empty((0, 0))
        s2 = p.sigma**2
        S = (self.phi * self.gate)[:, free_idx]
        Q = S.T @ S / s2 + np.eye(free_idx.size) / self.hyper.sigma_d**2
        rhs = S.T @ (self.y - p.alpha) / s2
        L = self._chol(Q)
        mean = scipy.linalg.cho_solve((L, True), rhs)
        cov = scipy.linalg.cho_solve((L, True), np.eye(free_idx.size))
        return zero_idx, free_idx, mean, cov

    @staticmethod
    def _chol(Q):
        try:
            return scipy.linalg.cholesky(Q, lower=True)
        except scipy.linalg.LinAlgError:
            try:
                return scipy.linalg.cholesky(Q + 1e-10 * np.eye(Q.shape[0]), lower=True)
            except scipy.linalg.LinAlgError as exc:
                raise NumericalError("coefficient full-conditional factorization failed") from exc

    def update_theta(self, rng) -> np.ndarray:
        p = self.params
        zero = p.gamma.sum(axis=1) == 0
        zero_idx = np.flatnonzero(zero)
        free_idx = np.flatnonzero(~zero)
        theta = np.empty(p.n_neurons)
        if zero_idx.size:
            theta[zero_idx] = rng.normal(0.0, self.hyper.sigma_d, size=zero_idx.size)
        if free_idx.size:
            s2 = p.sigma**2
            S = (self.phi * self.gate)[:, free_idx]
            Q = S.T @ S / s2 + np.eye(free_idx.size) / self.hyper.sigma_d**2
            rhs = S.T @ (self.y - p.alpha) / s2
            L = self._chol(Q)
            mean = scipy.linalg.cho_solve((L, True), rhs)
            noise = scipy.linalg.solve_triangular(
                L, rng.standard_normal(free_idx.size), trans="T", lower=True
            )
            theta[free_idx] = mean + noise
        p.theta = theta
        self.resid = self.y - p.alpha - (self.phi * self.gate) @ theta
        return theta.copy()

    def gamma_loglik_delta(self, k: int, g: int) -> float:
        """log l1 - log l0 for entry (k, g); only group-g residuals differ,
        so the full-data likelihood ratio reduces to this group."""
        p = self.params
        rows = self.group_rows[g]
        d = p.theta[k] * self.phi[rows, k]
        r = self.resid[rows]
        if p.gamma[k, g] == 1:
            r1 = r
            r0 = r + d
        else:
            r0 = r
            r1 = r - d
        return float(((r0 @ r0) - (r1 @ r1)) / (2.0 * p.sigma**2))

    def update_gamma(self, rng, in_fixed_phase: bool) -> np.ndarray:
        pairs = self._pairs_free if in_fixed_phase else self._pairs_all
        order = rng.permutation(pairs.shape[0])
        p = self.params
        for idx in order:
            k, g = int(pairs[idx, 0]), int(pairs[idx, 1])
            delta = self.gamma_loglik_delta(k, g)
            ptilde = gamma_bernoulli_prob(float(p.p[g]), delta)
            new = 1 if rng.random() < ptilde else 0
            cur = int(p.gamma[k, g])
            if new != cur:
                rows = self.group_rows[g]
                d = p.theta[k] * self.phi[rows, k]
                self.resid[rows] += d if new == 0 else -d
                self.gate[rows, k] = float(new)
                p.gamma[k, g] = new
        return p.gamma.copy()

    def pg_posterior_shapes(self, in_fixed_phase: bool) -> list[tuple[float, float]]:
        p = self.params
        c, d = self.hyper.c, self.hyper.d
        shapes = []
        for g in range(p.n_groups):
            col = p.gamma[:, g]
            if in_fixed_phase and self.fixed_sets[g]:
                free = np.ones(p.n_neurons, dtype=bool)
                free[list(self.fixed_sets[g])] = False
                total = int(free.sum())
                active = int(col[free].sum())
            else:
                total = p.n_neurons
                active = int(col.sum())
            shapes.append((c + active, d + total - active))
        return shapes

    def update_pg(self, rng, in_fixed_phase: bool) -> np.ndarray:
        shapes = self.pg_posterior_shapes(in_fixed_phase)
        p = np.array([rng.beta(a, b) for a, b in shapes])
        # Beta draws of 0/1 are measure-zero but would break the (0,1) invariant
        self.params.p = np.clip(p, 1e-12, 1 - 1e-12)
        return self.params.p.copy()

    # -- Metropolis-Hastings updates -----------------------------------------

    def update_sigma(self, rng) -> bool:
        # Independence move: propose the precision from its full conditional
        # under a flat prior, Gamma(1 + N/2, rate = ssr/2); the acceptance
        # then reduces exactly to the half-Cauchy prior ratio times the
        # sigma^3 Jacobian of the precision-to-sd change of variables.
        p = self.params
        ssr = float(self.resid @ self.resid)
        if ssr <= 0.0:
            warnings.warn(
                "all residuals are zero; flooring the precision-proposal rate",
                DegenerateResidualWarning,
                stacklevel=2,
            )
            ssr = 1e-300
        precision = rng.gamma(shape=1.0 + self.n / 2.0, scale=2.0 / ssr)
        if precision <= 0.0:
            return False
        prop = float(precision**-0.5)
        accept = sigma_acceptance_probability(p.sigma, prop, self.hyper.sigma_hat)
        if rng.random() < accept:
            p.sigma = prop
            return True
        return False

    def grad_mu(self, k: int) -> np.ndarray:
        """Gradient of the conditional log-posterior of center k."""
        p = self.params
        s2 = p.sigma**2
        w = self.resid * (p.theta[k] * (2.0 / p.b[k] ** 2)) * self.gate[:, k] * self.phi[:, k]
        return (self.X.T @ w - p.mu[:, k] * w.sum()) / s2 - p.mu[:, k] / self.hyper.sigma_mu**2

    def mu_log_posterior(self, k: int, mu_value) -> float:
        """Conditional log-posterior of center k evaluated at mu_value
        (Gaussian data term plus the normal prior on the center)."""
        p = self.params
        mu_value = np.asarray(mu_value, dtype=float).ravel()
        diff = self.X - mu_value[None, :]
        phi_c = np.exp(-np.einsum("ip,ip->i", diff, diff) / p.b[k] ** 2)
        resid_c = self.resid + p.theta[k] * self.gate[:, k] * (self.phi[:, k] - phi_c)
        s2 = p.sigma**2
        return float(
            -0.5 * self.n * np.log(2 * np.pi * s2)
            - (resid_c @ resid_c) / (2 * s2)
            - (mu_value @ mu_value) / (2 * self.hyper.sigma_mu**2)
        )

    def _mu_likelihood_pieces(self, k, mu_value):
        """Kernel column, residuals, log-posterior (constants dropped), and
        gradient, all at a candidate center value."""
        p = self.params
        s2 = p.sigma**2
        diff = self.X - mu_value[None, :]
        phi_c = np.exp(-np.einsum("ip,ip->i", diff, diff) / p.b[k] ** 2)
        resid_c = self.resid + p.theta[k] * self.gate[:, k] * (self.phi[:, k] - phi_c)
        lp = -(resid_c @ resid_c) / (2 * s2) - (mu_value @ mu_value) / (
            2 * self.hyper.sigma_mu**2
        )
        w = resid_c * (p.theta[k] * (2.0 / p.b[k] ** 2)) * self.gate[:, k] * phi_c
        grad = (self.X.T @ w - mu_value * w.sum()) / s2 - mu_value / self.hyper.sigma_mu**2
        return phi_c, resid_c, float(lp), grad

    def update_mu(self, k: int, eps: float, rng) -> bool:
        """One MALA step on center k; returns whether the move was accepted."""
        p = self.params
        grad_cur = self.grad_mu(k)
        if not np.all(np.isfinite(grad_cur)):
            self.grad_failures += 1
            return False
        mu_cur = p.mu[:, k].copy()
        noise = rng.normal(0.0, np.sqrt(eps), size=mu_cur.shape[0])
        prop = mu_cur + 0.5 * eps * grad_cur + noise
        phi_prop, resid_prop, lp_prop, grad_prop = self._mu_likelihood_pieces(k, prop)
        if not (np.isfinite(lp_prop) and np.all(np.isfinite(grad_prop))):
            self.grad_failures += 1
            return False
        s2 = p.sigma**2
        lp_cur = -(self.resid @ self.resid) / (2 * s2) - (mu_cur @ mu_cur) / (
            2 * self.hyper.sigma_mu**2
        )
        fwd = prop - mu_cur - 0.5 * eps * grad_cur
        rev = mu_cur - prop - 0.5 * eps * grad_prop
        log_a = (lp_prop - lp_cur) + ((fwd @ fwd) - (rev @ rev)) / (2 * eps)
        if rng.random() < np.exp(min(0.0, log_a)):
            p.mu[:, k] = prop
            self.phi[:, k] = phi_prop
            self.resid = resid_prop
            return True
        return False

    def recalibrate_sigma_d(self) -> float:
        self.hyper.sigma_d = recalibrate_sigma_d(self.params)
        return self.hyper.sigma_d


# -- spec-level wrappers (build a fresh state; inputs are never mutated) ------


def alpha_full_conditional(params, dataset, hyper) -> tuple[float, float]:
    return SamplerState(params, dataset, hyper).alpha_full_conditional()


def update_alpha(params, dataset, hyper, rng) -> float:
    return SamplerState(params, dataset, hyper).update_alpha(rng)


def theta_full_conditional(params, dataset, hyper):
    return SamplerState(params, dataset, hyper).theta_full_conditional()


def update_theta(params, dataset, hyper, rng) -> np.ndarray:
    return SamplerState(params, dataset, hyper).update_theta(rng)


def gamma_loglik_delta(params, dataset, hyper, k, g) -> float:
    """log-likelihood difference for gamma[k, g] = 1 vs 0 (g is 1-based)."""
    return SamplerState(params, dataset, hyper).gamma_loglik_delta(k, g - 1)


def update_gamma(params, dataset, hyper, rng, fixed_sets=(), in_fixed_phase=False) -> np.ndarray:
    state = SamplerState(params, dataset, hyper, fixed_sets)
    return state.update_gamma(rng, in_fixed_phase)


def pg_posterior_shapes(params, hyper, fixed_sets=(), in_fixed_phase=False):
    z = np.arange(1, params.n_groups + 1)
    dummy = _single_point_dataset(params, z)
    return SamplerState(params, dummy, hyper, fixed_sets).pg_posterior_shapes(in_fixed_phase)


def update_pg(params, hyper, rng, fixed_sets=(), in_fixed_phase=False) -> np.ndarray:
    z = np.arange(1, params.n_groups + 1)
    dummy = _single_point_dataset(params, z)
    return SamplerState(params, dummy, hyper, fixed_sets).update_pg(rng, in_fixed_phase)


def _single_point_dataset(params, z):
    from .data import Dataset

    n = len(z)
    return Dataset(X=np.zeros((n, params.n_covariates)), y=np.zeros(n), z=z)


def update_sigma(params, dataset, hyper, rng) -> tuple[float, bool]:
    state = SamplerState(params, dataset, hyper)
    accepted = state.update_sigma(rng)
    return state.params.sigma, accepted


def grad_log_post_mu(params, dataset, hyper, k) -> np.ndarray:
    return SamplerState(params, dataset, hyper).grad_mu(k)


def mu_log_posterior(params, dataset, hyper, k, mu_value) -> float:
    return SamplerState(params, dataset, hyper).mu_log_posterior(k, mu_value)


def update_mu_k(params, dataset, hyper, k, eps, rng) -> tuple[np.ndarray, bool]:
    state = SamplerState(params, dataset, hyper)
    accepted = state.update_mu(k, eps, rng)
    return state.params.mu[:, k].copy(), accepted


def mala_components(params, dataset, hyper, k, mu_from, mu_to, eps) -> dict:
    """All pieces of the MALA acceptance for a move mu_from -> mu_to of
    center k: conditional log-posteriors, forward/reverse proposal log
    densities (without the shared normalizing constant), and the capped
    acceptance probability."""
    work = params.copy()
    work.mu[:, k] = np.asarray(mu_from, dtype=float)
    state = SamplerState(work, dataset, hyper)
    mu_from = np.asarray(mu_from, dtype=float).ravel()
    mu_to = np.asarray(mu_to, dtype=float).ravel()
    lp_from = state.mu_log_posterior(k, mu_from)
    lp_to = state.mu_log_posterior(k, mu_to)
    grad_from = state.grad_mu(k)
    _, _, _, grad_to = state._mu_likelihood_pieces(k, mu_to)
    fwd = mu_to - mu_from - 0.5 * eps * grad_from
    rev = mu_from - mu_to - 0.5 * eps * grad_to
    log_q_fwd = -(fwd @ fwd) / (2 * eps)
    log_q_rev = -(rev @ rev) / (2 * eps)
    log_a = lp_to + log_q_rev - lp_from - log_q_fwd
    return {
        "logpost_from": lp_from,
        "logpost_to": lp_to,
        "log_q_fwd": log_q_fwd,
        "log_q_rev": log_q_rev,
        "accept": float(np.exp(min(0.0, log_a))),
    }


# -- chain driver -------------------------------------------------------------


def run_chain(
    dataset,
    config: SamplerConfig,
    init: RbfParams,
    fixed_sets=(),
    hyper: Hyperparams | None = None,
    outcome_transform: OutcomeTransform | None = None,
    covariate_transform: CovariateTransform | None = None,
    init_plan_dict: dict | None = None,
) -> PosteriorChain:
    """Run the full sampler on a scaled dataset; reproducible given the seed."""
    if hyper is None:
        hyper = Hyperparams()
    rng = derived_rng(config.seed, STREAM_CHAIN)
    state = SamplerState(init, dataset, hyper, fixed_sets)
    K = state.params.n_neurons
    eps = np.full(K, config.epsilon0)
    window_acc = np.zeros(K, dtype=int)
    window_tot = np.zeros(K, dtype=int)
    post_acc = np.zeros(K, dtype=int)
    post_tot = np.zeros(K, dtype=int)
    sigma_acc = 0
    sigma_tot = 0
    adaptation_log: list[dict] = []
    samples: list[RbfParams] = []

    for it in range(1, config.n_iter + 1):
        try:
            in_fixed = it <= config.n_fixed_gamma
            in_burn = it <= config.n_burn
            state.update_alpha(rng)
            state.update_theta(rng)
            state.update_gamma(rng, in_fixed)
            state.update_pg(rng, in_fixed)
            accepted_sigma = state.update_sigma(rng)
            if not in_burn:
                sigma_tot += 1
                sigma_acc += int(accepted_sigma)
            for k in range(K):
                accepted = state.update_mu(k, eps[k], rng)
                window_tot[k] += 1
                window_acc[k] += int(accepted)
                if not in_burn:
                    post_tot[k] += 1
                    post_acc[k] += int(accepted)
            if in_burn and it % config.tune_interval == 0:
                for k in range(K):
                    rate = window_acc[k] / window_tot[k]
                    new_eps = tune_step_size(rate, eps[k], config.acc_low, config.acc_high)
                    if new_eps != eps[k]:
                        eps[k] = new_eps
                        adaptation_log.append(
                            {"iteration": it, "kind": "epsilon", "neuron": k, "value": new_eps}
                        )
                window_acc[:] = 0
                window_tot[:] = 0
            if in_burn and it % config.recalib_interval == 0:
                old = state.hyper.sigma_d
                new = state.recalibrate_sigma_d()
                if new != old:
                    adaptation_log.append({"iteration": it, "kind": "sigma_d", "value": new})
            if not in_burn:
                samples.append(state.params.copy())
        except NumericalError as exc:
            raise NumericalError(f"iteration {it}: {exc}") from exc

    acceptance = {
        "mu": (post_acc / np.maximum(post_tot, 1)).tolist(),
        "sigma": sigma_acc / max(sigma_tot, 1),
        "grad_failures": state.grad_failures,
    }
    return PosteriorChain(
        samples=samples,
        acceptance=acceptance,
        fixed_sets=state.fixed_sets,
        config=config,
        hyper=state.hyper.copy(),
        outcome_transform=outcome_transform,
        covariate_transform=covariate_transform,
        adaptation_log=tuple(adaptation_log),
        epsilon=eps,
        init_plan=init_plan_dict,
    )


# -- persistence ---------------------------------------------------------------


def save_chain(chain: PosteriorChain, path) -> None:
    """Write one JSON header line followed by one parameter sample per line."""
    header = {
        "format": CHAIN_FORMAT,
        "format_version": CHAIN_FORMAT_VERSION,
        "config": chain.config.to_dict(),
        "hyper": chain.hyper.to_dict(),
        "fixed_sets": [list(s) for s in chain.fixed_sets],
        "acceptance": chain.acceptance,
        "adaptation_log": list(chain.adaptation_log),
        "epsilon": None if chain.epsilon is None else np.asarray(chain.epsilon).tolist(),
        "outcome_transform": None
        if chain.outcome_transform is None
        else chain.outcome_transform.to_dict(),
        "covariate_transform": None
        if chain.covariate_transform is None
        else chain.covariate_transform.to_dict(),
        "init_plan": chain.init_plan,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for sample in chain.samples:
            fh.write(json.dumps(sample.to_dict(), sort_keys=True) + "\n")


def load_chain(path) -> PosteriorChain:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise NumericalError(f"{path}: empty chain file")
    header = json.loads(lines[0])
    if header.get("format") != CHAIN_FORMAT:
        raise NumericalError(f"{path}: not a {CHAIN_FORMAT} file")
    samples = [RbfParams.from_dict(json.loads(line)) for line in lines[1:]]
    return PosteriorChain(
        samples=samples,
        acceptance=header["acceptance"],
        fixed_sets=tuple(tuple(s) for s in header["fixed_sets"]),
        config=SamplerConfig.from_dict(header["config"]),
        hyper=Hyperparams.from_dict(header["hyper"]),
        outcome_transform=None
        if header["outcome_transform"] is None
        else OutcomeTransform.from_dict(header["outcome_transform"]),
        covariate_transform=None
        if header["covariate_transform"] is None
        else CovariateTransform.from_dict(header["covariate_transform"]),
        adaptation_log=tuple(header["adaptation_log"]),
        epsilon=None if header["epsilon"] is None else np.array(header["epsilon"]),
        init_plan=header.get("init_plan"),
    )
