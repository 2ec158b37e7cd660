"""Empirical-Bayes initialization for the shared-neuron network.

Per treatment group, a Gaussian-kernel relevance vector machine fixes the
group's relevance-vector count v_g; the neuron budget is K = G * max_g v_g
and consecutive index blocks I_g pin v_g neurons active per group during the
early sampling phase.  Centers come from entropy-weighted k-means on the
pooled scaled covariates (plus a small jitter), the common bandwidth from the
mean pairwise center distance, coefficients from a ridge-stabilized least
squares fit, and the error-scale prior from an OLS pre-fit with treatment
factors.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConvergenceWarning, DegenerateCentersError, SingularDesignWarning
from .model import Hyperparams, RbfParams, design_matrix
from .seeds import STREAM_INIT, STREAM_JITTER, derived_rng

RVM_PRUNE_THRESHOLD = 1e8
RVM_TOL = 1e-3
RVM_MAX_ITER = 1000
JITTER_SCALE = 1e-4
EWKM_LAMBDA = 1.0
EWKM_MAX_ITER = 100


@dataclass
class RvmFit:
    """Sparse Bayesian kernel regression fit for one treatment group.

    relevance_indices are row indices into the group's covariates whose
    kernel bases survived pruning; weights are their posterior-mean
    coefficients; kernel_width is the squared-distance divisor m in
    exp(-||x - c||^2 / m); history records the retained set after every
    re-estimation sweep (pruning only ever removes).
    """

    relevance_indices: np.ndarray
    weights: np.ndarray
    kernel_width: float
    noise_var: float
    centers: np.ndarray
    history: list

    @property
    def v(self) -> int:
        return int(self.relevance_indices.size)


def median_sq_distance(X) -> float:
    """Median pairwise squared Euclidean distance (the kernel-width heuristic)."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    iu = np.triu_indices(n, k=1)
    sq = ((X[iu[0]] - X[iu[1]]) ** 2).sum(axis=1)
    med = float(np.median(sq)) if sq.size else 1.0
    return med if med > 0 else 1.0


def rvm_kernel(X, centers, width) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    diff = X[:, None, :] - centers[None, :, :]
    return np.exp(-np.einsum("ijp,ijp->ij", diff, diff) / width)


def fit_rvm(Xg, yg) -> RvmFit:
    """Type-II maximum-likelihood relevance vector machine over the Gaussian
    kernel basis centered at the group's own points.

    Per-weight precisions and the noise variance are re-estimated until the
    largest change in log precision drops below RVM_TOL; bases whose precision
    exceeds RVM_PRUNE_THRESHOLD are pruned (the last basis is never pruned).
    """
    Xg = np.atleast_2d(np.asarray(Xg, dtype=float))
    yg = np.asarray(yg, dtype=float).ravel()
    n = Xg.shape[0]
    if n < 2:
        raise ValueError("relevance vector machine needs a group of size >= 2")
    width = median_sq_distance(Xg)
    phi_full = rvm_kernel(Xg, Xg, width)
    active = np.arange(n)
    a = np.ones(n)
    y_var = float(np.var(yg))
    noise = max(0.1 * y_var, 1e-6)
    history = [active.copy()]
    converged = False
    for _ in range(RVM_MAX_ITER):
        phi = phi_full[:, active]
        m_act = active.size
        A = a[active]
        Q = phi.T @ phi / noise + np.diag(A)
        try:
            L = scipy.linalg.cholesky(Q, lower=True)
        except scipy.linalg.LinAlgError:
            L = scipy.linalg.cholesky(Q + 1e-10 * np.eye(m_act), lower=True)
        Sigma = scipy.linalg.cho_solve((L, True), np.eye(m_act))
        mean = Sigma @ (phi.T @ yg) / noise
        gamma_j = 1.0 - A * np.diag(Sigma)
        gamma_j = np.clip(gamma_j, 1e-12, None)
        a_new = gamma_j / np.maximum(mean**2, 1e-300)
        resid = yg - phi @ mean
        dof = max(n - float(gamma_j.sum()), 1e-3)
        noise = max(float(resid @ resid) / dof, 1e-12)
        change = np.max(np.abs(np.log(a_new) - np.log(A)))
        keep = a_new < RVM_PRUNE_THRESHOLD
        if not np.any(keep):
            keep[np.argmin(a_new)] = True
        a[active] = a_new
        active = active[keep]
        history.append(active.copy())
        if change < RVM_TOL:
            converged = True
            break
    if not converged:
        warnings.warn(
            "relevance vector machine hit its iteration cap; returning the "
            "current pruned set",
            ConvergenceWarning,
            stacklevel=2,
        )
    phi = phi_full[:, active]
    A = a[active]
    Q = phi.T @ phi / noise + np.diag(A)
    try:
        L = scipy.linalg.cholesky(Q, lower=True)
    except scipy.linalg.LinAlgError:
        L = scipy.linalg.cholesky(Q + 1e-10 * np.eye(active.size), lower=True)
    mean = scipy.linalg.cho_solve((L, True), phi.T @ yg / noise)
    return RvmFit(
        relevance_indices=active.copy(),
        weights=mean,
        kernel_width=width,
        noise_var=noise,
        centers=Xg[active].copy(),
        history=history,
    )


def predict_rvm(fit: RvmFit, X) -> np.ndarray:
    """Evaluate the fitted kernel expansion at new covariate rows."""
    return rvm_kernel(X, fit.centers, fit.kernel_width) @ fit.weights


def select_k(v) -> int:
    """Neuron budget K = G * max_g v_g."""
    v = np.asarray(v, dtype=int)
    if np.any(v < 1):
        raise ValueError("every group must contribute at least one relevance vector")
    return int(len(v) * v.max())


def build_fixed_sets(v) -> tuple[tuple[tuple[int, ...], ...], np.ndarray]:
    """Consecutive 0-based index blocks I_g of sizes v_g, plus the initial
    gamma matrix with exactly those entries set to 1."""
    v = np.asarray(v, dtype=int)
    K = select_k(v)
    G = len(v)
    if v.sum() > K:
        raise ValueError("fixed sets exceed the neuron budget")
    sets = []
    offset = 0
    for g in range(G):
        sets.append(tuple(range(offset, offset + int(v[g]))))
        offset += int(v[g])
    gamma0 = np.zeros((K, G), dtype=np.int8)
    for g, idx in enumerate(sets):
        gamma0[list(idx), g] = 1
    return tuple(sets), gamma0


def ewkm(X, K, lam=EWKM_LAMBDA, max_iter=EWKM_MAX_ITER, rng=None):
    """Entropy-weighted k-means: per-cluster feature weights soften the
    squared distances; weights are the softmax of the negative within-cluster
    per-feature dispersions divided by lam.

    Returns (centers P x K, weights K x P, objective history).  Empty
    clusters are reseeded at the point farthest from its assigned center.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, p = X.shape
    if K > n:
        raise ValueError(f"cannot place {K} clusters on {n} points")
    if lam <= 0:
        raise ValueError("entropy weight lam must be positive")
    if rng is None:
        rng = np.random.default_rng()
    centers = X[rng.choice(n, size=K, replace=False)].copy()
    weights = np.full((K, p), 1.0 / p)
    assign = np.full(n, -1)
    history = []
    for _ in range(max_iter):
        # weighted squared distances (n, K)
        d = np.einsum("kp,nkp->nk", weights, (X[:, None, :] - centers[None, :, :]) ** 2)
        new_assign = d.argmin(axis=1)
        for l in range(K):
            if np.any(new_assign == l):
                continue
            # reseed at the point farthest from its own center, skipping
            # points that are the sole member of their cluster
            dist_own = np.einsum("np,np->n", weights[new_assign], (X - centers[new_assign]) ** 2)
            counts = np.bincount(new_assign, minlength=K)
            dist_own[counts[new_assign] <= 1] = -np.inf
            far = int(np.argmax(dist_own))
            centers[l] = X[far]
            new_assign[far] = l
        for l in range(K):
            centers[l] = X[new_assign == l].mean(axis=0)
        disp = np.zeros((K, p))
        for l in range(K):
            disp[l] = ((X[new_assign == l] - centers[l]) ** 2).sum(axis=0)
        shifted = -disp / lam
        shifted -= shifted.max(axis=1, keepdims=True)
        w = np.exp(shifted)
        weights = w / w.sum(axis=1, keepdims=True)
        scatter = float(np.sum(weights[new_assign] * (X - centers[new_assign]) ** 2))
        entropy = float(np.sum(weights * np.log(weights)))
        history.append(scatter + lam * entropy)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
    return centers.T.copy(), weights, history


def jitter_centers(centers, rng) -> np.ndarray:
    """Add tiny normal noise to every coordinate and guarantee distinct columns."""
    centers = np.asarray(centers, dtype=float).copy()
    centers += rng.normal(0.0, JITTER_SCALE, size=centers.shape)
    # a collision after jitter is virtually impossible but cheap to rule out
    for _ in range(100):
        _, first = np.unique(centers.T, axis=0, return_index=True)
        dup = np.setdiff1d(np.arange(centers.shape[1]), first)
        if dup.size == 0:
            return centers
        centers[:, dup] += rng.normal(0.0, JITTER_SCALE, size=(centers.shape[0], dup.size))
    raise DegenerateCentersError("could not separate duplicate centers")


def init_bandwidth(mu0) -> float:
    """Common kernel bandwidth sqrt(2)/(K(K-1)) * sum of pairwise center
    distances over unordered pairs."""
    mu0 = np.atleast_2d(np.asarray(mu0, dtype=float))
    K = mu0.shape[1]
    if K < 2:
        raise ValueError("bandwidth needs at least two centers")
    iu = np.triu_indices(K, k=1)
    d = np.sqrt(((mu0[:, iu[0]] - mu0[:, iu[1]]) ** 2).sum(axis=0))
    total = float(d.sum())
    if total <= 0:
        raise DegenerateCentersError("all centers coincide; bandwidth undefined")
    return float(np.sqrt(2.0) / (K * (K - 1)) * total)


def init_theta_ls(dataset, gamma0, mu0, b) -> tuple[np.ndarray, float]:
    """Ridge-stabilized least squares fit of the scaled outcome on the gated
    kernel design plus an intercept; returns (theta0, alpha0)."""
    K = gamma0.shape[0]
    params = RbfParams(
        gamma=gamma0,
        mu=mu0,
        theta=np.zeros(K),
        alpha=0.0,
        sigma=1.0,
        p=np.full(gamma0.shape[1], 0.5),
        b=np.full(K, float(b)),
    )
    xstar = design_matrix(params, dataset)
    A = np.column_stack([np.ones(dataset.n), xstar])
    Q = A.T @ A + 1e-8 * np.eye(K + 1)
    coef = np.linalg.solve(Q, A.T @ dataset.y)
    return coef[1:], float(coef[0])


def estimate_sigma_hat(dataset) -> float:
    """Residual sd (dof N - P - G) of OLS of the scaled outcome on scaled
    covariates, treatment dummies for groups 2..G, and an intercept."""
    n, p = dataset.X.shape
    G = dataset.n_groups
    if n <= p + G:
        raise ValueError("need N > P + G for the error-scale pre-fit")
    dummies = np.column_stack([(dataset.z == g).astype(float) for g in range(2, G + 1)])
    A = np.column_stack([np.ones(n), dataset.X, dummies]) if G > 1 else np.column_stack(
        [np.ones(n), dataset.X]
    )
    Q = A.T @ A
    try:
        coef = scipy.linalg.solve(Q, A.T @ dataset.y, assume_a="pos")
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError):
        warnings.warn(
            "rank-deficient pre-fit design; adding a small ridge",
            SingularDesignWarning,
            stacklevel=2,
        )
        coef = scipy.linalg.solve(Q + 1e-8 * np.eye(A.shape[1]), A.T @ dataset.y)
    resid = dataset.y - A @ coef
    return float(np.sqrt((resid @ resid) / (n - p - G)))


@dataclass
class InitPlan:
    """Everything needed to start a chain: neuron budget, pinned index sets,
    initial parameter values, and prior scales."""

    K: int
    v: tuple[int, ...]
    fixed_sets: tuple[tuple[int, ...], ...]
    mu0: np.ndarray
    b0: float
    theta0: np.ndarray
    alpha0: float
    gamma0: np.ndarray
    p0: np.ndarray
    sigma_hat: float
    sigma_d0: float

    def validate(self):
        G = len(self.v)
        if self.K != G * max(self.v):
            raise ValueError("K must equal G * max_g v_g")
        seen = set()
        for g, idx in enumerate(self.fixed_sets):
            if len(idx) != self.v[g]:
                raise ValueError("fixed set sizes must match relevance counts")
            if seen & set(idx):
                raise ValueError("fixed sets must be pairwise disjoint")
            seen |= set(idx)
        if not seen <= set(range(self.K)):
            raise ValueError("fixed sets must index into 0..K-1")

    def initial_params(self) -> RbfParams:
        return RbfParams(
            gamma=self.gamma0.copy(),
            mu=self.mu0.copy(),
            theta=self.theta0.copy(),
            alpha=self.alpha0,
            sigma=self.sigma_hat,
            p=self.p0.copy(),
            b=np.full(self.K, self.b0),
        )

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(
            sigma_mu=1.0, sigma_d=self.sigma_d0, c=1.0, d=1.0, sigma_hat=self.sigma_hat
        )

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "v": list(self.v),
            "fixed_sets": [list(s) for s in self.fixed_sets],
            "mu0": self.mu0.tolist(),
            "b0": self.b0,
            "theta0": self.theta0.tolist(),
            "alpha0": self.alpha0,
            "gamma0": self.gamma0.astype(int).tolist(),
            "p0": self.p0.tolist(),
            "sigma_hat": self.sigma_hat,
            "sigma_d0": self.sigma_d0,
        }

    @staticmethod
    def from_dict(d: dict) -> "InitPlan":
        return InitPlan(
            K=d["K"],
            v=tuple(d["v"]),
            fixed_sets=tuple(tuple(s) for s in d["fixed_sets"]),
            mu0=np.array(d["mu0"], dtype=float),
            b0=d["b0"],
            theta0=np.array(d["theta0"], dtype=float),
            alpha0=d["alpha0"],
            gamma0=np.array(d["gamma0"], dtype=np.int8),
            p0=np.array(d["p0"], dtype=float),
            sigma_hat=d["sigma_hat"],
            sigma_d0=d["sigma_d0"],
        )


def build_init_plan(dataset, seed: int = 0) -> InitPlan:
    """Compose the full initialization pipeline on a scaled dataset."""
    rng_init = derived_rng(seed, STREAM_INIT)
    rng_jitter = derived_rng(seed, STREAM_JITTER)
    G = dataset.n_groups
    v = []
    for g in range(1, G + 1):
        rows = dataset.z == g
        fit = fit_rvm(dataset.X[rows], dataset.y[rows])
        v.append(max(fit.v, 1))
    v = tuple(v)
    K = select_k(v)
    fixed_sets, gamma0 = build_fixed_sets(v)
    centers, _, _ = ewkm(dataset.X, K, rng=rng_init)
    mu0 = jitter_centers(centers, rng_jitter)
    b0 = init_bandwidth(mu0)
    theta0, alpha0 = init_theta_ls(dataset, gamma0, mu0, b0)
    sigma_hat = estimate_sigma_hat(dataset)
    k1 = max(v)
    plan = InitPlan(
        K=K,
        v=v,
        fixed_sets=fixed_sets,
        mu0=mu0,
        b0=b0,
        theta0=theta0,
        alpha0=alpha0,
        gamma0=gamma0,
        p0=np.full(G, 0.5),
        sigma_hat=sigma_hat,
        sigma_d0=1.0 / (4.0 * np.sqrt(k1)),
    )
    plan.validate()
    return plan
