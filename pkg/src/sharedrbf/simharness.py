"""Simulation protocol: data generators, in-repo baselines, and the
replication driver producing per-method test-set MSE tables.

Outcomes come from three fixed nonlinear component functions of five
covariates, mixed so that the treatment surfaces share structure; estimation
error for a treatment pair is the mean squared difference between true and
estimated effects over the held-out third of each replication.
"""

from __future__ import annotations

import csv
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .blp import blp_summary
from .data import Dataset
from .errors import SingularDesignWarning
from .initialization import fit_rvm, predict_rvm
from .pipeline import fit_model, posterior_mean_cate
from .sampler import SamplerConfig
from .seeds import STREAM_SIM, derived_rng

ALL_METHODS = ("shared_rbf", "ols_t", "ols_s", "rvm_t", "rvm_s")
SETTING1_PAIRS = ((2, 1), (3, 1))
COVARIATE_PAIRS = ((2, 3), (1, 3))


def friedman_components(x):
    """The three component functions; x holds the five driving covariates in
    its trailing axis."""
    x = np.asarray(x, dtype=float)
    x1, x2, x3, x4, x5 = (x[..., j] for j in range(5))
    f1 = 10.0 * np.sin(np.pi * x1 * x2) + 20.0 * (x3 - 0.5) ** 2 + (10.0 * x4 + 5.0 * x5)
    f2 = (5.0 * x2) / (1.0 + x1**2) + 5.0 * np.sin(x3 * x4) + x5
    f3 = 0.1 * np.exp(4.0 * x1) + 4.0 / (1.0 + np.exp(-20.0 * (x2 - 0.5))) + 3.0 * x3**2 + 2.0 * x4 + x5
    return f1, f2, f3


def outcome_functions(x):
    """Treatment surfaces built as fixed mixtures of the components."""
    f1, f2, f3 = friedman_components(x)
    g1 = f1 + f2
    g2 = (f1 + f2) / 2.0 + f3 / 3.0
    g3 = (f2 + f3) / 2.0 + f1 / 3.0
    return g1, g2, g3


@dataclass
class TrueEffects:
    """True treatment surfaces on the generated subjects (N x G)."""

    surfaces: np.ndarray

    def tau(self, g: int, g_prime: int) -> np.ndarray:
        return self.surfaces[:, g - 1] - self.surfaces[:, g_prime - 1]


def _generate_outcomes(active_X, z, rng, noise_sd):
    g1, g2, g3 = outcome_functions(active_X)
    surfaces = np.column_stack([g1, g2, g3])
    mean = surfaces[np.arange(len(z)), z - 1]
    y = mean + noise_sd * rng.standard_normal(len(z)) if noise_sd > 0 else mean.copy()
    return y, TrueEffects(surfaces=surfaces)


def gen_setting1(n: int, rng, noise_sd: float = 1.0):
    """Independent Uniform(0,1)^5 covariates, three equal treatment groups,
    unit Gaussian outcome noise (noise_sd=0 gives the noise-free surfaces)."""
    if n % 3 != 0:
        raise ValueError("n must be divisible into three equal groups")
    X = rng.uniform(size=(n, 5))
    z = np.repeat([1, 2, 3], n // 3)
    y, truth = _generate_outcomes(X, z, rng, noise_sd)
    return Dataset(X=X, y=y, z=z), truth


def gen_from_covariates(X, z, active_columns, rng, noise_sd: float = 1.0, names=None):
    """Outcomes generated from five designated columns of externally supplied
    covariates; the full covariate set is kept for fitting and the external
    treatment labels are preserved."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    active_columns = tuple(int(c) for c in active_columns)
    if len(active_columns) != 5:
        raise ValueError("exactly five active columns are required")
    if max(active_columns) >= X.shape[1] or min(active_columns) < 0:
        raise ValueError("active column index out of range")
    z = np.asarray(z, dtype=int)
    y, truth = _generate_outcomes(X[:, active_columns], z, rng, noise_sd)
    return Dataset(X=X, y=y, z=z, names=names), truth


def mse(tau_hat, tau_true, test_idx) -> float:
    """Mean squared estimation error over the test rows."""
    tau_hat = np.asarray(tau_hat, dtype=float)
    test_idx = np.asarray(test_idx, dtype=int)
    if test_idx.size == 0:
        raise ValueError("test set must be nonempty")
    err = tau_hat - np.asarray(tau_true, dtype=float)[test_idx]
    return float(err @ err / err.size)


def stratified_split(z, split_fraction, rng):
    """Training indices: ceil(split * n) in total, allocated per treatment
    group by largest remainder (at least one training subject per group)."""
    z = np.asarray(z, dtype=int)
    n = len(z)
    groups = np.unique(z)
    target = int(np.ceil(split_fraction * n))
    sizes = np.array([(z == g).sum() for g in groups])
    quota = split_fraction * sizes
    base = np.clip(np.floor(quota).astype(int), 1, sizes)
    rem = quota - np.floor(quota)
    while base.sum() < target:
        order = np.argsort(-rem)
        for g_idx in order:
            if base[g_idx] < sizes[g_idx]:
                base[g_idx] += 1
                rem[g_idx] = -1
                break
        else:
            break
    while base.sum() > target:
        order = np.argsort(rem)
        for g_idx in order:
            if base[g_idx] > 1:
                base[g_idx] -= 1
                rem[g_idx] = 2
                break
        else:
            break
    train = []
    for g_idx, g in enumerate(groups):
        rows = np.flatnonzero(z == g)
        train.append(rng.choice(rows, size=base[g_idx], replace=False))
    train_idx = np.sort(np.concatenate(train))
    mask = np.ones(n, dtype=bool)
    mask[train_idx] = False
    return train_idx, np.flatnonzero(mask)


# -- baselines ----------------------------------------------------------------


def _ols_fit(A, y):
    Q = A.T @ A
    try:
        return scipy.linalg.solve(Q, A.T @ y, assume_a="pos")
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError):
        warnings.warn("singular baseline design; adding a small ridge",
                      SingularDesignWarning, stacklevel=2)
        return scipy.linalg.solve(Q + 1e-8 * np.eye(A.shape[1]), A.T @ y)


def ols_t_learner(train: Dataset, test_X) -> np.ndarray:
    """Separate linear fit per group; returns test-point surfaces (N x G)."""
    test_X = np.atleast_2d(np.asarray(test_X, dtype=float))
    A_test = np.column_stack([np.ones(test_X.shape[0]), test_X])
    out = np.empty((test_X.shape[0], train.n_groups))
    for g in range(1, train.n_groups + 1):
        rows = train.z == g
        A = np.column_stack([np.ones(rows.sum()), train.X[rows]])
        coef = _ols_fit(A, train.y[rows])
        out[:, g - 1] = A_test @ coef
    return out


def _s_design(X, z, G):
    dummies = np.column_stack([(z == g).astype(float) for g in range(2, G + 1)])
    return np.column_stack([np.ones(len(z)), X, dummies])


def ols_s_learner(train: Dataset, test_X) -> np.ndarray:
    """One linear fit with treatment dummies; surfaces from counterfactual
    dummy settings."""
    test_X = np.atleast_2d(np.asarray(test_X, dtype=float))
    G = train.n_groups
    coef = _ols_fit(_s_design(train.X, train.z, G), train.y)
    out = np.empty((test_X.shape[0], G))
    for g in range(1, G + 1):
        z_cf = np.full(test_X.shape[0], g)
        out[:, g - 1] = _s_design(test_X, z_cf, G) @ coef
    return out


def rvm_t_learner(train: Dataset, test_X) -> np.ndarray:
    """Per-group relevance vector machine on centered outcomes."""
    test_X = np.atleast_2d(np.asarray(test_X, dtype=float))
    out = np.empty((test_X.shape[0], train.n_groups))
    for g in range(1, train.n_groups + 1):
        rows = train.z == g
        offset = float(train.y[rows].mean())
        fit = fit_rvm(train.X[rows], train.y[rows] - offset)
        out[:, g - 1] = predict_rvm(fit, test_X) + offset
    return out


def rvm_s_learner(train: Dataset, test_X) -> np.ndarray:
    """One relevance vector machine over covariates plus treatment dummies."""
    test_X = np.atleast_2d(np.asarray(test_X, dtype=float))
    G = train.n_groups
    features = _s_design(train.X, train.z, G)[:, 1:]  # drop the intercept column
    offset = float(train.y.mean())
    fit = fit_rvm(features, train.y - offset)
    out = np.empty((test_X.shape[0], G))
    for g in range(1, G + 1):
        z_cf = np.full(test_X.shape[0], g)
        out[:, g - 1] = predict_rvm(fit, _s_design(test_X, z_cf, G)[:, 1:]) + offset
    return out


BASELINES = {
    "ols_t": ols_t_learner,
    "ols_s": ols_s_learner,
    "rvm_t": rvm_t_learner,
    "rvm_s": rvm_s_learner,
}


# -- replication driver ---------------------------------------------------------


@dataclass
class SimConfig:
    """Settings for one simulation batch."""

    setting: str = "setting1"
    n: int = 180
    replications: int = 10
    split_fraction: float = 2.0 / 3.0
    chain: SamplerConfig = field(default_factory=SamplerConfig)
    covariate_path: str | None = None
    covariates: np.ndarray | None = None
    treatment: np.ndarray | None = None
    active_columns: tuple = (0, 1, 2, 3, 4)
    seed: int = 0
    methods: tuple = ALL_METHODS
    pairs: tuple | None = None
    blp_thresholds: tuple | None = None
    noise_sd: float = 1.0

    def __post_init__(self):
        if self.setting not in ("setting1", "from_covariates"):
            raise ValueError(f"unknown setting {self.setting!r}")
        if self.setting == "setting1" and self.n % 3 != 0:
            raise ValueError("setting1 needs n divisible by 3")
        if not 0 < self.split_fraction < 1:
            raise ValueError("split_fraction must lie in (0, 1)")
        if len(tuple(self.active_columns)) != 5:
            raise ValueError("active_columns must have exactly 5 entries")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        unknown = set(self.methods) - set(ALL_METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")

    def resolved_pairs(self) -> tuple:
        if self.pairs is not None:
            return tuple(tuple(p) for p in self.pairs)
        return SETTING1_PAIRS if self.setting == "setting1" else COVARIATE_PAIRS


@dataclass
class SimReport:
    """Per-method, per-pair replication MSEs plus optional threshold scores."""

    mses: dict
    pairs: tuple
    methods: tuple
    replications: int
    scores: dict = field(default_factory=dict)
    score_names: tuple = ()
    score_thresholds: tuple = ()
    failures: tuple = ()

    def summary(self) -> list[dict]:
        rows = []
        for method in self.methods:
            for pair in self.pairs:
                values = [m for _, m in self.mses.get((method, pair), [])]
                if not values:
                    continue
                rows.append(
                    {
                        "method": method,
                        "pair": pair_label(pair),
                        "median": float(np.median(values)),
                        "min": float(np.min(values)),
                        "max": float(np.max(values)),
                    }
                )
        return rows

    def write_report_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "pair", "replication", "mse"])
            for method in self.methods:
                for pair in self.pairs:
                    for rep, value in self.mses.get((method, pair), []):
                        writer.writerow([method, pair_label(pair), rep, repr(float(value))])

    def write_summary_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "pair", "median", "min", "max"])
            for row in self.summary():
                writer.writerow(
                    [row["method"], row["pair"], repr(row["median"]), repr(row["min"]),
                     repr(row["max"])]
                )

    def write_scores_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["pair", "replication", "predictor", "threshold", "score"])
            for (pair, rep), matrix in sorted(self.scores.items()):
                for j, name in enumerate(self.score_names):
                    for t_idx, t in enumerate(self.score_thresholds):
                        writer.writerow(
                            [pair_label(pair), rep, name, repr(float(t)),
                             repr(float(matrix[j, t_idx]))]
                        )


def pair_label(pair) -> str:
    return f"tau_{pair[0]}{pair[1]}"


def _chain_seed(seed: int, rep: int) -> int:
    return int(np.random.SeedSequence([int(seed), STREAM_SIM, int(rep), 1]).generate_state(1)[0])


def _generate_replication(config: SimConfig, rep: int, rng):
    if config.setting == "setting1":
        return gen_setting1(config.n, rng, config.noise_sd)
    X, z = config.covariates, config.treatment
    if X is None or z is None:
        X, z = load_covariates_csv(config.covariate_path)
    return gen_from_covariates(X, z, config.active_columns, rng, config.noise_sd)


def _run_one_replication(config: SimConfig, rep: int) -> dict:
    rng = derived_rng(config.seed, STREAM_SIM, rep, 0)
    dataset, truth = _generate_replication(config, rep, rng)
    train_idx, test_idx = stratified_split(dataset.z, config.split_fraction, rng)
    train = Dataset(
        X=dataset.X[train_idx],
        y=dataset.y[train_idx],
        z=dataset.z[train_idx],
        column_kinds=dataset.column_kinds,
        names=dataset.names,
    )
    test_X = dataset.X[test_idx]
    pairs = config.resolved_pairs()
    out = {"rep": rep, "mse": {}, "scores": {}, "score_names": (), "errors": {}}
    chain = None
    if "shared_rbf" in config.methods:
        try:
            chain_config = replace(config.chain, seed=_chain_seed(config.seed, rep))
            chain = fit_model(train, chain_config)
            for pair in pairs:
                tau_hat = posterior_mean_cate(chain, test_X, *pair)
                out["mse"][("shared_rbf", pair)] = mse(tau_hat, truth.tau(*pair), test_idx)
            if config.blp_thresholds is not None:
                for pair in pairs:
                    summ = blp_summary(chain, train, *pair, thresholds=config.blp_thresholds)
                    out["scores"][pair] = summ.scores
                    out["score_names"] = summ.names
        except Exception as exc:  # noqa: BLE001 - a failed replication must not kill the batch
            out["errors"]["shared_rbf"] = f"{type(exc).__name__}: {exc}"
    for method in config.methods:
        if method == "shared_rbf":
            continue
        try:
            surfaces = BASELINES[method](train, test_X)
            for pair in pairs:
                tau_hat = surfaces[:, pair[0] - 1] - surfaces[:, pair[1] - 1]
                out["mse"][(method, pair)] = mse(tau_hat, truth.tau(*pair), test_idx)
        except Exception as exc:  # noqa: BLE001
            out["errors"][method] = f"{type(exc).__name__}: {exc}"
    return out


def worker_count(replications: int) -> int:
    cap = os.environ.get("SHAREDRBF_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(replications, limit, os.cpu_count() or 1))


def run_replications(config: SimConfig) -> SimReport:
    """Run the full batch; failed method/replication pairs are warned about
    and excluded, never fatal.  Deterministic given config.seed."""
    reps = range(1, config.replications + 1)
    workers = worker_count(config.replications)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one_replication, [config] * len(reps), reps))
    else:
        results = [_run_one_replication(config, rep) for rep in reps]
    results.sort(key=lambda r: r["rep"])
    mses: dict = {}
    scores: dict = {}
    score_names: tuple = ()
    failures = []
    for result in results:
        for key, value in result["mse"].items():
            mses.setdefault(key, []).append((result["rep"], value))
        for pair, matrix in result["scores"].items():
            scores[(pair, result["rep"])] = matrix
        if result["score_names"]:
            score_names = result["score_names"]
        for method, message in result["errors"].items():
            failures.append((result["rep"], method, message))
            warnings.warn(
                f"replication {result['rep']}, method {method} failed: {message}",
                stacklevel=2,
            )
    return SimReport(
        mses=mses,
        pairs=config.resolved_pairs(),
        methods=tuple(config.methods),
        replications=config.replications,
        scores=scores,
        score_names=score_names,
        score_thresholds=tuple(config.blp_thresholds or ()),
        failures=tuple(failures),
    )


def load_covariates_csv(path):
    """Covariate file for from_covariates mode: a `treatment` column plus
    numeric covariate columns (no outcome)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = list(reader)
    if "treatment" not in header:
        raise ValueError(f"{path}: missing 'treatment' column")
    t_col = header.index("treatment")
    cov_cols = [j for j in range(len(header)) if j != t_col]
    X = np.array([[float(r[j]) for j in cov_cols] for r in rows])
    z = np.array([int(r[t_col]) for r in rows])
    return X, z
