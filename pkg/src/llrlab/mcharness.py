"""Monte-Carlo learning-curve engine.

The population setup is two unit-covariance multinormal classes with means
0 and c*1; c is calibrated per dimensionality so the squared Mahalanobis
separation (and hence the asymptotic Bayes AUC) is the same for every p.
A trial trains the plug-in Bayes rule on n samples per class, then scores
both the training sample itself (apparent AUC) and a fresh pseudo-infinite
test sample (true AUC).

Every trial draws from a stream derived from (base_seed, p, n, trial), so
results are bitwise identical regardless of execution order or parallelism.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import smallmat
from .bayesllr import TwoClassProblem, llr_scores
from .csvio import csv_text, fmt17
from .errors import ConditioningError, ContractError, InsufficientDataError, LlrLabError
from .gaussmodel import GaussianParams, SeededRng, estimate_params, mvn_sample
from .rocauc import ScoreSet, empirical_auc

#: Stream-derivation roles within one trial (mixed in after the attempt index).
_ROLE_TRAIN1, _ROLE_TRAIN2, _ROLE_TEST1, _ROLE_TEST2 = 1, 2, 3, 4

_MAX_RETRIES = 3


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid and budget of a learning-curve experiment."""

    dims: tuple = (3, 7, 11)
    train_sizes: tuple = (20, 50, 100, 500, 2000)
    n_trials: int = 100
    test_size: int = 1000
    target_delta_sq: float = 0.8
    base_seed: int = 2

    def __post_init__(self):
        dims = tuple(int(p) for p in self.dims)
        sizes = tuple(int(n) for n in self.train_sizes)
        if not dims or any(p < 1 for p in dims):
            raise ContractError("dims must be a non-empty list of counts >= 1")
        if not sizes or any(n < 1 for n in sizes):
            raise ContractError("train_sizes must be a non-empty list of counts >= 1")
        if any(n <= max(dims) for n in sizes):
            raise ContractError(
                f"every training size must exceed max(dims)={max(dims)} for estimability"
            )
        if int(self.n_trials) < 1 or int(self.test_size) < 1:
            raise ContractError("n_trials and test_size must be >= 1")
        if not float(self.target_delta_sq) > 0.0:
            raise ContractError("target_delta_sq must be positive")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "train_sizes", sizes)
        object.__setattr__(self, "n_trials", int(self.n_trials))
        object.__setattr__(self, "test_size", int(self.test_size))
        object.__setattr__(self, "target_delta_sq", float(self.target_delta_sq))
        object.__setattr__(self, "base_seed", int(self.base_seed))

    def rng(self) -> SeededRng:
        return SeededRng(self.base_seed)


@dataclass(frozen=True)
class TrialResult:
    """AUC pair from one Monte-Carlo trial."""

    auc_true: float
    auc_apparent: float
    n: int
    p: int
    trial_index: int


@dataclass(frozen=True)
class CurveRow:
    """Across-trial summary at one (dimensionality, training size) cell."""

    p: int
    n: int
    mean_auc_true: float
    mean_auc_apparent: float
    var_auc_true: float
    var_auc_apparent: float
    n_trials: int


@dataclass(frozen=True)
class CurveSummary:
    """Learning-curve table, ordered by p ascending then n ascending."""

    rows: tuple

    def to_csv(self) -> str:
        """Schema: p,n,mean_auc_true,mean_auc_apparent,var_auc_true,var_auc_apparent,n_trials."""
        out = [
            (
                str(r.p),
                str(r.n),
                fmt17(r.mean_auc_true),
                fmt17(r.mean_auc_apparent),
                fmt17(r.var_auc_true),
                fmt17(r.var_auc_apparent),
                str(r.n_trials),
            )
            for r in self.rows
        ]
        header = (
            "p",
            "n",
            "mean_auc_true",
            "mean_auc_apparent",
            "var_auc_true",
            "var_auc_apparent",
            "n_trials",
        )
        return csv_text(header, out)

    def cell(self, p: int, n: int) -> CurveRow:
        for r in self.rows:
            if r.p == p and r.n == n:
                return r
        raise KeyError(f"no cell (p={p}, n={n})")


def calibrate_c(p: int, target_delta_sq: float) -> float:
    """Mean offset c with squared Mahalanobis separation c^2 p = target."""
    p = int(p)
    if p < 1:
        raise ContractError(f"dimensionality must be >= 1, got {p}")
    target = float(target_delta_sq)
    if not target > 0.0:
        raise ContractError(f"target separation must be positive, got {target}")
    return float(np.sqrt(target / p))


def asymptotic_auc(target_delta_sq: float) -> float:
    """Equal-covariance Bayes AUC at squared separation delta_sq: Phi(delta/sqrt(2))."""
    target = float(target_delta_sq)
    if not target > 0.0:
        raise ContractError(f"target separation must be positive, got {target}")
    return smallmat.std_normal_cdf(np.sqrt(target) / np.sqrt(2.0))


def population(p: int, c: float) -> TwoClassProblem:
    """The simulation population: mu1 = 0, mu2 = c*1, identity covariances."""
    eye = np.eye(int(p))
    return TwoClassProblem(
        class1=GaussianParams(np.zeros(int(p)), eye),
        class2=GaussianParams(np.full(int(p), float(c)), eye),
    )


def run_trial(p: int, n: int, c: float, test_size: int, rng: SeededRng) -> TrialResult:
    """One Monte-Carlo trial: sample, fit, and score both ways.

    A rank-deficient training scatter is retried on the next derived
    sub-stream at most three times before the error surfaces with trial
    provenance.  The result is a pure function of the arguments.
    """
    p, n, test_size = int(p), int(n), int(test_size)
    if n <= p:
        raise ContractError(f"need n > p for an estimable covariance, got n={n}, p={p}")
    pop = population(p, c)

    last_err = None
    for attempt in range(_MAX_RETRIES + 1):
        train1 = mvn_sample(pop.class1, n, rng.derive(_ROLE_TRAIN1, attempt))
        train2 = mvn_sample(pop.class2, n, rng.derive(_ROLE_TRAIN2, attempt))
        try:
            fitted = TwoClassProblem(
                class1=estimate_params(train1), class2=estimate_params(train2)
            )
        except (ConditioningError, InsufficientDataError) as err:
            last_err = err
            continue
        test1 = mvn_sample(pop.class1, test_size, rng.derive(_ROLE_TEST1, attempt))
        test2 = mvn_sample(pop.class2, test_size, rng.derive(_ROLE_TEST2, attempt))
        apparent = ScoreSet(llr_scores(train1, fitted), llr_scores(train2, fitted))
        true = ScoreSet(llr_scores(test1, fitted), llr_scores(test2, fitted))
        return TrialResult(
            auc_true=empirical_auc(true),
            auc_apparent=empirical_auc(apparent),
            n=n,
            p=p,
            trial_index=0,
        )
    raise ConditioningError(
        f"parameter estimation failed after {_MAX_RETRIES + 1} attempts at p={p}, n={n}"
    ) from last_err


def _summarize(p: int, n: int, results: list[TrialResult]) -> CurveRow:
    true = np.array([r.auc_true for r in results])
    app = np.array([r.auc_apparent for r in results])
    if len(results) > 1:
        var_true = float(np.var(true, ddof=1))
        var_app = float(np.var(app, ddof=1))
    else:
        var_true = var_app = float("nan")
    return CurveRow(
        p=p,
        n=n,
        mean_auc_true=float(true.mean()),
        mean_auc_apparent=float(app.mean()),
        var_auc_true=var_true,
        var_auc_apparent=var_app,
        n_trials=len(results),
    )


def learning_curve(config: ExperimentConfig, max_workers: int | None = None) -> CurveSummary:
    """Mean and variance of true and apparent AUC over the whole grid.

    Trials are independent; with max_workers set they run on a thread pool,
    and the aggregation is keyed by (p, n, trial) so the summary does not
    depend on the schedule.
    """
    base = config.rng()
    specs = [
        (p, n, t)
        for p in sorted(config.dims)
        for n in sorted(config.train_sizes)
        for t in range(config.n_trials)
    ]

    def one(spec):
        p, n, t = spec
        c = calibrate_c(p, config.target_delta_sq)
        try:
            result = run_trial(p, n, c, config.test_size, base.derive(p, n, t))
        except LlrLabError as err:
            raise type(err)(f"trial (p={p}, n={n}, trial={t}) failed: {err}") from err
        return TrialResult(result.auc_true, result.auc_apparent, n, p, t)

    if max_workers is None:
        results = [one(spec) for spec in specs]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(one, specs))

    by_cell = {}
    for r in results:
        by_cell.setdefault((r.p, r.n), []).append(r)
    rows = []
    for p in sorted(config.dims):
        for n in sorted(config.train_sizes):
            cell = sorted(by_cell[(p, n)], key=lambda r: r.trial_index)
            rows.append(_summarize(p, n, cell))
    return CurveSummary(rows=tuple(rows))


def variance_study(config: ExperimentConfig, max_workers: int | None = None) -> CurveSummary:
    """Learning curve restricted to a single dimensionality.

    The interesting column is var_auc_true as a function of n.
    """
    if len(config.dims) != 1:
        raise ContractError(f"variance study needs exactly one dimensionality, got {config.dims}")
    return learning_curve(config, max_workers=max_workers)
