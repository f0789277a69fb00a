"""
Pairwise ranking model.

A reference sentence and each of its variants become one training row
holding the difference of their feature vectors; a logistic regression on
those rows learns weights w with w . (phi(reference) - phi(variant)) > 0.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from scipy.stats import norm
from statsmodels.stats.contingency_tables import mcnemar

from treebank.variants import SeedPolicy
from .exceptions import AnalysisError, FoldError, RankDeficientError, UndefinedStatisticError

logger = logging.getLogger(__name__)

FEATURES = ('cl_last', 'total_dl')
INTERCEPT = 'intercept'

NORM_GUARD = 1e6
STEP_TOL = 1e-6
WEIGHT_FLOOR = 1e-10
PLATEAU_TOL = 1e-10
SEPARATION_STEP = 1e-3
EXACT_MCNEMAR_BELOW = 25
VIF_CAP = 1e12


@dataclass(frozen=True)
class FeatureVector:
    values: dict

    def __post_init__(self):
        for name, value in self.values.items():
            if not math.isfinite(value):
                raise AnalysisError(f"feature {name!r} is not finite: {value}")

    @classmethod
    def from_record(cls, record, features=FEATURES):
        return cls({name: getattr(record, name) for name in features})

    @property
    def names(self):
        return tuple(self.values)

    def __getitem__(self, name):
        return self.values[name]

    def __sub__(self, other):
        return FeatureVector({name: self.values[name] - other.values[name] for name in self.values})

    def __neg__(self):
        return FeatureVector({name: -value for name, value in self.values.items()})


@dataclass(frozen=True)
class PairRecord:
    sent_id: str
    delta: FeatureVector
    label: int

    def flipped(self):
        return PairRecord(self.sent_id, -self.delta, 1 - self.label)


@dataclass(frozen=True)
class ModelFit:
    features: tuple
    coefficients: dict
    std_errors: dict
    z_scores: dict
    p_values: dict
    log_likelihood: float
    iterations: int
    converged: bool
    norm_guard: bool = False
    gradient_max_norm: float = math.nan

    def decision(self, X):
        """w . x + intercept for each row of ``X`` (columns in ``features`` order)"""
        X = np.asarray(X, dtype=float).reshape(-1, len(self.features))
        weights = np.array([self.coefficients[name] for name in self.features])
        return X @ weights + self.coefficients.get(INTERCEPT, 0.0)

    def predict(self, X):
        return (self.decision(X) >= 0).astype(int)


@dataclass(frozen=True)
class CVReport:
    features: tuple
    fold_accuracies: tuple
    mean_accuracy: float
    # correct[i] is True iff pair i (input order) was classified correctly in its test fold
    correct: tuple = field(repr=False)


@dataclass(frozen=True)
class McNemarResult:
    statistic: float
    p_value: float
    exact: bool
    undefined: bool = False


@dataclass(frozen=True)
class VarianceInflation:
    feature: str
    value: float
    capped: bool = False


def build_pairs(reference, variants, sent_id):
    """Alternate orientation starting reference-first so labels stay balanced within the group"""
    pairs = []
    for k, variant in enumerate(variants):
        if k % 2 == 0:
            pairs.append(PairRecord(sent_id, reference - variant, 1))
        else:
            pairs.append(PairRecord(sent_id, variant - reference, 0))
    return pairs


def design_matrix(pairs, features):
    X = np.array([[pair.delta[name] for name in features] for pair in pairs], dtype=float)
    y = np.array([pair.label for pair in pairs], dtype=float)
    return X.reshape(len(pairs), len(features)), y


def _check_rank(design, names):
    for j in range(1, design.shape[1] + 1):
        if np.linalg.matrix_rank(design[:, :j]) < j:
            raise RankDeficientError(names[j - 1])


def _log_likelihood(eta, y):
    return float(-np.sum(y * np.logaddexp(0, -eta) + (1 - y) * np.logaddexp(0, eta)))


def _irls(design, y, max_iter, tol):
    """Newton iterations on the logistic log-likelihood.

    Returns ``(beta, iterations, converged, separated)``. Complete separation
    shows up as collapsing weights or a runaway norm; quasi-complete
    separation as a likelihood that has stopped improving while the step
    stays large and some fitted probabilities sit at 0 or 1.
    """
    beta = np.zeros(design.shape[1])
    if design.shape[1] == 0:
        return beta, 0, True, False

    previous = -np.inf
    for iteration in range(1, max_iter + 1):
        eta = design @ beta
        p = expit(eta)
        weights = p * (1 - p)
        if weights.max() < WEIGHT_FLOOR:
            return beta, iteration, False, True
        score = design.T @ (y - p)
        information = design.T @ (design * weights[:, None])
        try:
            step = np.linalg.solve(information, score)
        except np.linalg.LinAlgError:
            return beta, iteration, False, True
        if np.max(np.abs(score)) < tol and np.max(np.abs(step)) < STEP_TOL:
            return beta, iteration, True, False

        log_likelihood = _log_likelihood(eta, y)
        if (log_likelihood - previous <= PLATEAU_TOL * (1 + abs(log_likelihood))
                and np.max(np.abs(step)) > SEPARATION_STEP
                and np.any(weights < WEIGHT_FLOOR)):
            return beta, iteration, False, True
        previous = log_likelihood

        candidate = beta + step
        if not np.all(np.isfinite(candidate)):
            return beta, iteration, False, True
        beta = candidate
        if np.linalg.norm(beta) > NORM_GUARD:
            return beta, iteration, False, True

    p = expit(design @ beta)
    return beta, max_iter, False, bool(np.any(p * (1 - p) < WEIGHT_FLOOR))


def _likelihood_ratio(design, y, beta, log_likelihood, max_iter, tol):
    """Signed root deviance of each column against the fit that drops it"""
    z_scores = np.zeros_like(beta)
    for j in range(design.shape[1]):
        restricted = np.delete(design, j, axis=1)
        restricted_beta = _irls(restricted, y, max_iter, tol)[0]
        deviance = max(0.0, 2 * (log_likelihood - _log_likelihood(restricted @ restricted_beta, y)))
        z_scores[j] = np.sign(beta[j]) * math.sqrt(deviance)
    return z_scores


def fit_logistic(rows, labels, features=None, intercept=True, max_iter=100, tol=1e-8):
    """Maximum-likelihood logistic regression by iteratively reweighted least squares.

    Stops as soon as the score is below ``tol`` and the Newton step below
    1e-6. Separable data has no finite optimum: the fit is cut off and
    reported with ``converged=False, norm_guard=True``, and its z-scores and
    p-values come from likelihood-ratio tests instead of Wald tests.
    Standard errors use the pseudo-inverse of the information matrix.
    """
    X = np.asarray(rows, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(labels, dtype=float)
    n, k = X.shape
    features = tuple(features or (f"x{j}" for j in range(k)))
    if len(features) != k:
        raise AnalysisError(f"{len(features)} feature names for {k} columns")
    if n < 2 or len(y) != n:
        raise AnalysisError(f"need >= 2 rows with one label each, got {n} rows and {len(y)} labels")
    if not np.isin(y, (0, 1)).all():
        raise AnalysisError("labels must be 0 or 1")

    names = ((INTERCEPT,) if intercept else ()) + features
    design = np.column_stack([np.ones(n), X]) if intercept else X
    _check_rank(design, names)

    beta, iteration, converged, norm_guard = _irls(design, y, max_iter, tol)
    if norm_guard:
        logger.warning(f"Logistic fit on {features} stopped at iteration {iteration}: data look separable")
    elif not converged:
        logger.warning(f"Logistic fit on {features} did not converge in {max_iter} iterations")

    eta = design @ beta
    p = expit(eta)
    log_likelihood = _log_likelihood(eta, y)
    information = design.T @ (design * (p * (1 - p))[:, None])
    std_errors = np.sqrt(np.clip(np.diag(np.linalg.pinv(information, hermitian=True)), 0, None))

    if norm_guard or not np.all(std_errors > 0):
        z_scores = _likelihood_ratio(design, y, beta, log_likelihood, max_iter, tol)
    else:
        z_scores = beta / std_errors
    p_values = 2 * norm.sf(np.abs(z_scores))

    return ModelFit(
        features=features,
        coefficients=dict(zip(names, beta.tolist())),
        std_errors=dict(zip(names, std_errors.tolist())),
        z_scores=dict(zip(names, z_scores.tolist())),
        p_values=dict(zip(names, p_values.tolist())),
        log_likelihood=log_likelihood,
        iterations=iteration,
        converged=converged,
        norm_guard=norm_guard,
        gradient_max_norm=float(np.max(np.abs(design.T @ (y - p)))),
    )


class Standardizer:
    """Column-wise z-scoring with parameters fitted on one matrix and applied to others"""

    def __init__(self, X):
        X = np.asarray(X, dtype=float)
        if X.shape[0] < 2:
            raise UndefinedStatisticError("z-scoring needs at least 2 rows")
        self.mean = X.mean(axis=0)
        self.scale = X.std(axis=0, ddof=1)
        if np.any(self.scale == 0):
            raise UndefinedStatisticError("z-scoring a feature column with zero spread")

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale


def fit_pairs(pairs, features, **options):
    """Fit on every pair, z-scoring the delta columns over the whole set"""
    X, y = design_matrix(pairs, features)
    return fit_logistic(Standardizer(X).transform(X), y, features=features, **options)


def assign_folds(sent_ids, k, seed):
    """Map each reference group to a fold; groups are shuffled by the seeded ``cv`` stream"""
    groups = sorted(set(sent_ids))
    if k < 2:
        raise FoldError(f"cross-validation needs at least 2 folds, got {k}")
    if len(groups) < k:
        raise FoldError(f"{len(groups)} reference groups cannot fill {k} folds")
    rng = SeedPolicy(seed).rng('folds', 'cv')
    return {groups[index]: rank % k for rank, index in enumerate(rng.permutation(len(groups)))}


def cross_validate(pairs, k=10, seed=0, features=None, **options):
    """k-fold cross-validation with whole reference groups per fold"""
    if not pairs:
        raise FoldError("no pairs to cross-validate")
    features = tuple(features or pairs[0].delta.names)
    fold_of = assign_folds([pair.sent_id for pair in pairs], k, seed)
    folds = np.array([fold_of[pair.sent_id] for pair in pairs])
    X, y = design_matrix(pairs, features)

    correct = np.zeros(len(pairs), dtype=bool)
    accuracies = []
    for fold in range(k):
        test = folds == fold
        train = ~test
        standardizer = Standardizer(X[train])
        fit = fit_logistic(standardizer.transform(X[train]), y[train], features=features, **options)
        predicted = fit.predict(standardizer.transform(X[test]))
        correct[test] = predicted == y[test]
        accuracies.append(100.0 * float(correct[test].mean()))
        logger.debug(f"Fold {fold} on {features}: {accuracies[-1]:.2f}%")

    return CVReport(
        features=features,
        fold_accuracies=tuple(accuracies),
        mean_accuracy=float(np.mean(accuracies)),
        correct=tuple(bool(c) for c in correct),
    )


def mcnemar_test(b, c):
    """Two-tailed McNemar test on the discordant counts of two classifiers.

    Exact binomial below 25 discordant items, continuity-corrected
    chi-square otherwise.
    """
    if b < 0 or c < 0:
        raise UndefinedStatisticError(f"discordant counts must be >= 0, got b={b}, c={c}")
    if b + c == 0:
        return McNemarResult(statistic=0.0, p_value=1.0, exact=True, undefined=True)
    exact = b + c < EXACT_MCNEMAR_BELOW
    result = mcnemar([[0, b], [c, 0]], exact=exact, correction=True)
    return McNemarResult(statistic=float(result.statistic), p_value=float(result.pvalue), exact=exact)


def discordant_counts(correct_a, correct_b):
    """(b, c): items only model A got right, items only model B got right"""
    a = np.asarray(correct_a, dtype=bool)
    b = np.asarray(correct_b, dtype=bool)
    return int(np.sum(a & ~b)), int(np.sum(~a & b))


def vif(columns, names=None):
    """Variance inflation factor of each column regressed on the others (with intercept)"""
    X = np.asarray(columns, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    names = tuple(names or (f"x{j}" for j in range(k)))
    if k == 1:
        return [VarianceInflation(names[0], 1.0)]

    results = []
    for j in range(k):
        target = X[:, j]
        spread = np.sum((target - target.mean()) ** 2)
        if spread == 0:
            raise UndefinedStatisticError(f"VIF is undefined for constant column {names[j]!r}")
        others = np.column_stack([np.ones(n), np.delete(X, j, axis=1)])
        coef, *_ = np.linalg.lstsq(others, target, rcond=None)
        residual = np.sum((target - others @ coef) ** 2)
        unexplained = residual / spread
        if unexplained <= 1 / VIF_CAP:
            logger.warning(f"Column {names[j]!r} is perfectly collinear with the others; VIF capped at {VIF_CAP:g}")
            results.append(VarianceInflation(names[j], VIF_CAP, capped=True))
        else:
            results.append(VarianceInflation(names[j], float(1 / unexplained)))
    return results
