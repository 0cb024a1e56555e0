"""Leave-two-dyads-out evaluation, feature subsets and recursive feature elimination."""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .core import CATEGORIES, Dataset, FeatureSchema
from .learn.imputation import ImputationError, fit_imputer, impute_dataset
from .learn.models import ModelConfig, default_grid, train
from .learn.search import grid_search
from .metrics import f1_score, r2_score, score  # noqa: F401  (re-exported)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitPlan:
    splits: tuple[tuple[tuple[str, str], tuple[str, ...]], ...]

    def __len__(self) -> int:
        return len(self.splits)

    def indices(self, data: Dataset) -> list[tuple[np.ndarray, np.ndarray]]:
        """(train, test) row indices of ``data`` for every split."""
        dyad = np.array(data.dyad_ids)
        out = []
        for test_dyads, _ in self.splits:
            test = np.isin(dyad, test_dyads)
            out.append((np.flatnonzero(~test), np.flatnonzero(test)))
        return out


def make_split_plan(dataset: Dataset) -> SplitPlan:
    """Every unordered pair of dyads serves once as the test set."""
    dyads = dataset.dyads()
    if len(dyads) < 3:
        raise ValueError(f"need at least 3 dyads for leave-2-dyads-out CV, got {len(dyads)}")
    splits = []
    for pair in itertools.combinations(dyads, 2):
        rest = tuple(d for d in dyads if d not in pair)
        splits.append((pair, rest))
    return SplitPlan(tuple(splits))


def subsample_plan(plan: SplitPlan, n: int, seed: int = 0) -> SplitPlan:
    """A random subset of ``n`` splits (kept in original order), for quick runs."""
    if n >= len(plan):
        return plan
    keep = np.sort(np.random.default_rng(seed).choice(len(plan), n, replace=False))
    return SplitPlan(tuple(plan.splits[i] for i in keep))


def category_subset(schema: FeatureSchema, category: str) -> tuple[str, ...]:
    if category not in CATEGORIES:
        raise ValueError(f"unknown feature category {category!r}; expected one of {CATEGORIES}")
    return tuple(n for n, c in schema.entries if c == category)


@dataclass
class CVScores:
    """Scores indexed by (repetition, split); NaN where the test fold was degenerate."""

    metric: str
    scores: np.ndarray
    degenerate: np.ndarray
    pooled_per_repetition: np.ndarray
    failures: list[dict] = field(default_factory=list)
    hyperparameters: list[list[dict]] = field(default_factory=list)

    @property
    def valid_scores(self) -> np.ndarray:
        return self.scores[~self.degenerate & np.isfinite(self.scores)]

    def summary(self) -> dict[str, Any]:
        v = self.valid_scores
        p = self.pooled_per_repetition
        return {
            "mean": float(v.mean()) if v.size else None,
            "sd": float(v.std(ddof=1)) if v.size > 1 else None,
            "pooled_mean": float(p.mean()) if p.size else None,
            "pooled_sd": float(p.std(ddof=1)) if p.size > 1 else None,
            "n_scores": int(v.size),
            "n_degenerate": int(self.degenerate.sum()),
            "n_failed": len(self.failures),
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "metric": self.metric,
            "repeats": int(self.scores.shape[0]),
            "splits": int(self.scores.shape[1]),
            "summary": self.summary(),
            "pooled_per_repetition": [float(x) for x in self.pooled_per_repetition],
            "scores": [[None if not np.isfinite(x) else float(x) for x in row] for row in self.scores],
            "degenerate": self.degenerate.astype(int).tolist(),
            "failures": self.failures,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CVScores":
        scores = np.array([[np.nan if x is None else x for x in row] for row in d["scores"]], dtype=float)
        return cls(d["metric"], scores, np.asarray(d["degenerate"], dtype=bool),
                   np.asarray(d["pooled_per_repetition"], dtype=float), list(d.get("failures", [])))


def _seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) % (2**32) for p in parts]).generate_state(1)[0])


@dataclass(frozen=True)
class _Fold:
    train: Dataset
    test: Dataset
    error: str | None = None


def _prepare_folds(dataset: Dataset, plan: SplitPlan, imputation: str) -> list[_Fold]:
    """Imputed (train, test) pairs; imputation does not depend on the repetition."""
    folds = []
    if imputation == "global":
        # one imputer for the whole table: it sees the test samples (leaks)
        model = fit_imputer(dataset)
        full = impute_dataset(model, dataset)
    for train_idx, test_idx in plan.indices(dataset):
        if imputation == "global":
            folds.append(_Fold(full.subset(train_idx), full.subset(test_idx)))
            continue
        tr, te = dataset.subset(train_idx), dataset.subset(test_idx)
        if tr.valid.all() and te.valid.all():
            folds.append(_Fold(tr, te))
            continue
        try:
            imp = fit_imputer(tr)
        except ImputationError as exc:
            folds.append(_Fold(tr, te, str(exc)))
            continue
        folds.append(_Fold(impute_dataset(imp, tr), impute_dataset(imp, te)))
    return folds


def _run_repetition(args) -> tuple:
    folds, config, features, grid, tune, rep, seed, inner_folds, inner_repeats = args
    task = config.task
    n = len(folds)
    scores = np.full(n, np.nan)
    degenerate = np.zeros(n, dtype=bool)
    failures = []
    chosen = []
    pooled_pred, pooled_truth = [], []
    for s, fold in enumerate(folds):
        truth = fold.test.labels if task == "classify" else fold.test.affiliation
        try:
            if fold.error:
                raise ValueError(fold.error)
            params = dict(config.hyperparameters)
            if tune and grid:
                params.update(grid_search(fold.train, config.family, task, grid, features,
                                          inner_folds, inner_repeats, _seed(seed, rep, s, 1)))
            cfg = ModelConfig(config.family, task, params, _seed(seed, rep, s))
            model = train(cfg, fold.train, features)
            pred = model.predict(fold.test)
        except Exception as exc:  # recorded, never silently skipped
            failures.append({"repetition": rep, "split": s, "reason": f"{type(exc).__name__}: {exc}"})
            chosen.append({})
            continue
        chosen.append({k: params[k] for k in sorted(grid)} if tune and grid else {})
        value, deg = score(task, pred, truth)
        scores[s] = value
        degenerate[s] = deg
        pooled_pred.append(pred)
        pooled_truth.append(truth)
    if pooled_pred:
        pooled, _ = score(task, np.concatenate(pooled_pred), np.concatenate(pooled_truth))
    else:
        pooled = np.nan
    return scores, degenerate, pooled, failures, chosen


def run_cv(
    dataset: Dataset,
    config: ModelConfig,
    features: Sequence[str],
    plan: SplitPlan,
    repeats: int = 10,
    seed: int = 0,
    tune: bool = True,
    grid: dict | None = None,
    imputation: str = "fold",
    inner_folds: int = 10,
    inner_repeats: int = 3,
    jobs: int = 1,
) -> CVScores:
    """Repeated leave-two-dyads-out CV of one model configuration.

    Per split: impute (imputer fit on the training dyads unless
    ``imputation='global'``), optionally grid-search hyperparameters on the
    training dyads, fit, and score the four held-out samples. All test
    predictions of a repetition are also pooled into one score.

    ``tune=False`` skips the inner search and uses ``config.hyperparameters``
    as given.
    """
    if imputation not in ("fold", "global"):
        raise ValueError("imputation must be 'fold' or 'global'")
    features = tuple(features)
    if grid is None:
        grid = default_grid(config.family)
    folds = _prepare_folds(dataset, plan, imputation)
    jobs_args = [(folds, config, features, grid, tune, r, seed, inner_folds, inner_repeats)
                 for r in range(repeats)]
    if jobs > 1 and repeats > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_repetition, jobs_args))
    else:
        results = [_run_repetition(a) for a in jobs_args]

    metric = "f1" if config.task == "classify" else "r2"
    scores = np.vstack([r[0] for r in results]) if results else np.empty((0, len(plan)))
    degenerate = np.vstack([r[1] for r in results]) if results else np.empty((0, len(plan)), bool)
    failures = [f for r in results for f in r[3]]
    for f in failures:
        log.warning("split %(split)d of repetition %(repetition)d failed: %(reason)s", f)
    return CVScores(metric, scores, degenerate, np.array([r[2] for r in results]), failures,
                    [r[4] for r in results])


@dataclass
class RFEResult:
    optimal_features: tuple[str, ...]
    ranking: dict[str, int]  # 1 = eliminated first
    score_curve: list[tuple[int, float]]  # (n_features, mean pooled CV score), largest subset first

    def to_dict(self) -> dict[str, Any]:
        return {
            "optimal_features": list(self.optimal_features),
            "optimal_size": len(self.optimal_features),
            "ranking": dict(self.ranking),
            "score_curve": [{"n_features": k, "score": v} for k, v in self.score_curve],
        }


def rfe_cv(
    dataset: Dataset,
    plan: SplitPlan,
    repeats: int = 10,
    seed: int = 0,
    features: Sequence[str] | None = None,
    config: ModelConfig | None = None,
    jobs: int = 1,
) -> RFEResult:
    """Recursive feature elimination scored by leave-two-dyads-out CV.

    Starting from all features, each round scores the current subset with a
    forest regressor (mean of the per-repetition pooled R^2), fits the same
    forest on the full imputed data, and drops the feature with the lowest
    impurity importance. The optimum is the best-scoring subset, the smaller
    one on ties.
    """
    if config is None:
        config = ModelConfig("forest", "regress", seed=seed)
    features = list(features if features is not None else dataset.schema.names)
    full = dataset if dataset.valid.all() else impute_dataset(fit_imputer(dataset), dataset)
    curve: list[tuple[int, float]] = []
    subsets: list[tuple[str, ...]] = []
    ranking: dict[str, int] = {}
    step = 0
    while features:
        cv = run_cv(dataset, config, features, plan, repeats, seed, tune=False, jobs=jobs)
        pooled = cv.pooled_per_repetition
        mean = float(np.nanmean(pooled)) if np.isfinite(pooled).any() else -np.inf
        curve.append((len(features), mean))
        subsets.append(tuple(features))
        log.info("rfe: %d features, CV score %.4f", len(features), mean)
        step += 1
        if len(features) == 1:
            ranking[features[0]] = step
            break
        model = train(config.with_seed(_seed(seed, step)), full, features)
        imp = np.array([model.feature_importances[f] for f in features])
        worst = int(np.argmin(imp))
        ranking[features.pop(worst)] = step
    scores = np.array([v for _, v in curve])
    best = np.flatnonzero(scores == scores.max())[-1]  # later entries are smaller subsets
    return RFEResult(subsets[best], ranking, curve)


def results_document(config: dict, cells: dict[str, Any], timestamp: str | None = None) -> dict:
    """Results JSON with a fixed key order."""
    doc: dict[str, Any] = {"format": "affiliation-results", "version": 1}
    if timestamp is not None:
        doc["timestamp"] = timestamp
    doc["config"] = config
    doc["cells"] = cells
    return doc
