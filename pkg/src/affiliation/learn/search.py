"""Inner hyperparameter search with dyad-grouped, repeated k-fold CV."""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from ..core import Dataset
from ..metrics import score
from .models import ConfigError, ModelConfig, expand_grid, fit_arrays, standardizer
from .svm import DegenerateTrainingSet, sq_distances, svc_dual, svr_dual


def grouped_folds(data: Dataset, folds: int, rng: np.random.Generator, task: str) -> list[np.ndarray]:
    """Assign whole dyads to ``folds`` folds; returns the test indices of each fold.

    Dyads are shuffled, ordered by their number of ``high`` members for
    classification (so folds get similar class mixes), and dealt round-robin.
    """
    dyads = data.dyads()
    k = min(folds, len(dyads))
    perm = rng.permutation(len(dyads))
    ordered = [dyads[i] for i in perm]
    if task == "classify":
        labels = dict()
        for d, lab in zip(data.dyad_ids, data.labels):
            labels[d] = labels.get(d, 0) + int(lab)
        ordered.sort(key=lambda d: labels[d])  # stable: keeps the shuffle within strata
    fold_of = {d: i % k for i, d in enumerate(ordered)}
    ids = np.array([fold_of[d] for d in data.dyad_ids])
    return [np.flatnonzero(ids == f) for f in range(k)]


def fold_plan(data: Dataset, folds: int, repeats: int, seed: int, task: str) -> list[list[tuple[np.ndarray, int]]]:
    """Per repeat, the (test indices, fit seed) of every fold."""
    rng = np.random.default_rng(seed)
    plan = []
    for _ in range(repeats):
        rep = []
        for test in grouped_folds(data, folds, rng, task):
            rep.append((test, int(rng.integers(2**31))))
        plan.append(rep)
    return plan


def _matrix(data: Dataset, features: Sequence[str], task: str) -> tuple[np.ndarray, np.ndarray]:
    X = data.X[:, [data.schema.index(f) for f in features]]
    y = (data.labels if task == "classify" else data.affiliation).astype(float)
    return X, y


def _aggregate(task: str, preds: list[np.ndarray], y: np.ndarray) -> float:
    """Mean over repeats of the pooled score; a degenerate repeat counts as -inf."""
    results = []
    for pred in preds:
        value, degenerate = score(task, pred, y)
        results.append(-np.inf if degenerate else value)
    return float(np.mean(results))


def cv_score(config: ModelConfig, data: Dataset, features: Sequence[str], folds: int,
             repeats: int, seed: int) -> float:
    """Mean over repeats of the metric on predictions pooled across folds."""
    X, y = _matrix(data, features, config.task)
    plan = fold_plan(data, folds, repeats, seed, config.task)
    return _plan_score(config, X, y, plan)


def _plan_score(config: ModelConfig, X: np.ndarray, y: np.ndarray, plan) -> float:
    n = len(y)
    preds = []
    for rep in plan:
        pred = np.empty(n)
        for test, fit_seed in rep:
            train = np.setdiff1d(np.arange(n), test)
            model = fit_arrays(config.with_seed(fit_seed), X[train], y[train])
            pred[test] = model.predict_selected(X[test])
        preds.append(pred)
    if config.task == "classify":
        preds = [p.astype(int) for p in preds]
        y = y.astype(int)
    return _aggregate(config.task, preds, y)


def _kernel_plan_scores(points: list[dict], task: str, X: np.ndarray, y: np.ndarray, plan) -> np.ndarray:
    """CV score of every kernel grid point, sharing distances and kernels across points.

    Equivalent to fitting each point separately: per fold the training matrix
    is standardized once, each distinct gamma gives one kernel matrix, and
    only the dual solve runs per (gamma, C).
    """
    n = len(y)
    cfgs = [ModelConfig("kernel_margin", task, p) for p in points]
    gammas = sorted({float(c.hyperparameters["gamma"]) for c in cfgs})
    preds = np.empty((len(cfgs), len(plan), n))
    for r, rep in enumerate(plan):
        for test, _ in rep:
            train = np.setdiff1d(np.arange(n), test)
            center, scale = standardizer(X[train])
            xs_tr = (X[train] - center) / scale
            xs_te = (X[test] - center) / scale
            d_tr = sq_distances(xs_tr, xs_tr)
            d_te = sq_distances(xs_te, xs_tr)
            y_tr = y[train]
            if task == "classify" and len(np.unique(y_tr)) < 2:
                raise DegenerateTrainingSet("margin classifier needs both classes in the training set")
            for g in gammas:
                K = np.exp(-g * d_tr)
                Kt = np.exp(-g * d_te)
                for i, cfg in enumerate(cfgs):
                    hp = cfg.hyperparameters
                    if float(hp["gamma"]) != g:
                        continue
                    if task == "classify":
                        coef, rho, _ = svc_dual(K, y_tr, float(hp["C"]))
                        preds[i, r, test] = (Kt @ coef - rho > 0).astype(float)
                    else:
                        coef, rho, _ = svr_dual(K, y_tr, float(hp["C"]), float(hp["epsilon"]))
                        preds[i, r, test] = Kt @ coef - rho
    if task == "classify":
        return np.array([_aggregate(task, list(p.astype(int)), y.astype(int)) for p in preds])
    return np.array([_aggregate(task, list(p), y) for p in preds])


def grid_search(
    data: Dataset,
    family: str,
    task: str,
    grid: dict[str, Sequence],
    features: Sequence[str],
    folds: int = 10,
    repeats: int = 3,
    seed: int = 0,
) -> dict[str, Any]:
    """Best grid point by repeated grouped k-fold CV; ties keep the earlier point.

    Every grid point sees the same folds.
    """
    points = expand_grid(grid)
    if not points:
        raise ConfigError("empty hyperparameter grid")
    if len(points) == 1:
        return dict(points[0])
    if len(data) < folds:
        raise ValueError(f"need at least {folds} samples for {folds}-fold search")
    X, y = _matrix(data, features, task)
    plan = fold_plan(data, folds, repeats, seed, task)
    if family == "kernel_margin":
        scores = _kernel_plan_scores(points, task, X, y, plan)
    else:
        scores = np.array([_plan_score(ModelConfig(family, task, p, seed), X, y, plan) for p in points])
    best = int(np.flatnonzero(scores == scores.max())[0]) if np.isfinite(scores).any() else 0
    return dict(points[best])
