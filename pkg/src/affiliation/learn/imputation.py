"""Chained-equations imputation with ridge predictors.

Work happens on the standardized scale (training means and SDs). Missing
cells start at the column mean; features are then visited in ascending
order of missingness and each incomplete one is re-predicted from all the
others, sweep after sweep, until cells stop moving.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Dataset, FeatureVector


class ImputationError(ValueError):
    pass


@dataclass(frozen=True)
class ImputationModel:
    means: np.ndarray
    scales: np.ndarray
    order: np.ndarray  # feature visiting order
    coefs: np.ndarray  # (d, d), row j predicts feature j; diagonal is zero
    intercepts: np.ndarray
    ridge: float
    sweeps_run: int

    def transform(self, X: np.ndarray, valid: np.ndarray | None = None) -> np.ndarray:
        """Fill invalid cells in one pass over the features; valid cells are copied as is."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if valid is None:
            valid = np.isfinite(X)
        Z = (X - self.means) / self.scales
        Z[~valid] = 0.0
        for j in self.order:
            miss = ~valid[:, j]
            if miss.any():
                Z[miss, j] = self.intercepts[j] + Z[miss] @ self.coefs[j]
        out = Z * self.scales + self.means
        out[valid] = X[valid]
        return out


def _ridge(A: np.ndarray, b: np.ndarray, lam: float) -> tuple[np.ndarray, float]:
    """Ridge with an unpenalized intercept."""
    am = A.mean(axis=0)
    bm = b.mean()
    Ac = A - am
    n, d = Ac.shape
    if n < d:
        w = Ac.T @ np.linalg.solve(Ac @ Ac.T + lam * np.eye(n), b - bm)
    else:
        w = np.linalg.solve(Ac.T @ Ac + lam * np.eye(d), Ac.T @ (b - bm))
    return w, bm - am @ w


def fit_imputer_arrays(
    X: np.ndarray,
    valid: np.ndarray,
    ridge: float = 1.0,
    sweeps: int = 10,
    tol: float = 1e-3,
    names: list[str] | None = None,
) -> ImputationModel:
    X = np.asarray(X, dtype=float)
    valid = np.asarray(valid, dtype=bool)
    n, d = X.shape
    counts = valid.sum(axis=0)
    bad = np.flatnonzero(counts < 2)
    if bad.size:
        label = [names[j] for j in bad] if names else bad.tolist()
        raise ImputationError(f"cannot impute features valid in fewer than 2 samples: {label}")

    Xm = np.where(valid, X, 0.0)
    means = Xm.sum(axis=0) / counts
    sq = np.where(valid, (X - means) ** 2, 0.0).sum(axis=0)
    scales = np.sqrt(sq / np.maximum(counts - 1, 1))
    scales[scales == 0] = 1.0

    Z = np.where(valid, (X - means) / scales, 0.0)
    order = np.argsort(n - counts, kind="stable")
    incomplete = [j for j in order if counts[j] < n]
    others = [np.delete(np.arange(d), j) for j in range(d)]

    done = 0
    for _ in range(sweeps if incomplete else 0):
        done += 1
        change = 0.0
        for j in incomplete:
            rows = valid[:, j]
            w, b = _ridge(Z[rows][:, others[j]], Z[rows, j], ridge)
            new = b + Z[~rows][:, others[j]] @ w
            change = max(change, float(np.max(np.abs(new - Z[~rows, j]))))
            Z[~rows, j] = new
        if change < tol:
            break

    coefs = np.zeros((d, d))
    intercepts = np.zeros(d)
    for j in range(d):
        rows = valid[:, j]
        w, b = _ridge(Z[rows][:, others[j]], Z[rows, j], ridge)
        coefs[j, others[j]] = w
        intercepts[j] = b
    return ImputationModel(means, scales, order, coefs, intercepts, float(ridge), done)


def fit_imputer(train: Dataset, ridge: float = 1.0, sweeps: int = 10) -> ImputationModel:
    return fit_imputer_arrays(train.X, train.valid, ridge, sweeps, names=list(train.schema.names))


def impute(model: ImputationModel, x: FeatureVector) -> FeatureVector:
    filled = model.transform(x.values[None, :], x.valid[None, :])[0]
    return FeatureVector(filled, np.ones(len(filled), dtype=bool))


def impute_dataset(model: ImputationModel, data: Dataset) -> Dataset:
    filled = model.transform(data.X, data.valid)
    return data.with_matrix(filled, np.ones_like(filled, dtype=bool))
