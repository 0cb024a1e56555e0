"""Model families, hyperparameter grids, training and serialization."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ..core import SCHEMA, Dataset, FeatureSchema
from .svm import DegenerateTrainingSet, KernelMachine, fit_svc, fit_svr
from .trees import MAX_FEATURES_CHOICES, Forest, fit_forest

FAMILIES = ("forest", "kernel_margin", "baseline_random", "baseline_mean")
TASKS = ("classify", "regress")
N_TREES = 128
SVR_EPSILON = 0.1
MODEL_FORMAT_VERSION = 1

FOREST_GRID = {
    "max_features": ["all", "sqrt", "log2"],
    "min_samples_leaf": [1, 2, 4, 8, 16],
    "min_samples_split": [2, 4, 8, 16],
}
_POWERS = [0.01, 0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0]
KERNEL_GRID = {"C": list(_POWERS), "gamma": list(_POWERS)}

DEFAULT_HYPERPARAMETERS = {
    "forest": {"max_features": "all", "min_samples_leaf": 1, "min_samples_split": 2},
    "kernel_margin": {"C": 1.0, "gamma": 0.01},
    "baseline_random": {},
    "baseline_mean": {},
}


def default_grid(family: str) -> dict[str, list]:
    return {"forest": FOREST_GRID, "kernel_margin": KERNEL_GRID}.get(family, {})


def expand_grid(grid: dict[str, Sequence]) -> list[dict[str, Any]]:
    """All grid points, first key varying slowest."""
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    family: str
    task: str
    hyperparameters: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown model family {self.family!r}")
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.family == "baseline_random" and self.task != "classify":
            raise ConfigError("baseline_random is a classification baseline")
        if self.family == "baseline_mean" and self.task != "regress":
            raise ConfigError("baseline_mean is a regression baseline")
        hp = {**DEFAULT_HYPERPARAMETERS[self.family], **self.hyperparameters}
        if self.family == "forest":
            if hp["max_features"] not in MAX_FEATURES_CHOICES:
                raise ConfigError(f"max_features must be one of {MAX_FEATURES_CHOICES}")
            if int(hp["min_samples_leaf"]) < 1 or int(hp["min_samples_split"]) < 2:
                raise ConfigError("min_samples_leaf >= 1 and min_samples_split >= 2 required")
            hp.setdefault("n_estimators", N_TREES)
        elif self.family == "kernel_margin":
            if float(hp["C"]) <= 0 or float(hp["gamma"]) <= 0:
                raise ConfigError("C and gamma must be positive")
            if self.task == "regress":
                hp.setdefault("epsilon", SVR_EPSILON)
        object.__setattr__(self, "hyperparameters", hp)

    def with_params(self, **params) -> "ModelConfig":
        return ModelConfig(self.family, self.task, {**self.hyperparameters, **params}, self.seed)

    def with_seed(self, seed: int) -> "ModelConfig":
        return ModelConfig(self.family, self.task, self.hyperparameters, seed)

    def to_dict(self) -> dict:
        return {"family": self.family, "task": self.task,
                "hyperparameters": dict(self.hyperparameters), "seed": self.seed}


@dataclass
class TrainedModel:
    family: str
    task: str
    hyperparameters: dict[str, Any]
    features: tuple[str, ...]
    feature_index: np.ndarray
    estimator: Any  # Forest | KernelMachine | float (mean) | int (seed)
    center: np.ndarray | None = None
    scale: np.ndarray | None = None
    schema_digest: str = ""

    def predict(self, X) -> np.ndarray:
        """Predictions for rows of a full-schema matrix (or a Dataset)."""
        return self.predict_selected(np.asarray(X.X if isinstance(X, Dataset) else X, dtype=float)
                                     [:, self.feature_index])

    def predict_selected(self, X: np.ndarray) -> np.ndarray:
        """Predictions for a matrix that holds only the model's features, in order."""
        Xs = np.asarray(X, dtype=float)
        if self.center is not None:
            Xs = (Xs - self.center) / self.scale
        if not np.all(np.isfinite(Xs)):
            raise ValueError("prediction input has missing values in the model's features")
        if self.family == "baseline_mean":
            return np.full(len(Xs), float(self.estimator))
        if self.family == "baseline_random":
            return np.random.default_rng(int(self.estimator)).integers(0, 2, len(Xs))
        return self.estimator.predict(Xs)

    @property
    def feature_importances(self) -> dict[str, float]:
        if not isinstance(self.estimator, Forest):
            raise TypeError("impurity importances are only defined for forests")
        return dict(zip(self.features, self.estimator.feature_importances.tolist()))


def standardizer(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column means and SDs of the training matrix (SD 1 for constant columns)."""
    center = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return center, scale


def _targets(data: Dataset, task: str) -> np.ndarray:
    return data.labels.astype(float) if task == "classify" else data.affiliation


def train(config: ModelConfig, data: Dataset, features: Sequence[str]) -> TrainedModel:
    """Fit one model on ``data`` restricted to ``features``.

    The data must already be complete (imputed) in the chosen features.
    """
    features = tuple(features)
    if not features:
        raise ConfigError("feature subset is empty")
    idx = np.array([data.schema.index(f) for f in features])
    return fit_arrays(config, data.X[:, idx], _targets(data, config.task), features, idx,
                      data.schema.digest())


def fit_arrays(config: ModelConfig, X: np.ndarray, y: np.ndarray, features: tuple[str, ...] = (),
               feature_index: np.ndarray | None = None, schema_digest: str = "") -> TrainedModel:
    """Fit on a matrix of the selected features; ``y`` is 0/1 or continuous by task."""
    if not np.all(np.isfinite(X)):
        raise ValueError("training data has missing values; impute first")
    if feature_index is None:
        feature_index = np.arange(X.shape[1])
    hp = config.hyperparameters
    common = dict(family=config.family, task=config.task, hyperparameters=dict(hp),
                  features=features, feature_index=feature_index, schema_digest=schema_digest)

    if config.family == "baseline_mean":
        return TrainedModel(estimator=float(y.mean()), **common)
    if config.family == "baseline_random":
        return TrainedModel(estimator=int(config.seed), **common)
    if config.family == "forest":
        est = fit_forest(
            X, y, classify=config.task == "classify", n_trees=int(hp["n_estimators"]),
            max_features=hp["max_features"], min_samples_split=int(hp["min_samples_split"]),
            min_samples_leaf=int(hp["min_samples_leaf"]), seed=config.seed,
        )
        return TrainedModel(estimator=est, **common)

    center, scale = standardizer(X)
    Xs = (X - center) / scale
    if config.task == "classify":
        est = fit_svc(Xs, y, C=float(hp["C"]), gamma=float(hp["gamma"]))
    else:
        est = fit_svr(Xs, y, C=float(hp["C"]), gamma=float(hp["gamma"]), epsilon=float(hp["epsilon"]))
    return TrainedModel(estimator=est, center=center, scale=scale, **common)


def model_to_dict(model: TrainedModel) -> dict:
    d: dict[str, Any] = {
        "format": "affiliation-model",
        "version": MODEL_FORMAT_VERSION,
        "schema_digest": model.schema_digest,
        "family": model.family,
        "task": model.task,
        "hyperparameters": model.hyperparameters,
        "features": list(model.features),
    }
    est = model.estimator
    if isinstance(est, Forest):
        d["forest"] = {"trees": est.to_nested(), "importances": est.tree_importances.tolist()}
    elif isinstance(est, KernelMachine):
        d["kernel"] = {
            "support_vectors": est.support_vectors.tolist(),
            "coef": est.coef.tolist(),
            "rho": est.rho,
            "gamma": est.gamma,
        }
        d["standardization"] = {"center": model.center.tolist(), "scale": model.scale.tolist()}
    else:
        d["baseline"] = {"value": est}
    return d


def model_from_dict(d: dict, schema: FeatureSchema = SCHEMA) -> TrainedModel:
    if d.get("format") != "affiliation-model" or d.get("version") != MODEL_FORMAT_VERSION:
        raise ConfigError("not a supported model file")
    if d["schema_digest"] != schema.digest():
        raise ConfigError("model was trained on a different feature schema")
    features = tuple(d["features"])
    idx = np.array([schema.index(f) for f in features])
    classify = d["task"] == "classify"
    center = scale = None
    if "forest" in d:
        est = Forest.from_nested(d["forest"]["trees"], classify, len(features), d["forest"]["importances"])
    elif "kernel" in d:
        k = d["kernel"]
        est = KernelMachine(np.asarray(k["support_vectors"], dtype=float).reshape(-1, len(features)),
                            np.asarray(k["coef"], dtype=float), k["rho"], k["gamma"], classify)
        center = np.asarray(d["standardization"]["center"])
        scale = np.asarray(d["standardization"]["scale"])
    else:
        est = d["baseline"]["value"]
    return TrainedModel(d["family"], d["task"], d["hyperparameters"], features, idx, est,
                        center, scale, d["schema_digest"])


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path: str | Path, schema: FeatureSchema = SCHEMA) -> TrainedModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")), schema)


__all__ = [
    "FAMILIES", "TASKS", "FOREST_GRID", "KERNEL_GRID", "ModelConfig", "TrainedModel",
    "DegenerateTrainingSet", "ConfigError", "train", "expand_grid", "default_grid",
    "save_model", "load_model", "model_to_dict", "model_from_dict",
]
