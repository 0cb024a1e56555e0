"""Model x feature-set experiments, Bayesian comparison tables and the score plot.

An experiment is a list of cells. Each cell evaluates one model family on one
task (classify: F1 on the median split, regress: R^2 on the continuous score)
with one feature set: ``all``, a category name, ``best`` (the optimal subset
of an RFE result) or an explicit list of feature names.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .bayes import BayesConfig, BayesResult, evidence_band, jzs_one_sample
from .core import CATEGORIES, Dataset, median_split
from .evaluation import (
    CVScores, category_subset, make_split_plan, results_document, run_cv, subsample_plan,
)
from .learn.models import ConfigError, ModelConfig

FEATURE_SETS = ("all", "best") + CATEGORIES
BASELINES = {"classify": 0.5, "regress": 0.0}
SCORE_KINDS = ("pooled", "split")


@dataclass(frozen=True)
class Cell:
    family: str
    task: str
    features: str | tuple[str, ...] = "all"
    hyperparameters: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        fs = self.features if isinstance(self.features, str) else "custom"
        return f"{fs} ({self.family}) {self.task}"

    @classmethod
    def from_dict(cls, d: dict) -> "Cell":
        unknown = set(d) - {"family", "task", "features", "hyperparameters"}
        if unknown:
            raise ConfigError(f"unknown cell keys {sorted(unknown)}")
        feats = d.get("features", "all")
        if not isinstance(feats, str):
            feats = tuple(feats)
        elif feats not in FEATURE_SETS:
            raise ConfigError(f"unknown feature set {feats!r}; expected one of {FEATURE_SETS} or a list")
        ModelConfig(d["family"], d["task"], d.get("hyperparameters", {}))  # validate early
        return cls(d["family"], d["task"], feats, dict(d.get("hyperparameters", {})))


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of an ``evaluate`` run; every field can come from the JSON config."""

    cells: tuple[Cell, ...]
    repeats: int = 10
    seed: int = 0
    tune: bool = True
    imputation: str = "fold"
    inner_folds: int = 10
    inner_repeats: int = 3
    splits: int | None = None  # evaluate a random subset of this many splits
    best_features: tuple[str, ...] | None = None

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        d = dict(d)
        known = {"cells", "repeats", "seed", "tune", "imputation", "inner_folds", "inner_repeats",
                 "splits", "rfe", "best_features", "bayes"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        cells = d.pop("cells", None)
        cells = tuple(Cell.from_dict(c) for c in cells) if cells else default_cells()
        best = d.pop("best_features", None)
        rfe_path = d.pop("rfe", None)
        if rfe_path is not None:
            path = Path(rfe_path)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            best = json.loads(path.read_text(encoding="utf-8"))["optimal_features"]
        d.pop("bayes", None)
        cfg = cls(cells, best_features=tuple(best) if best else None, **d)
        if cfg.imputation not in ("fold", "global"):
            raise ConfigError("imputation must be 'fold' or 'global'")
        if cfg.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        return cfg

    def to_dict(self) -> dict:
        return {
            "cells": [{"family": c.family, "task": c.task,
                       "features": c.features if isinstance(c.features, str) else list(c.features),
                       "hyperparameters": c.hyperparameters} for c in self.cells],
            "repeats": self.repeats, "seed": self.seed, "tune": self.tune,
            "imputation": self.imputation, "inner_folds": self.inner_folds,
            "inner_repeats": self.inner_repeats, "splits": self.splits,
            "best_features": list(self.best_features) if self.best_features else None,
        }


def default_cells(include_best: bool = False) -> tuple[Cell, ...]:
    """Both families x both tasks x (all, [best,] each category)."""
    sets = ("all",) + (("best",) if include_best else ()) + CATEGORIES
    return tuple(Cell(fam, task, fs) for fs in sets for fam in ("forest", "kernel_margin")
                 for task in ("classify", "regress"))


def resolve_features(cell: Cell, data: Dataset, best: Sequence[str] | None) -> tuple[str, ...]:
    if not isinstance(cell.features, str):
        unknown = [f for f in cell.features if f not in data.schema.names]
        if unknown:
            raise ConfigError(f"unknown features {unknown}")
        return tuple(cell.features)
    if cell.features == "all":
        return data.schema.names
    if cell.features == "best":
        if not best:
            raise ConfigError("feature set 'best' needs an RFE result ('rfe' or 'best_features' in the config)")
        return tuple(best)
    return category_subset(data.schema, cell.features)


def run_experiment(data: Dataset, cfg: ExperimentConfig, jobs: int = 1,
                   timestamp: str | None = None, progress=None) -> dict:
    """Results document with one entry per cell."""
    labeled = median_split(data)
    plan = make_split_plan(labeled)
    if cfg.splits is not None:
        plan = subsample_plan(plan, cfg.splits, cfg.seed)
    cells: dict[str, Any] = {}
    for cell in cfg.cells:
        feats = resolve_features(cell, labeled, cfg.best_features)
        model = ModelConfig(cell.family, cell.task, cell.hyperparameters, cfg.seed)
        if progress:
            progress(f"evaluating {cell.name} on {len(feats)} features")
        cv = run_cv(labeled, model, feats, plan, cfg.repeats, cfg.seed, tune=cfg.tune,
                    imputation=cfg.imputation, inner_folds=cfg.inner_folds,
                    inner_repeats=cfg.inner_repeats, jobs=jobs)
        cells[cell.name] = {
            "family": cell.family,
            "task": cell.task,
            "feature_set": cell.features if isinstance(cell.features, str) else "custom",
            "features": list(feats),
            "cv": cv.to_dict(),
            "hyperparameters": cv.hyperparameters,
        }
    return results_document(cfg.to_dict(), cells, timestamp)


def cell_scores(cell: dict, kind: str = "pooled") -> np.ndarray:
    """Scores of one results cell: one pooled value per repetition, or every valid split score."""
    if kind not in SCORE_KINDS:
        raise ValueError(f"score kind must be one of {SCORE_KINDS}")
    cv = CVScores.from_dict(cell["cv"])
    if kind == "pooled":
        s = cv.pooled_per_repetition
        return s[np.isfinite(s)]
    return cv.valid_scores


def compare_cells(results: dict, bayes: BayesConfig = BayesConfig(), kind: str = "pooled",
                  baseline: float | None = None) -> list[tuple[str, dict, BayesResult | str]]:
    """JZS test of every cell against its task's baseline (F1 0.5, R^2 0).

    A cell whose t statistic is undefined (fewer than two scores, or zero
    variance) gets the error message in place of a result.
    """
    out = []
    for name, cell in results["cells"].items():
        scores = cell_scores(cell, kind)
        base = BASELINES[cell["task"]] if baseline is None else baseline
        try:
            out.append((name, cell, jzs_one_sample(scores, base, bayes)))
        except ValueError as exc:
            out.append((name, cell, str(exc)))
    return out


def bayes_document(rows: list[tuple[str, dict, BayesResult | str]], bayes: BayesConfig, kind: str,
                   robustness: dict[str, list] | None = None, baseline: float | None = None) -> dict:
    doc: dict[str, Any] = {
        "format": "affiliation-bayes",
        "version": 1,
        "prior_width": bayes.prior_width,
        "direction": bayes.direction,
        "scores": kind,
        "comparisons": {},
    }
    for name, cell, res in rows:
        base = BASELINES[cell["task"]] if baseline is None else baseline
        entry = {"task": cell["task"], "baseline": base}
        entry.update({"error": res} if isinstance(res, str) else res.to_dict())
        if robustness and name in robustness:
            entry["robustness"] = [{"prior_width": w, "bf10": bf} for w, bf in robustness[name]]
        doc["comparisons"][name] = entry
    return doc


def _row_key(cell: dict) -> str:
    family = {"forest": "RF", "kernel_margin": "SVM"}.get(cell["family"], cell["family"])
    return f"{cell['feature_set']} ({family})"


def write_table(results: dict, path: str | Path, bayes: BayesConfig = BayesConfig(),
                kind: str = "pooled") -> list[list]:
    """Table with one row per feature set and family; BF10 and median d per task."""
    rows: dict[str, dict[str, BayesResult | str]] = {}
    for name, cell, res in compare_cells(results, bayes, kind):
        rows.setdefault(_row_key(cell), {})[cell["task"]] = res
    header = ["model", "classification_bf10", "classification_median_d",
              "regression_bf10", "regression_median_d", "classification_band", "regression_band"]
    table = []
    for key, by_task in rows.items():
        line = [key]
        for task in ("classify", "regress"):
            r = by_task.get(task)
            line += [f"{r.bf10:.6g}", f"{r.median_d:.4f}"] if isinstance(r, BayesResult) else ["", ""]
        for task in ("classify", "regress"):
            r = by_task.get(task)
            line.append(evidence_band(r.bf10) if isinstance(r, BayesResult) else ("undefined" if r else ""))
        table.append(line)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(table)
    return table


def plot_scores(results: dict, path: str | Path, kind: str = "pooled") -> None:
    """Mean +- SD of each cell's scores, one panel per task, baselines drawn as lines."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    tasks = [t for t in ("classify", "regress") if any(c["task"] == t for c in results["cells"].values())]
    fig, axes = plt.subplots(1, len(tasks), figsize=(6 * len(tasks), 4.5), squeeze=False)
    for ax, task in zip(axes[0], tasks):
        names, means, sds = [], [], []
        for cell in results["cells"].values():
            if cell["task"] != task:
                continue
            s = cell_scores(cell, kind)
            names.append(_row_key(cell))
            means.append(s.mean() if s.size else np.nan)
            sds.append(s.std(ddof=1) if s.size > 1 else 0.0)
        x = np.arange(len(names))
        ax.bar(x, means, yerr=sds, color="0.6", edgecolor="0.2", capsize=3)
        ax.axhline(BASELINES[task], color="k", linestyle="--", linewidth=1, label="baseline")
        ax.set_xticks(x)
        ax.set_xticklabels(names, rotation=60, ha="right", fontsize=8)
        ax.set_ylabel("F1" if task == "classify" else "R$^2$")
        ax.set_title("classification" if task == "classify" else "regression")
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
