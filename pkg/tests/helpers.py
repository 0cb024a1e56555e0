"""Small dataset builders shared by the test modules."""

from __future__ import annotations

import numpy as np

from affiliation.core import SCHEMA, Dataset, FeatureVector, Sample


def make_dataset(X, y, rng=None, fill: str = "noise", valid=None) -> Dataset:
    """Dataset whose first ``X.shape[1]`` schema columns hold ``X``.

    The remaining columns get standard-normal noise (``fill='noise'``) or
    zeros. Rows pair up into dyads in order: (0, 1), (2, 3), ...
    """
    X = np.asarray(X, dtype=float)
    n, k = X.shape
    assert n % 2 == 0
    rng = rng or np.random.default_rng(0)
    full = rng.standard_normal((n, len(SCHEMA))) if fill == "noise" else np.zeros((n, len(SCHEMA)))
    full[:, :k] = X
    if valid is None:
        valid = np.ones_like(full, dtype=bool)
    samples = [
        Sample(f"p{i:03d}", f"d{i // 2:03d}", FeatureVector(full[i], valid[i]), float(y[i]))
        for i in range(n)
    ]
    return Dataset(tuple(samples))


def affiliation_dataset(scores) -> Dataset:
    """Dataset with the given affiliation scores and all-zero features."""
    scores = np.asarray(scores, dtype=float)
    return make_dataset(np.zeros((len(scores), 1)), scores, fill="zeros")
