"""Bagged CART forests (classification and regression).

Trees are grown depth-first until nodes are pure, too small to split under
``min_samples_split`` / ``min_samples_leaf``, or have no feature left that
varies. Gini impurity is used for classification, variance for regression.
All trees of a forest are stored in flat arrays; child pointers index into
those arrays and leaves have ``feature == -1``.

The growing loop is compiled with numba: a full evaluation fits
thousands of 128-tree forests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

MAX_FEATURES_CHOICES = ("all", "sqrt", "log2")


def resolve_max_features(max_features, n_features: int) -> int:
    if max_features in (None, "all"):
        return n_features
    if max_features == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    if max_features == "log2":
        return max(1, int(math.log2(n_features)))
    if isinstance(max_features, (int, np.integer)) and 1 <= max_features <= n_features:
        return int(max_features)
    raise ValueError(f"invalid max_features {max_features!r}")


@njit(cache=True)
def _node_impurity(y, idx, start, end, is_clf):
    m = end - start
    if is_clf:
        c1 = 0.0
        for k in range(start, end):
            c1 += y[idx[k]]
        p = c1 / m
        return 1.0 - p * p - (1.0 - p) * (1.0 - p)
    s = 0.0
    sq = 0.0
    for k in range(start, end):
        v = y[idx[k]]
        s += v
        sq += v * v
    var = sq / m - (s / m) ** 2
    return var if var > 0.0 else 0.0


@njit(cache=True)
def _argsort_into(xs, m, srt):
    """Stable ascending argsort of xs[:m] into srt[:m]; insertion sort for small nodes."""
    if m > 64:
        tmp = np.argsort(xs[:m], kind="mergesort")
        for k in range(m):
            srt[k] = tmp[k]
        return
    for k in range(m):
        j = k
        v = xs[k]
        while j > 0 and xs[srt[j - 1]] > v:
            srt[j] = srt[j - 1]
            j -= 1
        srt[j] = k


@njit(cache=True)
def _best_split(XT, y, idx, start, end, is_clf, max_features, min_leaf, feat_order, xs, ys, order, srt):
    m = end - start
    n_features = XT.shape[0]
    best_score = np.inf
    best_feat = -1
    best_thr = 0.0
    best_pos = -1
    # Fisher-Yates shuffle of candidate features
    for k in range(n_features):
        feat_order[k] = k
    for k in range(n_features - 1, 0, -1):
        r = np.random.randint(0, k + 1)
        tmp = feat_order[k]
        feat_order[k] = feat_order[r]
        feat_order[r] = tmp

    visited = 0
    for fi in range(n_features):
        if visited >= max_features:
            break
        f = feat_order[fi]
        col = XT[f]
        for k in range(m):
            xs[k] = col[idx[start + k]]
        _argsort_into(xs, m, srt)
        if xs[srt[0]] == xs[srt[m - 1]]:
            continue  # constant features do not count towards max_features
        visited += 1
        for k in range(m):
            ys[k] = y[idx[start + k]]
        total = 0.0
        total_sq = 0.0
        for k in range(m):
            total += ys[k]
            total_sq += ys[k] * ys[k]
        left = 0.0
        left_sq = 0.0
        for p in range(1, m):
            v = ys[srt[p - 1]]
            left += v
            left_sq += v * v
            if p < min_leaf or m - p < min_leaf:
                continue
            lo = xs[srt[p - 1]]
            hi = xs[srt[p]]
            if hi <= lo:
                continue
            nl = p
            nr = m - p
            right = total - left
            if is_clf:
                # weighted Gini: n_l * (1 - p1^2 - p0^2) + n_r * (...)
                pl = left / nl
                pr = right / nr
                score = nl * (1.0 - pl * pl - (1.0 - pl) * (1.0 - pl)) + nr * (
                    1.0 - pr * pr - (1.0 - pr) * (1.0 - pr)
                )
            else:
                right_sq = total_sq - left_sq
                score = (left_sq - left * left / nl) + (right_sq - right * right / nr)
            if score < best_score - 1e-12:
                best_score = score
                best_feat = f
                thr = 0.5 * (lo + hi)
                if thr >= hi:
                    thr = lo
                best_thr = thr
                best_pos = p
    if best_feat >= 0:
        # reorder idx[start:end] so that the left child comes first
        col = XT[best_feat]
        for k in range(m):
            xs[k] = col[idx[start + k]]
        _argsort_into(xs, m, srt)
        for k in range(m):
            order[k] = idx[start + srt[k]]
        for k in range(m):
            idx[start + k] = order[k]
    return best_feat, best_thr, best_pos


@njit(cache=True)
def _build_forest(X, y, is_clf, n_trees, max_features, min_split, min_leaf, bootstrap, seed):
    n, n_features = X.shape
    cap = 2 * n + 1
    feature = np.full(n_trees * cap, -1, dtype=np.int64)
    threshold = np.zeros(n_trees * cap)
    left = np.full(n_trees * cap, -1, dtype=np.int64)
    right = np.full(n_trees * cap, -1, dtype=np.int64)
    value = np.zeros(n_trees * cap)
    n_node = np.zeros(n_trees * cap, dtype=np.int64)
    offsets = np.zeros(n_trees + 1, dtype=np.int64)
    importances = np.zeros((n_trees, n_features))

    feat_order = np.empty(n_features, dtype=np.int64)
    xs = np.empty(n)
    ys = np.empty(n)
    order = np.empty(n, dtype=np.int64)
    srt = np.empty(n, dtype=np.int64)
    XT = np.ascontiguousarray(X.T)
    stack_node = np.empty(cap, dtype=np.int64)
    stack_start = np.empty(cap, dtype=np.int64)
    stack_end = np.empty(cap, dtype=np.int64)

    np.random.seed(seed)
    pos = 0
    for t in range(n_trees):
        offsets[t] = pos
        if bootstrap:
            idx = np.random.randint(0, n, n)
        else:
            idx = np.arange(n)
        root = pos
        pos += 1
        sp = 0
        stack_node[sp] = root
        stack_start[sp] = 0
        stack_end[sp] = n
        sp += 1
        while sp > 0:
            sp -= 1
            node = stack_node[sp]
            start = stack_start[sp]
            end = stack_end[sp]
            m = end - start
            s = 0.0
            for k in range(start, end):
                s += y[idx[k]]
            value[node] = s / m
            n_node[node] = m
            imp = _node_impurity(y, idx, start, end, is_clf)
            if m < min_split or m < 2 * min_leaf or imp <= 1e-14:
                continue
            f, thr, p = _best_split(
                XT, y, idx, start, end, is_clf, max_features, min_leaf, feat_order, xs, ys, order, srt
            )
            if f < 0:
                continue
            feature[node] = f
            threshold[node] = thr
            lc = pos
            rc = pos + 1
            pos += 2
            left[node] = lc
            right[node] = rc
            imp_l = _node_impurity(y, idx, start, start + p, is_clf)
            imp_r = _node_impurity(y, idx, start + p, end, is_clf)
            importances[t, f] += m * imp - p * imp_l - (m - p) * imp_r
            stack_node[sp] = rc
            stack_start[sp] = start + p
            stack_end[sp] = end
            sp += 1
            stack_node[sp] = lc
            stack_start[sp] = start
            stack_end[sp] = start + p
            sp += 1
    offsets[n_trees] = pos
    return (feature[:pos], threshold[:pos], left[:pos], right[:pos], value[:pos],
            n_node[:pos], offsets, importances)


@njit(cache=True)
def _apply(X, feature, threshold, left, right, offsets, values_out):
    n_trees = offsets.shape[0] - 1
    for i in range(X.shape[0]):
        for t in range(n_trees):
            node = offsets[t]
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            values_out[i, t] = node


@dataclass
class Forest:
    """A fitted forest; ``value`` holds the leaf mean (regression) or class-1 fraction."""

    classify: bool
    n_features: int
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_node_samples: np.ndarray
    offsets: np.ndarray
    tree_importances: np.ndarray

    @property
    def n_trees(self) -> int:
        return len(self.offsets) - 1

    def leaves(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=float)
        out = np.empty((X.shape[0], self.n_trees), dtype=np.int64)
        _apply(X, self.feature, self.threshold, self.left, self.right, self.offsets, out)
        return out

    def tree_outputs(self, X: np.ndarray) -> np.ndarray:
        """Per-tree predictions: leaf means, or per-tree class votes (ties -> 0)."""
        vals = self.value[self.leaves(X)]
        if self.classify:
            return (vals > 0.5).astype(float)
        return vals

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = self.tree_outputs(X)
        if self.classify:
            # majority vote; an exact tie goes to class 0
            return (out.mean(axis=1) > 0.5).astype(int)
        return out.mean(axis=1)

    @property
    def feature_importances(self) -> np.ndarray:
        """Mean decrease in impurity, normalized per tree and overall."""
        imp = self.tree_importances
        totals = imp.sum(axis=1, keepdims=True)
        per_tree = np.divide(imp, totals, out=np.zeros_like(imp), where=totals > 0)
        mean = per_tree.mean(axis=0)
        s = mean.sum()
        return mean / s if s > 0 else mean

    def to_nested(self) -> list[dict]:
        def node(i):
            if self.feature[i] < 0:
                return {"value": float(self.value[i]), "n": int(self.n_node_samples[i])}
            return {
                "feature": int(self.feature[i]),
                "threshold": float(self.threshold[i]),
                "n": int(self.n_node_samples[i]),
                "value": float(self.value[i]),
                "left": node(self.left[i]),
                "right": node(self.right[i]),
            }

        return [node(self.offsets[t]) for t in range(self.n_trees)]

    @classmethod
    def from_nested(cls, trees: list[dict], classify: bool, n_features: int, importances=None) -> "Forest":
        feature, threshold, left, right, value, n_node, offsets = [], [], [], [], [], [], []

        def add(d):
            i = len(feature)
            feature.append(d.get("feature", -1))
            threshold.append(d.get("threshold", 0.0))
            left.append(-1)
            right.append(-1)
            value.append(d["value"])
            n_node.append(d.get("n", 0))
            if "left" in d:
                left[i] = add(d["left"])
                right[i] = add(d["right"])
            return i

        for tree in trees:
            offsets.append(len(feature))
            add(tree)
        offsets.append(len(feature))
        if importances is None:
            importances = np.zeros((len(trees), n_features))
        return cls(
            classify, n_features,
            np.asarray(feature, dtype=np.int64), np.asarray(threshold, dtype=float),
            np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64),
            np.asarray(value, dtype=float), np.asarray(n_node, dtype=np.int64),
            np.asarray(offsets, dtype=np.int64), np.asarray(importances, dtype=float),
        )


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    classify: bool,
    n_trees: int = 128,
    max_features="all",
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
    bootstrap: bool = True,
    seed: int = 0,
) -> Forest:
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise ValueError("X must be (n, d) with n == len(y) > 0")
    if not np.all(np.isfinite(X)):
        raise ValueError("forest input contains missing values; impute first")
    if classify and not np.all((y == 0) | (y == 1)):
        raise ValueError("classification labels must be 0/1")
    mf = resolve_max_features(max_features, X.shape[1])
    out = _build_forest(
        X, y, bool(classify), int(n_trees), mf, int(min_samples_split),
        int(min_samples_leaf), bool(bootstrap), int(seed) % (2**32),
    )
    return Forest(bool(classify), X.shape[1], *out)
