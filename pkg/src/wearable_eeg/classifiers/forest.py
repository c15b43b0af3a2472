"""Random forest of Gini decision trees on bootstrap samples.

Splits are axis-aligned ``x[f] <= threshold`` where the threshold is the
largest training value sent left. Storing an observed value instead of a
midpoint makes predictions invariant under strictly increasing transforms
of a feature.
"""

from dataclasses import dataclass, field
from math import ceil, sqrt

import numpy as np

LEAF = -1


@dataclass(eq=False)
class DecisionTree:
    feature: np.ndarray    # LEAF for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # leaf label in {-1, +1}; 0 for internal nodes

    @property
    def n_nodes(self):
        return self.feature.size

    def predict(self, X):
        node = np.zeros(X.shape[0], dtype=int)
        active = self.feature[node] != LEAF
        while np.any(active):
            idx = np.flatnonzero(active)
            f = self.feature[node[idx]]
            go_left = X[idx, f] <= self.threshold[node[idx]]
            node[idx] = np.where(go_left, self.left[node[idx]], self.right[node[idx]])
            active = self.feature[node] != LEAF
        return self.value[node]


@dataclass(eq=False)
class ForestModel:
    trees: list
    n_estimators: int
    seed: int
    n_features: int
    bootstrap_indices: list = field(default_factory=list)


def _majority(y):
    # ties go to -1
    return 1 if np.sum(y > 0) > np.sum(y < 0) else -1


def _best_split(x, y):
    """Best Gini split of one feature: (weighted impurity, threshold) or None."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = xs.size
    distinct = xs[1:] != xs[:-1]
    if not np.any(distinct):
        return None
    pos_left = np.cumsum(ys > 0)[:-1]
    n_left = np.arange(1, n)
    n_right = n - n_left
    pos_right = pos_left[-1] + (ys[-1] > 0) - pos_left
    p_l = pos_left / n_left
    p_r = pos_right / n_right
    impurity = (n_left * 2 * p_l * (1 - p_l) + n_right * 2 * p_r * (1 - p_r)) / n
    impurity = np.where(distinct, impurity, np.inf)
    k = int(np.argmin(impurity))
    return impurity[k], xs[k]


def _grow_tree(X, y, rng, max_features):
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        for arr in (feature, left, right):
            arr.append(LEAF)
        threshold.append(0.0)
        value.append(0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(y.size))]
    d = X.shape[1]
    while stack:
        node, rows = stack.pop()
        ys = y[rows]
        if rows.size < 2 or np.all(ys == ys[0]):
            value[node] = _majority(ys)
            continue
        order = rng.permutation(d)
        best = None
        # fall back to further features only if none of the drawn ones can split
        for start in range(0, d, max_features):
            for f in order[start:start + max_features]:
                found = _best_split(X[rows, f], ys)
                if found is not None and (best is None or found[0] < best[0]):
                    best = (found[0], found[1], f)
            if best is not None:
                break
        if best is None:
            value[node] = _majority(ys)
            continue
        _, thr, f = best
        mask = X[rows, f] <= thr
        feature[node] = int(f)
        threshold[node] = float(thr)
        left_node, right_node = new_node(), new_node()
        left[node], right[node] = left_node, right_node
        stack.append((right_node, rows[~mask]))
        stack.append((left_node, rows[mask]))
    return DecisionTree(np.array(feature), np.array(threshold), np.array(left),
                        np.array(right), np.array(value))


def train_random_forest(X, y, n_estimators=10, seed=0):
    """Grow ``n_estimators`` trees on seeded bootstrap samples.

    Each split considers ``ceil(sqrt(d))`` features drawn without
    replacement; growth stops at pure nodes or nodes with fewer than two
    samples.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or y.shape != (X.shape[0],) or y.size == 0:
        raise ValueError("X must be a non-empty (n, d) array with matching y")
    if not 5 <= n_estimators <= 20:
        raise ValueError("n_estimators must lie in 5..20")
    n, d = X.shape
    max_features = ceil(sqrt(d))
    children = np.random.SeedSequence(int(seed)).spawn(n_estimators)
    trees, boots = [], []
    for child in children:
        rng = np.random.default_rng(child)
        rows = rng.integers(0, n, size=n)
        trees.append(_grow_tree(X[rows], y[rows], rng, max_features))
        boots.append(rows)
    return ForestModel(trees, n_estimators, int(seed), d, boots)


def tree_votes(model, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {X.shape}")
    return np.stack([t.predict(X) for t in model.trees])


def predict_forest(model, X):
    """Majority vote across trees; an exact tie predicts -1."""
    total = tree_votes(model, X).sum(axis=0)
    return np.where(total > 0, 1, -1)
