"""Deterministic binary classifiers used by the voting ensemble.

These are written from scratch rather than delegated to library estimators
because the ensemble contract pins behaviors libraries leave open: equal-cost
splits break ties on the lowest feature index and then the lower threshold,
trained models serialize to byte-identical JSON, and a label with no positive
examples degrades to a constant-negative classifier. numpy is used only for
array math. The classes still follow the familiar estimator shape (params in
__init__, fit/predict, NotFittedError before fit) so they compose with the
usual tooling.
"""

from __future__ import annotations

import random

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_X_y


def _as_matrix(X, *, fit: bool = False) -> np.ndarray:
    return check_array(X, dtype=np.float64, ensure_2d=True)


def _gini_cost(n_left: np.ndarray, pos_left: np.ndarray, n_total: int, pos_total: int):
    """Weighted Gini impurity for every candidate left/right partition."""
    n_right = n_total - n_left
    pos_right = pos_total - pos_left
    with np.errstate(invalid="ignore", divide="ignore"):
        pl = pos_left / n_left
        pr = pos_right / n_right
    gini_left = 1.0 - pl**2 - (1.0 - pl) ** 2
    gini_right = 1.0 - pr**2 - (1.0 - pr) ** 2
    return (n_left * gini_left + n_right * gini_right) / n_total


def _best_split(X: np.ndarray, y: np.ndarray, feature_ids: list[int]):
    """Lowest-cost (cost, feature, threshold) split, or None if nothing splits.

    Ties on cost resolve to the lowest feature index, then the lower
    threshold; feature_ids is scanned in ascending order to make that hold.
    """
    n = y.shape[0]
    pos_total = int(y.sum())
    best = None
    for f in feature_ids:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        cut = np.nonzero(xs[:-1] < xs[1:])[0]
        if cut.size == 0:
            continue
        n_left = cut + 1
        pos_left = np.cumsum(ys)[cut]
        costs = _gini_cost(n_left, pos_left, n, pos_total)
        i = int(np.argmin(costs))  # argmin takes the first, i.e. lowest threshold
        cand = (float(costs[i]), f, float((xs[cut[i]] + xs[cut[i] + 1]) / 2.0))
        if best is None or cand < best:
            best = cand
    return best


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "label")

    def __init__(self, *, feature=None, threshold=None, left=None, right=None, label=None):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.label = label

    def to_doc(self) -> dict:
        if self.label is not None:
            return {"label": self.label}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_doc(),
            "right": self.right.to_doc(),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "_Node":
        if "label" in doc:
            return cls(label=int(doc["label"]))
        return cls(
            feature=int(doc["feature"]),
            threshold=float(doc["threshold"]),
            left=cls.from_doc(doc["left"]),
            right=cls.from_doc(doc["right"]),
        )


def _grow(X, y, depth, max_depth, max_features, rng: random.Random | None) -> _Node:
    n = y.shape[0]
    pos = int(y.sum())
    if pos == 0 or pos == n or depth >= max_depth or n < 2:
        return _Node(label=int(pos * 2 > n))
    n_features = X.shape[1]
    if max_features is not None and max_features < n_features:
        feature_ids = sorted(rng.sample(range(n_features), max_features))
    else:
        feature_ids = list(range(n_features))
    split = _best_split(X, y, feature_ids)
    if split is None:
        return _Node(label=int(pos * 2 > n))
    _, f, thr = split
    mask = X[:, f] < thr
    return _Node(
        feature=f,
        threshold=thr,
        left=_grow(X[mask], y[mask], depth + 1, max_depth, max_features, rng),
        right=_grow(X[~mask], y[~mask], depth + 1, max_depth, max_features, rng),
    )


def _walk(node: _Node, row: np.ndarray) -> int:
    while node.label is None:
        node = node.left if row[node.feature] < node.threshold else node.right
    return node.label


class GiniTreeClassifier(ClassifierMixin, BaseEstimator):
    """Binary CART-style tree with pinned deterministic tie-breaking."""

    def __init__(self, max_depth: int = 8, max_features: int | None = None, random_state: int | None = None):
        self.max_depth = max_depth
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        y = y.astype(np.int64)
        rng = random.Random(self.random_state) if self.max_features is not None else None
        self.root_ = _grow(X, y, 0, self.max_depth, self.max_features, rng)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        if not hasattr(self, "root_"):
            raise NotFittedError("GiniTreeClassifier is not fitted")
        X = _as_matrix(X)
        return np.array([_walk(self.root_, row) for row in X], dtype=np.int64)

    def to_doc(self) -> dict:
        return {"max_depth": self.max_depth, "tree": self.root_.to_doc()}

    @classmethod
    def from_doc(cls, doc: dict) -> "GiniTreeClassifier":
        est = cls(max_depth=int(doc["max_depth"]))
        est.root_ = _Node.from_doc(doc["tree"])
        return est


class BootstrapForestClassifier(ClassifierMixin, BaseEstimator):
    """Bagged Gini trees with per-split feature subsampling, majority vote."""

    def __init__(
        self,
        n_trees: int = 50,
        max_depth: int = 8,
        max_features: int = 7,
        random_state: int | None = None,
    ):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        y = y.astype(np.int64)
        n = X.shape[0]
        master = random.Random(self.random_state)
        self.trees_ = []
        for _ in range(self.n_trees):
            rng = random.Random(master.getrandbits(63))
            idx = [rng.randrange(n) for _ in range(n)]
            root = _grow(X[idx], y[idx], 0, self.max_depth, min(self.max_features, X.shape[1]), rng)
            self.trees_.append(root)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        if not hasattr(self, "trees_"):
            raise NotFittedError("BootstrapForestClassifier is not fitted")
        X = _as_matrix(X)
        out = np.zeros(X.shape[0], dtype=np.int64)
        for i, row in enumerate(X):
            votes = sum(_walk(t, row) for t in self.trees_)
            out[i] = int(votes * 2 > len(self.trees_))
        return out

    def to_doc(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "max_features": self.max_features,
            "trees": [t.to_doc() for t in self.trees_],
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "BootstrapForestClassifier":
        est = cls(
            n_trees=int(doc["n_trees"]),
            max_depth=int(doc["max_depth"]),
            max_features=int(doc["max_features"]),
        )
        est.trees_ = [_Node.from_doc(t) for t in doc["trees"]]
        return est


class StandardizedKnnVoter(BaseEstimator):
    """k-nearest-neighbors over z-scored features, multi-label by neighbor count.

    A label is emitted when at least min_votes of the k nearest training
    points (Euclidean distance, ties broken by training index) carry it.
    """

    def __init__(self, k: int = 5, min_votes: int = 3):
        self.k = k
        self.min_votes = min_votes

    def fit(self, X, Y):
        X = _as_matrix(X, fit=True)
        Y = np.asarray(Y, dtype=np.int64)
        if Y.ndim != 2 or Y.shape[0] != X.shape[0]:
            raise ValueError("Y must be an (n_samples, n_labels) indicator matrix")
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        std[std == 0.0] = 1.0
        self.std_ = std
        self.X_ = (X - self.mean_) / self.std_
        self.Y_ = Y
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        if not hasattr(self, "X_"):
            raise NotFittedError("StandardizedKnnVoter is not fitted")
        X = _as_matrix(X)
        Z = (X - self.mean_) / self.std_
        k = min(self.k, self.X_.shape[0])
        out = np.zeros((X.shape[0], self.Y_.shape[1]), dtype=np.int64)
        for i, row in enumerate(Z):
            d2 = ((self.X_ - row) ** 2).sum(axis=1)
            order = np.lexsort((np.arange(d2.shape[0]), d2))[:k]
            counts = self.Y_[order].sum(axis=0)
            out[i] = (counts >= self.min_votes).astype(np.int64)
        return out

    def to_doc(self) -> dict:
        return {
            "k": self.k,
            "min_votes": self.min_votes,
            "mean": self.mean_.tolist(),
            "std": self.std_.tolist(),
            "X": self.X_.tolist(),
            "Y": self.Y_.tolist(),
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "StandardizedKnnVoter":
        est = cls(k=int(doc["k"]), min_votes=int(doc["min_votes"]))
        est.mean_ = np.array(doc["mean"], dtype=np.float64)
        est.std_ = np.array(doc["std"], dtype=np.float64)
        est.X_ = np.array(doc["X"], dtype=np.float64)
        est.Y_ = np.array(doc["Y"], dtype=np.int64)
        if est.X_.size == 0:
            est.X_ = est.X_.reshape(0, est.mean_.shape[0])
        if est.Y_.size == 0:
            est.Y_ = est.Y_.reshape(0, 0)
        est.n_features_in_ = est.mean_.shape[0]
        return est
