"""From-scratch classifiers (kNN, CART decision tree, multinomial
logistic regression) plus stratified cross-validation and grid search.

Every tie-break is fixed (distance ties by lower training index, vote and
argmax ties by lexicographically smallest label, split ties by lower
feature then lower threshold, grid ties by family order then
hyperparameter index) so results are reproducible across platforms.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field

import numpy as np


class ClassifierError(Exception):
    pass


# Hyperparameter grid, in tie-break order: tree first, then logistic, then kNN.
GRID = (
    [("tree", {"max_depth": d}) for d in (2, 4, 8, None)]
    + [("logreg", {"l2_lambda": lam}) for lam in (0.0, 0.1, 1.0)]
    + [("knn", {"k": k}) for k in (1, 3, 5)]
)


@dataclass
class KnnModel:
    k: int
    X: np.ndarray
    y: list

    def to_dict(self) -> dict:
        return {"k": self.k, "X": self.X.tolist(), "y": list(self.y)}

    @classmethod
    def from_dict(cls, d: dict) -> "KnnModel":
        return cls(k=d["k"], X=np.asarray(d["X"], dtype=float), y=list(d["y"]))


@dataclass
class TreeNode:
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    label: str | None = None

    @property
    def is_leaf(self) -> bool:
        return self.label is not None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"label": self.label}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "label" in d:
            return cls(label=d["label"])
        return cls(
            feature=d["feature"],
            threshold=d["threshold"],
            left=cls.from_dict(d["left"]),
            right=cls.from_dict(d["right"]),
        )


@dataclass
class TreeModel:
    root: TreeNode
    max_depth: int | None

    def to_dict(self) -> dict:
        return {"max_depth": self.max_depth, "root": self.root.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "TreeModel":
        return cls(root=TreeNode.from_dict(d["root"]), max_depth=d.get("max_depth"))


@dataclass
class LogRegModel:
    weights: np.ndarray  # C x d
    biases: np.ndarray  # C
    classes: list  # lexicographically sorted
    loss_history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "biases": self.biases.tolist(),
            "classes": list(self.classes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogRegModel":
        return cls(
            weights=np.asarray(d["weights"], dtype=float),
            biases=np.asarray(d["biases"], dtype=float),
            classes=list(d["classes"]),
        )


# ---------------------------------------------------------------- kNN


def fit_knn(X, y, k: int) -> KnnModel:
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        raise ClassifierError("empty training set")
    if k > len(X):
        raise ClassifierError("k exceeds training-set size")
    return KnnModel(k=k, X=X.copy(), y=list(y))


def predict_knn(model: KnnModel, x) -> str:
    x = np.asarray(x, dtype=float)
    dists = np.sqrt(((model.X - x) ** 2).sum(axis=1))
    order = sorted(range(len(dists)), key=lambda i: (dists[i], i))
    votes = Counter(model.y[i] for i in order[: model.k])
    best = max(votes.values())
    return min(label for label, count in votes.items() if count == best)


# ------------------------------------------------------- decision tree


def _gini(labels) -> float:
    n = len(labels)
    if n == 0:
        return 0.0
    counts = Counter(labels)
    return 1.0 - sum((c / n) ** 2 for c in counts.values())


def _majority(labels) -> str:
    counts = Counter(labels)
    best = max(counts.values())
    return min(label for label, count in counts.items() if count == best)


def candidate_thresholds(values) -> list:
    """Midpoints between consecutive distinct sorted feature values."""
    distinct = sorted(set(float(v) for v in values))
    return [(a + b) / 2.0 for a, b in zip(distinct, distinct[1:])]


def _best_split(X, y):
    n, d = X.shape
    parent_n = n
    best = None  # (weighted gini, feature, threshold)
    for f in range(d):
        for t in candidate_thresholds(X[:, f]):
            mask = X[:, f] <= t
            left = [y[i] for i in range(n) if mask[i]]
            right = [y[i] for i in range(n) if not mask[i]]
            score = (len(left) * _gini(left) + len(right) * _gini(right)) / parent_n
            key = (score, f, t)
            if best is None or key < best:
                best = key
    return best


def _grow(X, y, depth, max_depth, min_samples_split):
    if (
        len(set(y)) == 1
        or len(y) < min_samples_split
        or (max_depth is not None and depth >= max_depth)
    ):
        return TreeNode(label=_majority(y))
    best = _best_split(X, y)
    if best is None:
        return TreeNode(label=_majority(y))
    _, f, t = best
    mask = X[:, f] <= t
    return TreeNode(
        feature=f,
        threshold=t,
        left=_grow(X[mask], [y[i] for i in range(len(y)) if mask[i]], depth + 1, max_depth, min_samples_split),
        right=_grow(X[~mask], [y[i] for i in range(len(y)) if not mask[i]], depth + 1, max_depth, min_samples_split),
    )


def fit_tree(X, y, max_depth: int | None, min_samples_split: int = 2) -> TreeModel:
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        raise ClassifierError("empty training set")
    return TreeModel(root=_grow(X, list(y), 0, max_depth, min_samples_split), max_depth=max_depth)


def predict_tree(model: TreeModel, x) -> str:
    node = model.root
    x = np.asarray(x, dtype=float)
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node.label


# -------------------------------------------------- logistic regression


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def logreg_loss_and_grad(W, b, X, Y, l2_lambda):
    """Mean cross-entropy + (lambda/2)*||W||^2; gradient wrt W and b."""
    n = X.shape[0]
    P = _softmax(X @ W.T + b)
    eps = 1e-12
    loss = -np.mean(np.log((P * Y).sum(axis=1) + eps)) + 0.5 * l2_lambda * (W**2).sum()
    diff = (P - Y) / n  # n x C
    grad_W = diff.T @ X + l2_lambda * W
    grad_b = diff.sum(axis=0)
    return loss, grad_W, grad_b


def fit_logreg(X, y, l2_lambda: float, iterations: int = 500, learning_rate: float = 0.1) -> LogRegModel:
    X = np.asarray(X, dtype=float)
    classes = sorted(set(y))
    if len(X) < len(classes):
        raise ClassifierError("fewer samples than classes")
    idx = {c: i for i, c in enumerate(classes)}
    Y = np.zeros((len(X), len(classes)))
    for row, label in enumerate(y):
        Y[row, idx[label]] = 1.0
    W = np.zeros((len(classes), X.shape[1]))
    b = np.zeros(len(classes))
    losses = []
    for _ in range(iterations):
        loss, grad_W, grad_b = logreg_loss_and_grad(W, b, X, Y, l2_lambda)
        if not math.isfinite(loss):
            raise ClassifierError("non-finite loss; check data scaling")
        losses.append(loss)
        W -= learning_rate * grad_W
        b -= learning_rate * grad_b
    return LogRegModel(weights=W, biases=b, classes=classes, loss_history=losses)


def predict_logreg(model: LogRegModel, x) -> str:
    scores = model.weights @ np.asarray(x, dtype=float) + model.biases
    best = scores.max()
    # argmax with lexicographic tie-break on the class label
    return min(model.classes[i] for i in range(len(scores)) if scores[i] == best)


# --------------------------------------------------------- CV + search


def fit_model(family: str, hyperparams: dict, X, y):
    if family == "knn":
        return fit_knn(X, y, **hyperparams)
    if family == "tree":
        return fit_tree(X, y, **hyperparams)
    if family == "logreg":
        return fit_logreg(X, y, **hyperparams)
    raise ClassifierError(f"unknown family {family!r}")


def predict_model(family: str, model, x) -> str:
    if family == "knn":
        return predict_knn(model, x)
    if family == "tree":
        return predict_tree(model, x)
    if family == "logreg":
        return predict_logreg(model, x)
    raise ClassifierError(f"unknown family {family!r}")


def model_to_dict(family: str, model) -> dict:
    return model.to_dict()


def model_from_dict(family: str, doc: dict):
    cls = {"knn": KnnModel, "tree": TreeModel, "logreg": LogRegModel}[family]
    return cls.from_dict(doc)


def standardize_fit(X):
    X = np.asarray(X, dtype=float)
    means = X.mean(axis=0)
    stds = np.maximum(X.std(axis=0), 1e-9)
    return means, stds


def standardize_apply(X, means, stds):
    return (np.asarray(X, dtype=float) - means) / stds


def stratified_folds(y, folds: int, seed: int) -> list:
    """Deal each class's (seeded-shuffled) indices round-robin into folds.

    Folds are reduced to the smallest class count when necessary, to a
    minimum of 2; below that, leave-one-out over all samples.
    """
    by_class = {}
    for i, label in enumerate(y):
        by_class.setdefault(label, []).append(i)
    if len(by_class) < 2:
        raise ClassifierError("degenerate single-class data")
    smallest = min(len(v) for v in by_class.values())
    if smallest < 2:
        return [[i] for i in range(len(y))]
    folds = max(2, min(folds, smallest))
    rng = random.Random(seed)
    assignment = [[] for _ in range(folds)]
    for label in sorted(by_class):
        indices = list(by_class[label])
        rng.shuffle(indices)
        for j, i in enumerate(indices):
            assignment[j % folds].append(i)
    return [sorted(f) for f in assignment]


def cross_validate(family: str, hyperparams: dict, X, y, folds: int, seed: int) -> float:
    """Mean accuracy over stratified folds, standardizing per training fold."""
    X = np.asarray(X, dtype=float)
    partition = stratified_folds(y, folds, seed)
    accuracies = []
    for held_out in partition:
        held = set(held_out)
        train_idx = [i for i in range(len(y)) if i not in held]
        means, stds = standardize_fit(X[train_idx])
        Xtr = standardize_apply(X[train_idx], means, stds)
        ytr = [y[i] for i in train_idx]
        model = fit_model(family, hyperparams, Xtr, ytr)
        Xva = standardize_apply(X[held_out], means, stds)
        correct = sum(
            1 for row, i in enumerate(held_out) if predict_model(family, model, Xva[row]) == y[i]
        )
        accuracies.append(correct / len(held_out))
    return float(np.mean(accuracies))


def grid_search(X, y, folds: int, seed: int):
    """Best (family, hyperparams, accuracy); ties by grid order."""
    best = None
    for index, (family, hyperparams) in enumerate(GRID):
        acc = cross_validate(family, hyperparams, X, y, folds, seed)
        if best is None or acc > best[0]:
            best = (acc, index, family, hyperparams)
    acc, _, family, hyperparams = best
    return family, hyperparams, acc
