"""CART decision tree classifier with Gini impurity.

Trees are stored as flattened node arrays (pre-order, explicit child
indices), which is also their JSON layout. Each node keeps its impurity,
the fraction of training samples reaching it and, for internal nodes, the
weighted impurity decrease of its split, so Gini importance never needs the
training data again.
"""

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

LEAF = -1

# Split decreases closer than this are treated as ties
_TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class TreeConfig:
    """Growth limits for one tree (None depth = grow until pure)."""

    max_depth: Optional[int] = None
    min_samples_split: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError(f"max_depth must be >= 1 or None, got {self.max_depth}")
        if self.min_samples_split < 2:
            raise ValueError(f"min_samples_split must be >= 2, got {self.min_samples_split}")


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """A fitted tree. Node ``i`` is a leaf when ``feature[i] == LEAF``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    class_counts: np.ndarray
    impurity: np.ndarray
    impurity_decrease: np.ndarray
    sample_fraction: np.ndarray
    allowed_features: tuple[int, ...]
    n_train: int
    seed: int = 0

    @property
    def n_nodes(self) -> int:
        return int(self.feature.size)

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature == LEAF))

    @property
    def feature_indices_used(self) -> frozenset[int]:
        return frozenset(int(f) for f in self.feature[self.feature != LEAF])

    @property
    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        # Pre-order layout: parents always precede their children
        for node in range(self.n_nodes):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def apply(self, features: np.ndarray) -> np.ndarray:
        """Index of the leaf each row lands in."""
        X = np.asarray(features, dtype=np.float64)
        if X.ndim == 1:
            X = X[np.newaxis, :]
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            current = node[active]
            goes_left = X[active, self.feature[current]] <= self.threshold[current]
            node[active] = np.where(goes_left, self.left[current], self.right[current])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Class label for every row of a full-width feature matrix."""
        return self.value[self.apply(features)]

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        nodes = []
        for i in range(self.n_nodes):
            node = {
                "class_counts": self.class_counts[i].tolist(),
                "impurity": float(self.impurity[i]),
                "sample_fraction": float(self.sample_fraction[i]),
            }
            if self.feature[i] != LEAF:
                node.update(
                    feature=int(self.feature[i]),
                    threshold=float(self.threshold[i]),
                    left=int(self.left[i]),
                    right=int(self.right[i]),
                    impurity_decrease=float(self.impurity_decrease[i]),
                )
            nodes.append(node)
        return {
            "features": list(self.allowed_features),
            "n_train": self.n_train,
            "seed": self.seed,
            "nodes": nodes,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionTree":
        """Create from dictionary loaded from JSON."""
        nodes = data["nodes"]
        counts = np.array([n["class_counts"] for n in nodes], dtype=np.int64)
        return cls(
            feature=np.array([n.get("feature", LEAF) for n in nodes], dtype=np.int64),
            threshold=np.array([n.get("threshold", 0.0) for n in nodes], dtype=np.float64),
            left=np.array([n.get("left", LEAF) for n in nodes], dtype=np.int64),
            right=np.array([n.get("right", LEAF) for n in nodes], dtype=np.int64),
            value=_majority(counts),
            class_counts=counts,
            impurity=np.array([n["impurity"] for n in nodes], dtype=np.float64),
            impurity_decrease=np.array(
                [n.get("impurity_decrease", 0.0) for n in nodes], dtype=np.float64
            ),
            sample_fraction=np.array([n["sample_fraction"] for n in nodes], dtype=np.float64),
            allowed_features=tuple(int(f) for f in data["features"]),
            n_train=int(data["n_train"]),
            seed=int(data.get("seed", 0)),
        )


def _majority(counts: np.ndarray) -> np.ndarray:
    # argmax returns the first maximum, so ties go to the lower class id
    return np.argmax(counts, axis=-1).astype(np.int64)


def gini_impurity(class_counts: Sequence[float]) -> float:
    """1 - sum_k (c_k / total)^2."""
    counts = np.asarray(class_counts, dtype=np.float64)
    if (counts < 0).any():
        raise ValueError("class counts must be non-negative")
    total = counts.sum()
    if total <= 0:
        raise ValueError("gini impurity needs at least one sample")
    return float(1.0 - np.sum((counts / total) ** 2))


def _best_split(
    X: np.ndarray,
    onehot: np.ndarray,
    rows: np.ndarray,
    allowed: np.ndarray,
    counts: np.ndarray,
    impurity: float,
) -> Optional[tuple[int, float, float, np.ndarray]]:
    """Scan every midpoint threshold of every allowed feature.

    Returns (feature, threshold, decrease, goes_left mask) or None when all
    allowed features are constant on these rows. Ties go to the lower
    feature index, then the lower threshold.
    """
    n = rows.size
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    best = None
    for f in allowed:
        x = X[rows, f]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        valid = xs[:-1] < xs[1:]
        if not valid.any():
            continue

        left_counts = np.cumsum(onehot[rows[order]], axis=0)[:-1]
        right_counts = counts - left_counts
        gini_left = 1.0 - np.sum(left_counts ** 2, axis=1) / n_left ** 2
        gini_right = 1.0 - np.sum(right_counts ** 2, axis=1) / n_right ** 2
        decrease = impurity - (n_left * gini_left + n_right * gini_right) / n
        decrease = np.where(valid, decrease, -np.inf)

        top = decrease.max()
        pos = int(np.flatnonzero(decrease >= top - _TIE_TOLERANCE)[0])
        if best is None or decrease[pos] > best[2] + _TIE_TOLERANCE:
            threshold = (xs[pos] + xs[pos + 1]) / 2.0
            if threshold == xs[pos + 1]:
                # Midpoint rounded onto the upper value
                threshold = xs[pos]
            best = (int(f), float(threshold), float(decrease[pos]))

    if best is None:
        return None
    feature, threshold, decrease = best
    return feature, threshold, max(decrease, 0.0), X[rows, feature] <= threshold


def fit_tree(
    features: np.ndarray,
    labels: np.ndarray,
    allowed_features: Iterable[int],
    config: TreeConfig,
) -> DecisionTree:
    """Grow a tree greedily, splitting only on ``allowed_features``.

    A node becomes a leaf when it is pure, at ``max_depth``, holds fewer
    than ``min_samples_split`` samples, or no allowed feature varies on it.
    Impure nodes may take a zero-gain split (XOR-style data needs one at
    the root).
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError(f"features {X.shape} and labels ({y.size},) are not aligned")
    if y.size == 0:
        raise ValueError("cannot fit a tree on zero samples")
    allowed = np.unique(np.fromiter((int(f) for f in allowed_features), dtype=np.int64))
    if allowed.size == 0:
        raise ValueError("allowed_features must not be empty")
    if allowed[0] < 0 or allowed[-1] >= X.shape[1]:
        raise ValueError(f"allowed features {allowed.tolist()} out of range for {X.shape[1]} columns")

    n_train = y.size
    n_classes = max(2, int(y.max()) + 1)
    onehot = np.eye(n_classes, dtype=np.float64)[y]

    feature, threshold, left, right = [], [], [], []
    class_counts, impurity, decrease, fraction = [], [], [], []

    # (rows, depth, parent, is_left); right pushed first so left is built first
    stack = [(np.arange(n_train), 0, LEAF, False)]
    while stack:
        rows, depth, parent, is_left = stack.pop()
        node = len(feature)
        if parent != LEAF:
            (left if is_left else right)[parent] = node

        counts = onehot[rows].sum(axis=0)
        node_impurity = gini_impurity(counts)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        class_counts.append(counts)
        impurity.append(node_impurity)
        decrease.append(0.0)
        fraction.append(rows.size / n_train)

        if (
            node_impurity <= 0.0
            or (config.max_depth is not None and depth >= config.max_depth)
            or rows.size < config.min_samples_split
        ):
            continue
        found = _best_split(X, onehot, rows, allowed, counts, node_impurity)
        if found is None:
            continue

        split_feature, split_threshold, split_decrease, goes_left = found
        feature[node] = split_feature
        threshold[node] = split_threshold
        decrease[node] = split_decrease
        stack.append((rows[~goes_left], depth + 1, node, False))
        stack.append((rows[goes_left], depth + 1, node, True))

    counts = np.rint(np.array(class_counts)).astype(np.int64)
    return DecisionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=_majority(counts),
        class_counts=counts,
        impurity=np.array(impurity, dtype=np.float64),
        impurity_decrease=np.array(decrease, dtype=np.float64),
        sample_fraction=np.array(fraction, dtype=np.float64),
        allowed_features=tuple(int(f) for f in allowed),
        n_train=n_train,
        seed=config.seed,
    )


def predict_tree(tree: DecisionTree, sample: np.ndarray) -> int:
    """Class of one full-length sample; ``value <= threshold`` goes left."""
    return int(tree.predict(np.asarray(sample, dtype=np.float64).reshape(1, -1))[0])


def accumulate_gini_importance(tree: DecisionTree, out: np.ndarray) -> np.ndarray:
    """Add p(n) * dGini(n) of every internal node to ``out[feature]``."""
    if out.ndim != 1 or (tree.allowed_features and max(tree.allowed_features) >= out.size):
        raise ValueError(f"importance vector of length {out.size} does not fit this tree")
    internal = tree.feature != LEAF
    np.add.at(
        out,
        tree.feature[internal],
        tree.sample_fraction[internal] * tree.impurity_decrease[internal],
    )
    return out
