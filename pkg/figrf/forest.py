"""Standard random forest: bootstrap rows, uniform feature subsets, majority vote."""

from dataclasses import replace
from typing import Callable, Optional

import numpy as np
from joblib import Parallel, delayed
from loguru import logger

from dataset import Dataset
from models import ForestConfig, ForestModel, default_features_per_tree
from tree import DecisionTree, TreeConfig, fit_tree

# Draws S(t) for one tree from that tree's own generator
FeatureDraw = Callable[[np.random.Generator], np.ndarray]


def bootstrap_indices(n: int, rng: np.random.Generator) -> np.ndarray:
    """n row indices drawn with replacement."""
    return rng.integers(0, n, size=n)


def tree_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for tree ``index``; independent of fitting order."""
    return np.random.default_rng([seed, index])


def fit_ensemble_trees(
    train: Dataset,
    n_estimators: int,
    seed: int,
    draw_features: FeatureDraw,
    tree_config: TreeConfig,
    n_jobs: int = 1,
) -> list[DecisionTree]:
    """Fit ``n_estimators`` bagged trees, each restricted to its drawn features.

    Each tree draws its bootstrap rows first and its feature subset second
    from ``tree_rng(seed, t)``, so any ``n_jobs`` gives the same trees.
    """
    if train.n_samples == 0:
        raise ValueError("cannot fit a forest on an empty dataset")
    X, y = train.features, train.labels

    def fit_one(index: int) -> DecisionTree:
        rng = tree_rng(seed, index)
        rows = bootstrap_indices(train.n_samples, rng)
        features = draw_features(rng)
        return fit_tree(X[rows], y[rows], features, tree_config)

    if n_jobs == 1:
        return [fit_one(t) for t in range(n_estimators)]
    return Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(fit_one)(t) for t in range(n_estimators)
    )


def resolve_features_per_tree(requested: Optional[int], n_features: int) -> int:
    m = default_features_per_tree(n_features) if requested is None else requested
    if m > n_features:
        raise ValueError(f"features_per_tree={m} exceeds the {n_features} available features")
    return m


def fit_forest(train: Dataset, config: ForestConfig) -> ForestModel:
    """Standard random forest: bootstrap rows and a uniform feature subset per tree."""
    d = train.n_features
    m = resolve_features_per_tree(config.features_per_tree, d)
    config = replace(config, features_per_tree=m)

    def draw_uniform(rng: np.random.Generator) -> np.ndarray:
        return rng.choice(d, size=m, replace=False)

    trees = fit_ensemble_trees(
        train, config.n_estimators, config.seed, draw_uniform, config.tree_config(), config.n_jobs
    )
    logger.debug(f"Fit random forest: {config.n_estimators} trees, {m} of {d} features each")
    return ForestModel(trees=trees, config=config, n_features=d, feature_names=train.feature_names)


def predict_forest(model: ForestModel, sample: np.ndarray) -> int:
    """Majority vote for one sample; an even split goes to class 0."""
    return int(model.predict(np.asarray(sample, dtype=np.float64).reshape(1, -1))[0])
