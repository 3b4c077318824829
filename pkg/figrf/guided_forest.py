"""Feature-importance-guided random forest (FIGRF).

Like the standard forest, except that each tree's feature subset is drawn
without replacement from an importance-derived probability distribution.
"""

from dataclasses import dataclass, replace

import numpy as np
from loguru import logger

from dataset import Dataset
from forest import fit_ensemble_trees, resolve_features_per_tree
from models import FigrfConfig, FigrfModel


@dataclass(frozen=True)
class UsageRow:
    feature: str
    count: int
    percentage: float

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {"feature": self.feature, "count": self.count, "percentage": self.percentage}


def weighted_sample_without_replacement(
    probabilities: np.ndarray, m: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``m`` distinct indices by sequential renormalised draws.

    Each draw picks index i with probability p_i / (remaining mass), then
    removes i. Indices are returned in draw order.
    """
    weights = np.array(probabilities, dtype=np.float64)
    n_positive = int(np.count_nonzero(weights > 0))
    if m > n_positive:
        raise ValueError(f"cannot draw {m} features, only {n_positive} have positive probability")

    picks = np.empty(m, dtype=np.int64)
    for k in range(m):
        cumulative = np.cumsum(weights)
        target = rng.random() * cumulative[-1]
        index = int(np.searchsorted(cumulative, target, side="right"))
        if index >= weights.size or weights[index] <= 0:
            # target rounded onto the total mass
            index = int(np.flatnonzero(weights > 0)[-1])
        picks[k] = index
        weights[index] = 0.0
    return picks


def fit_figrf(train: Dataset, config: FigrfConfig) -> FigrfModel:
    """Forest whose per-tree feature subsets are drawn from the importance probabilities."""
    d = train.n_features
    if config.probabilities.size != d:
        raise ValueError(f"{config.probabilities.size} probabilities for {d} features")
    m = resolve_features_per_tree(config.features_per_tree, d)
    config = replace(config, features_per_tree=m)
    probabilities = config.probabilities

    def draw_weighted(rng: np.random.Generator) -> np.ndarray:
        return weighted_sample_without_replacement(probabilities, m, rng)

    trees = fit_ensemble_trees(
        train, config.n_estimators, config.seed, draw_weighted, config.tree_config(), config.n_jobs
    )
    logger.debug(f"Fit FIGRF: {config.n_estimators} trees, depth {config.max_depth}, {m} features each")
    return FigrfModel(trees=trees, config=config, n_features=d, feature_names=train.feature_names)


def predict_figrf(model: FigrfModel, sample: np.ndarray) -> int:
    """Majority vote for one sample; an even split goes to class 0."""
    return int(model.predict(np.asarray(sample, dtype=np.float64).reshape(1, -1))[0])


def usage_report(model: FigrfModel) -> list[UsageRow]:
    """Trees using each feature, most used first (ties by feature index)."""
    names = model.feature_names or tuple(f"f{i}" for i in range(model.n_features))
    n_trees = len(model.trees)
    order = sorted(range(model.n_features), key=lambda i: (-int(model.usage_counts[i]), i))
    return [
        UsageRow(
            feature=names[i],
            count=int(model.usage_counts[i]),
            percentage=100.0 * int(model.usage_counts[i]) / n_trees,
        )
        for i in order
    ]
