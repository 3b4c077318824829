"""Feature importance estimators and their fusion into sampling probabilities.

Three estimators (permutation, Gini, mutual information) are min-max
normalised, averaged per feature, ranked and pushed through a softmax with
temperature ``softmax_alpha``.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger

from dataset import Dataset
from models import FigrfModel, ForestModel
from tree import accumulate_gini_importance

Ensemble = Union[ForestModel, FigrfModel]


@dataclass(frozen=True)
class ImportanceConfig:
    n_repeats: int = 5
    softmax_alpha: float = 1.0
    mi_bins: int = 10
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_repeats < 1:
            raise ValueError(f"n_repeats must be >= 1, got {self.n_repeats}")
        if not self.softmax_alpha > 0 or not np.isfinite(self.softmax_alpha):
            raise ValueError(f"softmax_alpha must be a positive number, got {self.softmax_alpha}")
        if self.mi_bins < 2:
            raise ValueError(f"mi_bins must be >= 2, got {self.mi_bins}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "n_repeats": self.n_repeats,
            "softmax_alpha": self.softmax_alpha,
            "mi_bins": self.mi_bins,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ImportanceConfig":
        """Create from dictionary loaded from JSON."""
        return cls(
            n_repeats=data.get("n_repeats", 5),
            softmax_alpha=data.get("softmax_alpha", 1.0),
            mi_bins=data.get("mi_bins", 10),
            seed=data.get("seed", 0),
        )


@dataclass(frozen=True, eq=False)
class ImportanceProfile:
    """Raw, normalised and fused scores for every feature, index-aligned."""

    feature_names: tuple[str, ...]
    permutation: np.ndarray
    gini: np.ndarray
    mutual_info: np.ndarray
    permutation_norm: np.ndarray
    gini_norm: np.ndarray
    mutual_info_norm: np.ndarray
    averaged: np.ndarray
    ranking: np.ndarray
    probabilities: np.ndarray
    softmax_alpha: float

    @property
    def n_features(self) -> int:
        return int(self.averaged.size)

    def rank_of(self) -> np.ndarray:
        """1-based rank of every feature."""
        ranks = np.empty(self.n_features, dtype=np.int64)
        ranks[self.ranking] = np.arange(1, self.n_features + 1)
        return ranks

    def to_frame(self) -> pd.DataFrame:
        """One row per feature, in feature order."""
        return pd.DataFrame(
            {
                "feature": list(self.feature_names),
                "permutation": self.permutation,
                "gini": self.gini,
                "mutual_info": self.mutual_info,
                "permutation_norm": self.permutation_norm,
                "gini_norm": self.gini_norm,
                "mutual_info_norm": self.mutual_info_norm,
                "average": self.averaged,
                "rank": self.rank_of(),
                "probability": self.probabilities,
            }
        )

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "softmax_alpha": self.softmax_alpha,
            "ranking": [self.feature_names[i] for i in self.ranking],
            "features": self.to_frame().to_dict(orient="records"),
        }

    def top(self, k: int = 10) -> str:
        """Ranked table of the ``k`` most important features."""
        rows = self.to_frame().iloc[self.ranking[:k]]
        return rows[["rank", "feature", "average", "probability"]].to_string(
            index=False, float_format=lambda v: f"{v:.4f}"
        )


def min_max_normalize(scores: np.ndarray) -> np.ndarray:
    """Scale into [0, 1]; a constant vector maps to all zeros."""
    scores = np.asarray(scores, dtype=np.float64)
    low, high = scores.min(), scores.max()
    if high - low <= 0:
        return np.zeros_like(scores)
    return (scores - low) / (high - low)


def softmax(scores: np.ndarray, alpha: float) -> np.ndarray:
    """exp(alpha * s_i) / sum_j exp(alpha * s_j), shifted by the max for stability."""
    z = alpha * np.asarray(scores, dtype=np.float64)
    z = z - z.max()
    weights = np.exp(z)
    # Large alpha underflows far-below-max scores to 0; keep every p_i > 0
    return np.maximum(weights / weights.sum(), np.finfo(np.float64).tiny)


def permutation_importance(
    model: Ensemble, validation: Dataset, config: ImportanceConfig
) -> np.ndarray:
    """Mean accuracy drop over ``n_repeats`` independent shuffles of each column.

    Features no tree can split on score exactly 0 without being shuffled.
    """
    if not model.trees:
        raise ValueError("model has no trees")
    if validation.n_samples == 0:
        raise ValueError("permutation importance needs a non-empty validation set")

    X, y = validation.features, validation.labels
    base_accuracy = float(np.mean(model.predict(X) == y))
    reachable = sorted(set().union(*(tree.feature_indices_used for tree in model.trees)))

    def drop(feature: int, repeat: int) -> float:
        rng = np.random.default_rng([config.seed, feature, repeat])
        shuffled = X.copy()
        shuffled[:, feature] = rng.permutation(shuffled[:, feature])
        return base_accuracy - float(np.mean(model.predict(shuffled) == y))

    jobs = [(f, r) for f in reachable for r in range(config.n_repeats)]
    if config.n_jobs == 1:
        drops = [drop(f, r) for f, r in jobs]
    else:
        drops = Parallel(n_jobs=config.n_jobs, prefer="threads")(delayed(drop)(f, r) for f, r in jobs)

    scores = np.zeros(validation.n_features)
    for (feature, _), value in zip(jobs, drops):
        scores[feature] += value
    return scores / config.n_repeats


def gini_importance(model: Ensemble) -> np.ndarray:
    """Sum over trees of p(n) * dGini(n) for every node splitting on a feature."""
    scores = np.zeros(model.n_features)
    for tree in model.trees:
        accumulate_gini_importance(tree, scores)
    return scores


def discretize(column: np.ndarray, bins: int) -> np.ndarray:
    """Integer codes: raw values when there are few, else equal-frequency bins."""
    column = np.asarray(column, dtype=np.float64)
    values, codes = np.unique(column, return_inverse=True)
    if values.size <= bins:
        return codes.reshape(-1)
    edges = np.unique(np.quantile(column, np.linspace(0.0, 1.0, bins + 1)[1:-1]))
    return np.searchsorted(edges, column, side="right")


def mutual_information_from_table(table: np.ndarray) -> float:
    """MI in nats of a contingency table of counts (rows: feature bins)."""
    joint = np.asarray(table, dtype=np.float64)
    joint = joint / joint.sum()
    outer = joint.sum(axis=1, keepdims=True) * joint.sum(axis=0, keepdims=True)
    nonzero = joint > 0
    return float(np.sum(joint[nonzero] * np.log(joint[nonzero] / outer[nonzero])))


def mutual_information(train: Dataset, config: ImportanceConfig) -> np.ndarray:
    """MI in nats between each discretised feature and the label."""
    if train.n_samples == 0:
        raise ValueError("mutual information needs a non-empty dataset")
    n_classes = max(2, int(train.labels.max()) + 1)
    scores = np.empty(train.n_features)
    for j in range(train.n_features):
        codes = discretize(train.features[:, j], config.mi_bins)
        table = np.bincount(
            codes * n_classes + train.labels, minlength=(int(codes.max()) + 1) * n_classes
        ).reshape(-1, n_classes)
        scores[j] = mutual_information_from_table(table)
    return scores


def compose(
    perm: np.ndarray,
    gini: np.ndarray,
    mi: np.ndarray,
    config: ImportanceConfig,
    feature_names: Optional[Sequence[str]] = None,
) -> ImportanceProfile:
    """Min-max each score vector, average, rank and softmax into sampling probabilities."""
    perm, gini, mi = (np.asarray(v, dtype=np.float64).reshape(-1) for v in (perm, gini, mi))
    if not perm.size == gini.size == mi.size:
        raise ValueError(
            f"importance vectors differ in length: {perm.size}, {gini.size}, {mi.size}"
        )
    if perm.size == 0:
        raise ValueError("importance vectors are empty")
    names = tuple(feature_names) if feature_names is not None else tuple(f"f{i}" for i in range(perm.size))

    perm_norm, gini_norm, mi_norm = (min_max_normalize(v) for v in (perm, gini, mi))
    averaged = (gini_norm + perm_norm + mi_norm) / 3
    return ImportanceProfile(
        feature_names=names,
        permutation=perm,
        gini=gini,
        mutual_info=mi,
        permutation_norm=perm_norm,
        gini_norm=gini_norm,
        mutual_info_norm=mi_norm,
        averaged=averaged,
        ranking=np.argsort(-averaged, kind="stable"),
        probabilities=softmax(averaged, config.softmax_alpha),
        softmax_alpha=config.softmax_alpha,
    )


def compute_profile(
    model: Ensemble, fit_data: Dataset, validation: Dataset, config: ImportanceConfig
) -> ImportanceProfile:
    """All three estimators on training-side data, fused into one profile.

    Gini comes from ``model``, mutual information from ``fit_data`` and
    permutation importance from ``validation``.
    """
    perm = permutation_importance(model, validation, config)
    gini = gini_importance(model)
    mi = mutual_information(fit_data, config)
    profile = compose(perm, gini, mi, config, fit_data.feature_names)
    logger.info(
        "Top features: " + ", ".join(profile.feature_names[i] for i in profile.ranking[:5])
    )
    return profile
