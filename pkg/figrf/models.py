"""Data classes for forest configurations and trained ensembles."""

from dataclasses import dataclass, field
import math
from typing import ClassVar, Optional

import numpy as np

from tree import DecisionTree, TreeConfig

# Probabilities must sum to one within this tolerance
PROBABILITY_TOLERANCE = 1e-9


def default_features_per_tree(n_features: int) -> int:
    """floor(sqrt(d)), at least one."""
    return max(1, math.isqrt(n_features))


@dataclass(frozen=True)
class ForestConfig:
    """Standard random forest settings (uniform feature sampling)."""

    n_estimators: int = 100
    max_depth: Optional[int] = None
    features_per_tree: Optional[int] = None  # None = floor(sqrt(d))
    min_samples_split: int = 2
    seed: int = 0
    n_jobs: int = 1  # Not part of the model; results do not depend on it

    def __post_init__(self):
        _validate_ensemble(self.n_estimators, self.max_depth, self.features_per_tree, self.seed)

    def tree_config(self) -> TreeConfig:
        return TreeConfig(
            max_depth=self.max_depth,
            min_samples_split=self.min_samples_split,
            seed=self.seed,
        )

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "features_per_tree": self.features_per_tree,
            "min_samples_split": self.min_samples_split,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ForestConfig":
        """Create from dictionary loaded from JSON."""
        return cls(
            n_estimators=data.get("n_estimators", 100),
            max_depth=data.get("max_depth"),
            features_per_tree=data.get("features_per_tree"),
            min_samples_split=data.get("min_samples_split", 2),
            seed=data.get("seed", 0),
        )


@dataclass(frozen=True, eq=False)
class FigrfConfig:
    """Importance-guided forest settings: per-tree weighted feature sampling."""

    n_estimators: int
    probabilities: np.ndarray
    max_depth: Optional[int] = None
    features_per_tree: Optional[int] = None  # None = floor(sqrt(d))
    min_samples_split: int = 2
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        _validate_ensemble(self.n_estimators, self.max_depth, self.features_per_tree, self.seed)
        probabilities = np.array(self.probabilities, dtype=np.float64).reshape(-1)
        if probabilities.size == 0:
            raise ValueError("probabilities must not be empty")
        if (probabilities < 0).any() or not np.isfinite(probabilities).all():
            raise ValueError("probabilities must be finite and non-negative")
        if abs(probabilities.sum() - 1.0) > PROBABILITY_TOLERANCE:
            raise ValueError(f"probabilities sum to {probabilities.sum()!r}, not 1")
        n_positive = int(np.count_nonzero(probabilities > 0))
        if self.features_per_tree is not None and self.features_per_tree > n_positive:
            raise ValueError(
                f"features_per_tree={self.features_per_tree} but only {n_positive} "
                "features have positive probability"
            )
        probabilities.setflags(write=False)
        object.__setattr__(self, "probabilities", probabilities)

    def tree_config(self) -> TreeConfig:
        return TreeConfig(
            max_depth=self.max_depth,
            min_samples_split=self.min_samples_split,
            seed=self.seed,
        )

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "n_estimators": self.n_estimators,
            "max_depth": self.max_depth,
            "features_per_tree": self.features_per_tree,
            "min_samples_split": self.min_samples_split,
            "seed": self.seed,
            "probabilities": self.probabilities.tolist(),
        }


def _validate_ensemble(
    n_estimators: int, max_depth: Optional[int], features_per_tree: Optional[int], seed: int
) -> None:
    if n_estimators < 1:
        raise ValueError(f"n_estimators must be >= 1, got {n_estimators}")
    if max_depth is not None and max_depth < 1:
        raise ValueError(f"max_depth must be >= 1 or None, got {max_depth}")
    if features_per_tree is not None and features_per_tree < 1:
        raise ValueError(f"features_per_tree must be >= 1, got {features_per_tree}")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")


class _VotingEnsemble:
    """Majority vote over binary tree predictions; even splits go to class 0."""

    trees: list[DecisionTree]
    n_features: int

    def votes(self, features: np.ndarray) -> np.ndarray:
        """Number of trees voting for class 1, per row."""
        X = np.asarray(features, dtype=np.float64)
        if X.ndim == 1:
            X = X[np.newaxis, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"model expects {self.n_features} features, got {X.shape[1]}")
        total = np.zeros(X.shape[0], dtype=np.int64)
        for tree in self.trees:
            total += tree.predict(X)
        return total

    def predict(self, features: np.ndarray) -> np.ndarray:
        return (2 * self.votes(features) > len(self.trees)).astype(np.int64)

    @property
    def feature_sets(self) -> list[tuple[int, ...]]:
        """S(t) for every tree t."""
        return [tree.allowed_features for tree in self.trees]

    def _usage(self) -> np.ndarray:
        counts = np.zeros(self.n_features, dtype=np.int64)
        for features in self.feature_sets:
            counts[list(features)] += 1
        return counts


@dataclass(eq=False)
class ForestModel(_VotingEnsemble):
    """A trained standard random forest."""

    SAMPLING: ClassVar[str] = "uniform"

    trees: list[DecisionTree]
    config: ForestConfig
    n_features: int
    feature_names: tuple[str, ...] = ()

    @property
    def usage_counts(self) -> np.ndarray:
        return self._usage()

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "sampling": self.SAMPLING,
            **self.config.to_dict(),
            "n_features": self.n_features,
            "feature_names": list(self.feature_names),
            "trees": [tree.to_dict() for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ForestModel":
        """Create from dictionary loaded from JSON."""
        return cls(
            trees=[DecisionTree.from_dict(t) for t in data["trees"]],
            config=ForestConfig.from_dict(data),
            n_features=int(data["n_features"]),
            feature_names=tuple(data.get("feature_names", ())),
        )


@dataclass(eq=False)
class FigrfModel(_VotingEnsemble):
    """A trained importance-guided forest with per-feature usage counts."""

    SAMPLING: ClassVar[str] = "weighted"

    trees: list[DecisionTree]
    config: FigrfConfig
    n_features: int
    usage_counts: np.ndarray = field(default=None)
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.usage_counts is None:
            self.usage_counts = self._usage()

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "sampling": self.SAMPLING,
            **self.config.to_dict(),
            "n_features": self.n_features,
            "feature_names": list(self.feature_names),
            "usage_counts": self.usage_counts.tolist(),
            "trees": [tree.to_dict() for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FigrfModel":
        """Create from dictionary loaded from JSON."""
        config = FigrfConfig(
            n_estimators=data["n_estimators"],
            probabilities=np.asarray(data["probabilities"], dtype=np.float64),
            max_depth=data.get("max_depth"),
            features_per_tree=data.get("features_per_tree"),
            min_samples_split=data.get("min_samples_split", 2),
            seed=data.get("seed", 0),
        )
        return cls(
            trees=[DecisionTree.from_dict(t) for t in data["trees"]],
            config=config,
            n_features=int(data["n_features"]),
            usage_counts=np.asarray(data["usage_counts"], dtype=np.int64),
            feature_names=tuple(data.get("feature_names", ())),
        )
