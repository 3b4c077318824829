"""Seeded synthetic binary datasets: a few informative columns plus pure noise."""

from pathlib import Path

import numpy as np
import pandas as pd
from loguru import logger

from dataset import Dataset


def make_classification(
    n_samples: int = 200,
    n_informative: int = 2,
    n_noise: int = 6,
    *,
    separation: float = 2.0,
    seed: int = 0,
) -> Dataset:
    """Balanced labels; informative columns are N(+-separation/2, 1) by class.

    Informative columns come first and are named ``informative_<i>``; the
    noise columns ``noise_<i>`` are N(0, 1) regardless of the label.
    """
    if n_samples < 2:
        raise ValueError(f"n_samples must be >= 2, got {n_samples}")
    if n_informative < 1:
        raise ValueError(f"n_informative must be >= 1, got {n_informative}")
    if n_noise < 0:
        raise ValueError(f"n_noise must be >= 0, got {n_noise}")

    rng = np.random.default_rng(seed)
    labels = rng.permutation(np.arange(n_samples) % 2)
    signs = np.where(labels == 1, 1.0, -1.0)[:, np.newaxis]
    informative = rng.normal(size=(n_samples, n_informative)) + signs * separation / 2
    noise = rng.normal(size=(n_samples, n_noise))
    names = tuple(f"informative_{i}" for i in range(n_informative)) + tuple(
        f"noise_{i}" for i in range(n_noise)
    )
    return Dataset(np.hstack([informative, noise]), labels, names)


def write_csv(data: Dataset, path: Path, label_column: str = "target") -> Path:
    """Write a dataset as CSV with the label as the last column."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(data.features, columns=list(data.feature_names))
    frame[label_column] = data.labels
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.6f")
    logger.info(f"Wrote {path}")
    return path
