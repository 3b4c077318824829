"""Shared fixtures; puts figrf/ on sys.path the way ``python figrf/main.py`` does."""

from pathlib import Path
import sys

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "figrf"))

from dataset import Dataset, load_csv  # noqa: E402

DATA_DIR = ROOT / "data"
CONFIG_DIR = ROOT / "configs"


@pytest.fixture
def iris() -> Dataset:
    return load_csv(DATA_DIR / "iris_binary.csv", "target")


@pytest.fixture
def wine() -> Dataset:
    return load_csv(DATA_DIR / "wine_binary.csv", "target")


@pytest.fixture
def write_csv(tmp_path):
    """Write ``text`` to a CSV file under tmp_path and return its path."""

    def _write(text: str, name: str = "data.csv") -> Path:
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write


def random_dataset(rng: np.random.Generator, n: int = 60, d: int = 5) -> Dataset:
    """Noisy threshold labels on the first two columns; both classes present."""
    features = rng.normal(size=(n, d))
    labels = (features[:, 0] + 0.5 * features[:, 1] + rng.normal(scale=0.3, size=n) > 0).astype(int)
    labels[0], labels[1] = 0, 1
    return Dataset(features, labels, tuple(f"x{i}" for i in range(d)))
