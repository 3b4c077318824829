"""Run output persistence - report files and model JSON load/save."""

from dataclasses import dataclass
import json
from pathlib import Path
from typing import Iterable, Union

import numpy as np
import pandas as pd
from loguru import logger

from dataset import DatasetSchema, Imputer, Standardizer
from models import FigrfModel, ForestModel

Ensemble = Union[ForestModel, FigrfModel]

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """A model file cannot be parsed."""


@dataclass
class ModelBundle:
    """A trained ensemble plus the preprocessing its inputs need."""

    model: Ensemble
    schema: DatasetSchema
    imputer: Imputer
    standardizer: Standardizer

    def transform(self, features: np.ndarray) -> np.ndarray:
        """Raw encoded features -> model inputs (impute, then standardize)."""
        return self.standardizer.transform(self.imputer.transform(features))

    def predict(self, features: np.ndarray) -> np.ndarray:
        return self.model.predict(self.transform(features))

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "format_version": FORMAT_VERSION,
            "schema": self.schema.to_dict(),
            "imputer": self.imputer.to_dict(),
            "standardizer": self.standardizer.to_dict(),
            "model": self.model.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelBundle":
        """Create from dictionary loaded from JSON."""
        return cls(
            model=model_from_dict(data["model"]),
            schema=DatasetSchema.from_dict(data["schema"]),
            imputer=Imputer.from_dict(data["imputer"]),
            standardizer=Standardizer.from_dict(data["standardizer"]),
        )


def model_from_dict(data: dict) -> Ensemble:
    sampling = data.get("sampling")
    if sampling == FigrfModel.SAMPLING:
        return FigrfModel.from_dict(data)
    if sampling == ForestModel.SAMPLING:
        return ForestModel.from_dict(data)
    raise ModelFormatError(f"unknown sampling tag {sampling!r}")


def save_model(path: Path, bundle: ModelBundle) -> None:
    """Save a model bundle to JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(bundle.to_dict(), f, indent=2)
        f.write("\n")


def load_model(path: Path) -> ModelBundle:
    """Load a model bundle from JSON."""
    path = Path(path)
    if not path.is_file():
        raise ModelFormatError(f"{path}: no such model file")
    try:
        with open(path) as f:
            data = json.load(f)
        if data.get("format_version") != FORMAT_VERSION:
            raise ModelFormatError(
                f"{path}: unsupported format_version {data.get('format_version')!r}"
            )
        return ModelBundle.from_dict(data)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON: {exc}") from exc
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"{path}: malformed model: {exc!r}") from exc


class RunDirectory:
    """Manages the files of one run's output directory."""

    def __init__(self, out_dir: Path):
        """Initialize with the output directory path."""
        self.out_dir = Path(out_dir)

    @classmethod
    def create(cls, out_dir: Path) -> "RunDirectory":
        """Create the output directory if needed."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return cls(out_dir)

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def write_json(self, name: str, data: dict) -> Path:
        path = self.path(name)
        with open(path, "w") as f:
            json.dump(data, f, indent=2)
            f.write("\n")
        logger.info(f"Wrote {path}")
        return path

    def write_jsonl(self, name: str, records: Iterable[dict]) -> Path:
        """One JSON object per line."""
        path = self.path(name)
        with open(path, "w") as f:
            for record in records:
                f.write(json.dumps(record) + "\n")
        logger.info(f"Wrote {path}")
        return path

    def write_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.path(name)
        frame.to_csv(path, index=False, lineterminator="\n")
        logger.info(f"Wrote {path}")
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self.path(name)
        path.write_text(text if text.endswith("\n") else text + "\n")
        logger.info(f"Wrote {path}")
        return path

    def save_model(self, name: str, bundle: ModelBundle) -> Path:
        path = self.path(name)
        save_model(path, bundle)
        logger.info(f"Wrote {path}")
        return path
