"""Run configuration for FIGRF pipelines."""

from dataclasses import dataclass, field, replace
import json
import os
from pathlib import Path
from typing import Optional

from dataset import ColumnSpec, SplitSpec
from importance import ImportanceConfig
from models import ForestConfig
from sa_tuner import SaConfig


def default_output_dir() -> Path:
    """Output directory from FIGRF_OUT, or ./runs."""
    return Path(os.environ.get("FIGRF_OUT", Path.cwd() / "runs"))


def resolve_n_jobs(threads: int) -> int:
    """Map ``--threads`` to joblib's n_jobs (0 = all cores)."""
    if threads < 0:
        raise ValueError(f"threads must be >= 0, got {threads}")
    return -1 if threads == 0 else threads


@dataclass
class RunConfig:
    """Everything one pipeline run needs.

    Validation is a slice of the data set aside from training: the default
    20% of all rows is 25% of the 80% training portion.
    """

    dataset_path: str
    label_column: str = "target"
    columns: list[ColumnSpec] = field(default_factory=list)
    drop_columns: list[str] = field(default_factory=list)
    label_map: Optional[dict[str, int]] = None

    split: SplitSpec = field(default_factory=lambda: SplitSpec(0.2, 0.2, True, 0))
    baseline: ForestConfig = field(default_factory=ForestConfig)
    importance: ImportanceConfig = field(default_factory=ImportanceConfig)
    annealing: SaConfig = field(default_factory=SaConfig)

    top_k: int = 10
    output_dir: str = field(default_factory=lambda: str(default_output_dir()))
    threads: int = 1

    def __post_init__(self):
        if self.split.validation_fraction <= 0:
            raise ValueError("split.validation_fraction must be positive: tuning needs validation data")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        resolve_n_jobs(self.threads)

    @property
    def n_jobs(self) -> int:
        return resolve_n_jobs(self.threads)

    def with_seed(self, seed: int) -> "RunConfig":
        """Same run with every random stream re-seeded from ``seed``."""
        return replace(
            self,
            split=replace(self.split, seed=seed),
            baseline=replace(self.baseline, seed=seed),
            importance=replace(self.importance, seed=seed),
            annealing=replace(self.annealing, seed=seed),
        )

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "dataset": {
                "path": self.dataset_path,
                "label_column": self.label_column,
                "columns": [c.to_dict() for c in self.columns],
                "drop_columns": list(self.drop_columns),
                "label_map": self.label_map,
            },
            "split": self.split.to_dict(),
            "baseline": self.baseline.to_dict(),
            "importance": self.importance.to_dict(),
            "annealing": self.annealing.to_dict(),
            "output": {
                "dir": self.output_dir,
                "top_k": self.top_k,
                "threads": self.threads,
            },
        }

    @classmethod
    def from_dict(cls, data: dict, base_dir: Optional[Path] = None) -> "RunConfig":
        """Create from dictionary loaded from JSON.

        Relative dataset and output paths are resolved against ``base_dir``
        (the config file's directory).
        """
        dataset = data["dataset"]
        path = Path(dataset["path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        output = data.get("output", {})
        output_dir = Path(output.get("dir", default_output_dir()))
        if base_dir is not None and "dir" in output and not output_dir.is_absolute():
            output_dir = base_dir / output_dir
        split = data.get("split", {})
        return cls(
            dataset_path=str(path),
            label_column=dataset.get("label_column", "target"),
            columns=[ColumnSpec.from_dict(c) for c in dataset.get("columns", [])],
            drop_columns=list(dataset.get("drop_columns", [])),
            label_map=dataset.get("label_map"),
            split=SplitSpec.from_dict({"validation_fraction": 0.2, **split}),
            baseline=ForestConfig.from_dict(data.get("baseline", {})),
            importance=ImportanceConfig.from_dict(data.get("importance", {})),
            annealing=SaConfig.from_dict(data.get("annealing", {})),
            top_k=output.get("top_k", 10),
            output_dir=str(output_dir),
            threads=output.get("threads", 1),
        )

    def save(self, path: Path) -> None:
        """Save configuration to disk."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def load(cls, path: Path) -> "RunConfig":
        """Load configuration from disk; errors name the file and field."""
        path = Path(path)
        try:
            with open(path) as f:
                data = json.load(f)
        except FileNotFoundError as exc:
            raise ValueError(f"{path}: config file not found") from exc
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON: {exc}") from exc
        try:
            return cls.from_dict(data, base_dir=path.parent)
        except KeyError as exc:
            raise ValueError(f"{path}: missing field {exc.args[0]!r}") from exc
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}: {exc}") from exc
