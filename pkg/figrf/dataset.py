"""CSV ingestion, preprocessing and leak-free train/validation/test splitting."""

import csv
from dataclasses import dataclass, replace
from enum import Enum
import math
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

# Cells holding either of these strings are treated as missing
MISSING_SENTINELS = ("", "NA")
PLACEHOLDER_CATEGORY = "missing"

# Columns whose spread is below this (relative to their mean) count as constant
_ZERO_VARIANCE = 1e-12


class DatasetError(ValueError):
    """Base class for problems with input data."""


class DatasetFileNotFoundError(DatasetError):
    """The CSV file does not exist."""


class UnknownColumnError(DatasetError):
    """A configured column is not present in the CSV header."""


class RaggedRowError(DatasetError):
    """A row has a different number of cells than the header."""


class NonBinaryLabelError(DatasetError):
    """The label column holds values other than 0 and 1."""


class SplitError(DatasetError):
    """Split fractions leave a partition empty."""


class SchemaMismatchError(DatasetError):
    """Prediction input columns do not match the training schema."""


class UnknownCategoryError(DatasetError):
    """A categorical cell holds a value the category map does not know."""


class ColumnKind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


class MissingPolicy(str, Enum):
    MEDIAN = "median"
    PLACEHOLDER_CATEGORY = "placeholder_category"


@dataclass(frozen=True)
class ColumnSpec:
    """How one feature column is parsed, encoded and imputed.

    Categorical codes are positions in ``category_map``, so they are always
    dense ``0..k-1``.
    """

    name: str
    kind: ColumnKind = ColumnKind.NUMERIC
    missing_policy: Optional[MissingPolicy] = None
    category_map: tuple[str, ...] = ()

    def __post_init__(self):
        kind = ColumnKind(self.kind)
        policy = self.missing_policy
        if policy is None:
            policy = (
                MissingPolicy.MEDIAN
                if kind is ColumnKind.NUMERIC
                else MissingPolicy.PLACEHOLDER_CATEGORY
            )
        policy = MissingPolicy(policy)
        categories = tuple(self.category_map)

        if kind is ColumnKind.NUMERIC and policy is not MissingPolicy.MEDIAN:
            raise ValueError(f"column {self.name!r}: numeric columns are imputed with the median")
        if kind is ColumnKind.CATEGORICAL and policy is not MissingPolicy.PLACEHOLDER_CATEGORY:
            raise ValueError(
                f"column {self.name!r}: categorical columns are imputed with a placeholder category"
            )
        if kind is ColumnKind.NUMERIC and categories:
            raise ValueError(f"column {self.name!r}: numeric columns have no category map")
        if len(set(categories)) != len(categories):
            raise ValueError(f"column {self.name!r}: duplicate entries in category map")

        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "missing_policy", policy)
        object.__setattr__(self, "category_map", categories)

    @property
    def is_numeric(self) -> bool:
        return self.kind is ColumnKind.NUMERIC

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        data = {
            "name": self.name,
            "kind": self.kind.value,
            "missing_policy": self.missing_policy.value,
        }
        if self.category_map:
            data["category_map"] = list(self.category_map)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ColumnSpec":
        """Create from dictionary loaded from JSON."""
        return cls(
            name=data["name"],
            kind=ColumnKind(data.get("kind", "numeric")),
            missing_policy=data.get("missing_policy"),
            category_map=tuple(data.get("category_map", ())),
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    """Numeric feature matrix (rows = samples) with binary labels.

    Arrays are copied and made read-only on construction, so a Dataset can
    be shared freely between threads.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    columns: tuple[ColumnSpec, ...] = ()

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        names = tuple(self.feature_names)

        if features.ndim != 2:
            raise ValueError(f"features must be a 2-D matrix, got {features.ndim} dimension(s)")
        if features.shape[0] != labels.shape[0]:
            raise ValueError(
                f"{features.shape[0]} feature rows but {labels.shape[0]} labels"
            )
        if len(names) != features.shape[1]:
            raise ValueError(f"{features.shape[1]} feature columns but {len(names)} names")
        if labels.size and not np.isin(labels, (0, 1)).all():
            bad = sorted(set(labels.tolist()) - {0, 1})
            raise NonBinaryLabelError(f"labels must be 0 or 1, found {bad[:5]}")
        if self.columns and len(self.columns) != len(names):
            raise ValueError(f"{len(self.columns)} column specs for {len(names)} features")

        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "columns", tuple(self.columns))

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=2)

    def subset(self, indices: Sequence[int]) -> "Dataset":
        """Rows selected by index, in the given order."""
        rows = np.asarray(indices, dtype=np.intp)
        return replace(self, features=self.features[rows], labels=self.labels[rows])

    def with_features(self, features: np.ndarray) -> "Dataset":
        return replace(self, features=features)

    @classmethod
    def concat(cls, parts: Sequence["Dataset"]) -> "Dataset":
        """Stack datasets sharing one column layout."""
        first = parts[0]
        for part in parts[1:]:
            if part.feature_names != first.feature_names:
                raise ValueError("cannot concatenate datasets with different columns")
        return replace(
            first,
            features=np.vstack([p.features for p in parts]),
            labels=np.concatenate([p.labels for p in parts]),
        )


@dataclass(frozen=True)
class DatasetSchema:
    """Everything needed to turn a raw CSV into a model's feature matrix."""

    label_column: str
    columns: tuple[ColumnSpec, ...]
    drop_columns: tuple[str, ...] = ()
    label_map: Optional[Mapping[str, int]] = None

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "label_column": self.label_column,
            "columns": [c.to_dict() for c in self.columns],
            "drop_columns": list(self.drop_columns),
            "label_map": dict(self.label_map) if self.label_map is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetSchema":
        """Create from dictionary loaded from JSON."""
        return cls(
            label_column=data["label_column"],
            columns=tuple(ColumnSpec.from_dict(c) for c in data["columns"]),
            drop_columns=tuple(data.get("drop_columns", ())),
            label_map=data.get("label_map"),
        )


@dataclass(frozen=True)
class SplitSpec:
    """Fractions are of the whole dataset; the rest is the training part."""

    test_fraction: float = 0.2
    validation_fraction: float = 0.0
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ValueError(
                f"validation_fraction must be in [0, 1), got {self.validation_fraction}"
            )
        if self.test_fraction + self.validation_fraction >= 1.0:
            raise ValueError("test_fraction + validation_fraction must be below 1")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "test_fraction": self.test_fraction,
            "validation_fraction": self.validation_fraction,
            "stratified": self.stratified,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SplitSpec":
        """Create from dictionary loaded from JSON."""
        return cls(
            test_fraction=data.get("test_fraction", 0.2),
            validation_fraction=data.get("validation_fraction", 0.0),
            stratified=data.get("stratified", True),
            seed=data.get("seed", 0),
        )


def _check_row_widths(path: Path) -> None:
    """Every non-blank line must have as many cells as the header."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next((row for row in reader if row), None)
        if header is None:
            raise DatasetError(f"{path}: no header row")
        for row in reader:
            if row and len(row) != len(header):
                raise RaggedRowError(
                    f"{path}: line {reader.line_num} has {len(row)} cells, header has {len(header)}"
                )


def _read_cells(path: Path) -> pd.DataFrame:
    """Read every cell as a string, rejecting rows of the wrong width."""
    _check_row_widths(path)
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError as exc:
        raise DatasetError(f"{path}: no header row") from exc
    except pd.errors.ParserError as exc:
        raise RaggedRowError(f"{path}: {exc}") from exc


def _encode_labels(
    raw: pd.Series, label_map: Optional[Mapping[str, int]], path: Path
) -> np.ndarray:
    cells = raw.str.strip()
    missing = cells.isin(MISSING_SENTINELS).to_numpy()
    if missing.any():
        row = int(np.flatnonzero(missing)[0])
        raise NonBinaryLabelError(f"{path}: line {row + 2}: missing label in column {raw.name!r}")

    if label_map is not None:
        unmapped = sorted(set(cells) - set(label_map))
        if unmapped:
            raise NonBinaryLabelError(
                f"{path}: label values {unmapped[:5]} in column {raw.name!r} have no label_map entry"
            )
        return cells.map(label_map).to_numpy(dtype=np.int64)

    numeric = pd.to_numeric(cells, errors="coerce")
    binary = numeric.isin([0, 1]).to_numpy()
    if not binary.all():
        bad = sorted(set(cells[~binary]))
        raise NonBinaryLabelError(
            f"{path}: label column {raw.name!r} must hold 0/1, found {bad[:5]}"
        )
    return numeric.to_numpy().astype(np.int64)


def _encode_column(raw: pd.Series, spec: ColumnSpec, path: Path) -> tuple[np.ndarray, ColumnSpec]:
    """Parse one column; returns float codes/values and the resolved spec."""
    cells = raw.str.strip()
    missing = cells.isin(MISSING_SENTINELS)

    if spec.is_numeric:
        numbers = pd.to_numeric(cells.where(~missing), errors="coerce")
        bad = (numbers.isna() & ~missing).to_numpy()
        if bad.any():
            row = int(np.flatnonzero(bad)[0])
            raise DatasetError(
                f"{path}: line {row + 2}: column {spec.name!r} value {cells.iloc[row]!r} is not a number"
            )
        return numbers.to_numpy(dtype=np.float64), spec

    filled = cells.where(~missing, PLACEHOLDER_CATEGORY)
    if not spec.category_map:
        spec = replace(spec, category_map=tuple(sorted(set(filled))))
    lookup = {category: code for code, category in enumerate(spec.category_map)}
    unknown = sorted(set(filled) - set(lookup))
    if unknown:
        raise UnknownCategoryError(
            f"{path}: column {spec.name!r} has categories {unknown[:5]} outside its category map"
        )
    return filled.map(lookup).to_numpy(dtype=np.float64), spec


def load_csv(
    path: Path,
    label_column: str,
    specs: Sequence[ColumnSpec] = (),
    *,
    drop_columns: Sequence[str] = (),
    label_map: Optional[Mapping[str, int]] = None,
    impute: bool = True,
) -> Dataset:
    """Load a labelled CSV into a Dataset.

    Columns without a spec are numeric. Dropped columns are removed before
    anything else. With ``impute=False`` numeric gaps stay NaN so imputation
    statistics can be fit on a training split later.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetFileNotFoundError(f"{path}: no such file")

    frame = _read_cells(path)
    header = list(frame.columns)

    if label_column not in header:
        raise UnknownColumnError(f"{path}: label column {label_column!r} not in header {header}")
    for name in drop_columns:
        if name not in header:
            raise UnknownColumnError(f"{path}: drop column {name!r} not in header")
    spec_by_name = {spec.name: spec for spec in specs}
    for name in spec_by_name:
        if name not in header:
            raise UnknownColumnError(f"{path}: column spec {name!r} not in header")
    if label_map is not None and not set(label_map.values()) <= {0, 1}:
        raise ValueError(f"{path}: label_map must map onto 0 and 1")

    dropped = set(drop_columns)
    feature_names = [c for c in header if c != label_column and c not in dropped]
    if not feature_names:
        raise DatasetError(f"{path}: no feature columns left")

    labels = _encode_labels(frame[label_column], label_map, path)
    matrix = np.empty((len(frame), len(feature_names)), dtype=np.float64)
    columns = []
    for j, name in enumerate(feature_names):
        values, spec = _encode_column(frame[name], spec_by_name.get(name, ColumnSpec(name)), path)
        matrix[:, j] = values
        columns.append(spec)

    data = Dataset(matrix, labels, tuple(feature_names), tuple(columns))
    if data.n_samples < 2:
        raise DatasetError(f"{path}: need at least 2 rows, found {data.n_samples}")
    if (data.class_counts() == 0).any():
        raise NonBinaryLabelError(f"{path}: both classes 0 and 1 must be present")

    if impute:
        data = apply_imputer(fit_imputer(data), data)
    logger.debug(f"Loaded {path}: {data.n_samples} rows, {data.n_features} features")
    return data


def load_feature_matrix(path: Path, schema: DatasetSchema) -> np.ndarray:
    """Load an unlabelled (or labelled) CSV using a saved training schema.

    The label and dropped columns may be present; any other column must
    appear in the schema and every schema column must appear in the file.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetFileNotFoundError(f"{path}: no such file")
    frame = _read_cells(path)
    header = list(frame.columns)

    allowed_extra = {schema.label_column, *schema.drop_columns}
    missing = [name for name in schema.feature_names if name not in header]
    extra = [name for name in header if name not in schema.feature_names and name not in allowed_extra]
    if missing or extra:
        raise SchemaMismatchError(
            f"{path}: missing columns {missing}, unexpected columns {extra}"
        )

    matrix = np.empty((len(frame), len(schema.columns)), dtype=np.float64)
    for j, spec in enumerate(schema.columns):
        matrix[:, j], _ = _encode_column(frame[spec.name], spec, path)
    return matrix


def load_labels(path: Path, schema: DatasetSchema) -> np.ndarray:
    """Read and encode only the label column of a CSV."""
    path = Path(path)
    if not path.is_file():
        raise DatasetFileNotFoundError(f"{path}: no such file")
    frame = _read_cells(path)
    if schema.label_column not in frame.columns:
        raise SchemaMismatchError(f"{path}: label column {schema.label_column!r} is missing")
    return _encode_labels(frame[schema.label_column], schema.label_map, path)


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def _allocate(total: int, sizes: Sequence[int]) -> np.ndarray:
    """Split ``total`` across groups proportionally (largest remainder)."""
    sizes = np.asarray(sizes, dtype=np.float64)
    exact = total * sizes / sizes.sum()
    quota = np.floor(exact).astype(np.int64)
    order = np.argsort(-(exact - quota), kind="stable")
    quota[order[: total - int(quota.sum())]] += 1
    return quota


def split_indices(
    labels: np.ndarray, spec: SplitSpec
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row indices of the train, validation and test partitions (each sorted)."""
    labels = np.asarray(labels)
    n = labels.size
    n_test = _round_half_up(spec.test_fraction * n)
    n_val = _round_half_up(spec.validation_fraction * n)
    n_train = n - n_test - n_val
    if n_test == 0 or n_train <= 0 or (spec.validation_fraction > 0 and n_val == 0):
        raise SplitError(
            f"fractions test={spec.test_fraction}, validation={spec.validation_fraction} "
            f"on {n} rows give train={n_train}, validation={n_val}, test={n_test}"
        )

    rng = np.random.default_rng(spec.seed)
    if not spec.stratified:
        order = rng.permutation(n)
        return (
            np.sort(order[n_test + n_val:]),
            np.sort(order[n_test:n_test + n_val]),
            np.sort(order[:n_test]),
        )

    n_parts = 3 if n_val else 2
    groups = [np.flatnonzero(labels == c) for c in np.unique(labels)]
    test_quota = _allocate(n_test, [g.size for g in groups])
    val_quota = _allocate(n_val, [g.size for g in groups])
    train_parts, val_parts, test_parts = [], [], []
    for group, n_te, n_va in zip(groups, test_quota, val_quota):
        if group.size < n_parts or group.size - n_te - n_va < 1:
            raise SplitError(
                f"class {labels[group[0]]} has {group.size} rows, too few for {n_parts} partitions"
            )
        shuffled = rng.permutation(group)
        test_parts.append(shuffled[:n_te])
        val_parts.append(shuffled[n_te:n_te + n_va])
        train_parts.append(shuffled[n_te + n_va:])
    return tuple(np.sort(np.concatenate(parts)) for parts in (train_parts, val_parts, test_parts))


def split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Partition a dataset into (train, validation, test)."""
    train, validation, test = split_indices(data.labels, spec)
    logger.debug(
        f"Split {data.n_samples} rows into train={train.size}, "
        f"validation={validation.size}, test={test.size}"
    )
    return data.subset(train), data.subset(validation), data.subset(test)


@dataclass(frozen=True, eq=False)
class Imputer:
    """Per-column fill values (train medians) for numeric gaps."""

    fill_values: np.ndarray

    def transform(self, features: np.ndarray) -> np.ndarray:
        features = np.array(features, dtype=np.float64)
        if features.shape[1] != self.fill_values.size:
            raise ValueError(f"imputer fit on {self.fill_values.size} columns, got {features.shape[1]}")
        rows, cols = np.nonzero(np.isnan(features))
        features[rows, cols] = self.fill_values[cols]
        return features

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {"fill_values": self.fill_values.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Imputer":
        """Create from dictionary loaded from JSON."""
        return cls(fill_values=np.asarray(data["fill_values"], dtype=np.float64))


def fit_imputer(train: Dataset) -> Imputer:
    """Median of the non-missing training values per column (0.0 if none)."""
    fill = np.zeros(train.n_features)
    for j in range(train.n_features):
        present = train.features[:, j][~np.isnan(train.features[:, j])]
        if present.size:
            fill[j] = float(np.median(present))
    return Imputer(fill_values=fill)


def apply_imputer(imputer: Imputer, data: Dataset) -> Dataset:
    return data.with_features(imputer.transform(data.features))


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-column mean and population standard deviation from training data.

    Categorical and zero-variance columns pass through unchanged.
    """

    mean: np.ndarray
    scale: np.ndarray
    numeric_mask: np.ndarray

    @property
    def active(self) -> np.ndarray:
        constant = self.scale <= _ZERO_VARIANCE * np.maximum(1.0, np.abs(self.mean))
        return self.numeric_mask & ~constant

    def transform(self, features: np.ndarray) -> np.ndarray:
        features = np.array(features, dtype=np.float64)
        if features.shape[1] != self.mean.size:
            raise ValueError(f"standardizer fit on {self.mean.size} columns, got {features.shape[1]}")
        active = self.active
        features[:, active] = (features[:, active] - self.mean[active]) / self.scale[active]
        return features

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "numeric_mask": self.numeric_mask.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Standardizer":
        """Create from dictionary loaded from JSON."""
        return cls(
            mean=np.asarray(data["mean"], dtype=np.float64),
            scale=np.asarray(data["scale"], dtype=np.float64),
            numeric_mask=np.asarray(data["numeric_mask"], dtype=bool),
        )


def fit_standardizer(train: Dataset) -> Standardizer:
    """Mean and population std of the training columns."""
    if train.n_samples == 0:
        raise ValueError("cannot fit a standardizer on an empty dataset")
    if train.columns:
        numeric = np.array([c.is_numeric for c in train.columns], dtype=bool)
    else:
        numeric = np.ones(train.n_features, dtype=bool)
    return Standardizer(
        mean=train.features.mean(axis=0),
        scale=train.features.std(axis=0),
        numeric_mask=numeric,
    )


def apply_standardizer(standardizer: Standardizer, data: Dataset) -> Dataset:
    return data.with_features(standardizer.transform(data.features))
