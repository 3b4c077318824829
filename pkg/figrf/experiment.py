"""Experiment coordinator - owns the data splits and the state of one pipeline run."""

from dataclasses import dataclass, replace
from typing import Optional

from loguru import logger

from config import RunConfig
from dataset import (
    Dataset,
    DatasetSchema,
    Imputer,
    Standardizer,
    apply_imputer,
    apply_standardizer,
    fit_imputer,
    fit_standardizer,
    load_csv,
    split,
)
from forest import fit_forest
from guided_forest import UsageRow, fit_figrf, usage_report
from importance import ImportanceProfile, compute_profile
from metrics import MetricReport, evaluate
from models import FigrfConfig, FigrfModel, ForestModel
from persistence import ModelBundle
from sa_tuner import SaResult, anneal


class SealedDataset:
    """Holds the test split until the final evaluation opens it, once."""

    def __init__(self, data: Dataset):
        self._data = data
        self._opened = False

    @property
    def n_samples(self) -> int:
        return self._data.n_samples

    @property
    def is_open(self) -> bool:
        return self._opened

    def open(self) -> Dataset:
        if self._opened:
            raise RuntimeError("the test split has already been used for the final evaluation")
        self._opened = True
        return self._data


@dataclass
class PreparedData:
    """Preprocessed partitions; ``train`` is ``fit`` plus ``validation``."""

    fit: Dataset
    validation: Dataset
    train: Dataset
    test: SealedDataset
    schema: DatasetSchema
    imputer: Imputer
    standardizer: Standardizer


@dataclass
class RunSummary:
    profile: ImportanceProfile
    tuning: SaResult
    baseline: MetricReport
    figrf: MetricReport
    usage: list[UsageRow]
    bundle: ModelBundle


class Experiment:
    """Runs the pipeline stages in order, caching each stage's result.

    Stages: prepare -> importance profile -> tuning -> final models -> test
    evaluation. Only the last stage touches the test split.
    """

    def __init__(self, config: RunConfig):
        """
        Initialize the experiment.

        Args:
            config: The run configuration
        """
        self.config = config
        self._prepared: Optional[PreparedData] = None
        self._profile: Optional[ImportanceProfile] = None
        self._tuning: Optional[SaResult] = None

    @property
    def prepared(self) -> PreparedData:
        if self._prepared is None:
            self._prepared = self._prepare()
        return self._prepared

    def _prepare(self) -> PreparedData:
        """Load, split, then fit imputation and scaling on the training part only."""
        config = self.config
        raw = load_csv(
            config.dataset_path,
            config.label_column,
            config.columns,
            drop_columns=config.drop_columns,
            label_map=config.label_map,
            impute=False,
        )
        fit_raw, validation_raw, test_raw = split(raw, config.split)
        train_raw = Dataset.concat([fit_raw, validation_raw])

        imputer = fit_imputer(train_raw)
        standardizer = fit_standardizer(apply_imputer(imputer, train_raw))

        def preprocess(part: Dataset) -> Dataset:
            return apply_standardizer(standardizer, apply_imputer(imputer, part))

        logger.info(
            f"Prepared {config.dataset_path}: fit={fit_raw.n_samples}, "
            f"validation={validation_raw.n_samples}, test={test_raw.n_samples}, "
            f"features={raw.n_features}"
        )
        return PreparedData(
            fit=preprocess(fit_raw),
            validation=preprocess(validation_raw),
            train=preprocess(train_raw),
            test=SealedDataset(preprocess(test_raw)),
            schema=DatasetSchema(
                label_column=config.label_column,
                columns=raw.columns,
                drop_columns=tuple(config.drop_columns),
                label_map=config.label_map,
            ),
            imputer=imputer,
            standardizer=standardizer,
        )

    def importance_profile(self) -> ImportanceProfile:
        """Baseline forest on the fit part; permutation importance on validation."""
        if self._profile is None:
            data = self.prepared
            baseline = fit_forest(data.fit, replace(self.config.baseline, n_jobs=self.config.n_jobs))
            self._profile = compute_profile(
                baseline,
                data.fit,
                data.validation,
                replace(self.config.importance, n_jobs=self.config.n_jobs),
            )
        return self._profile

    def tune(self) -> SaResult:
        if self._tuning is None:
            data = self.prepared
            self._tuning = anneal(
                data.fit,
                data.validation,
                self.importance_profile().probabilities,
                self.config.annealing,
                n_jobs=self.config.n_jobs,
            )
        return self._tuning

    def final_models(self) -> tuple[ForestModel, FigrfModel]:
        """Baseline and tuned FIGRF, both retrained on fit + validation."""
        data = self.prepared
        best = self.tune().best
        baseline = fit_forest(data.train, replace(self.config.baseline, n_jobs=self.config.n_jobs))
        figrf = fit_figrf(
            data.train,
            FigrfConfig(
                n_estimators=best.n_estimators,
                max_depth=best.max_depth,
                probabilities=self.importance_profile().probabilities,
                seed=self.config.annealing.seed,
                n_jobs=self.config.n_jobs,
            ),
        )
        return baseline, figrf

    def run(self) -> RunSummary:
        """All stages, ending with the single evaluation on the test split."""
        baseline, figrf = self.final_models()
        data = self.prepared
        test = data.test.open()
        baseline_report = evaluate(baseline.predict(test.features), test.labels)
        figrf_report = evaluate(figrf.predict(test.features), test.labels)
        logger.info(
            f"Test accuracy: baseline={baseline_report.accuracy:.4f}, figrf={figrf_report.accuracy:.4f}"
        )
        return RunSummary(
            profile=self.importance_profile(),
            tuning=self.tune(),
            baseline=baseline_report,
            figrf=figrf_report,
            usage=usage_report(figrf),
            bundle=ModelBundle(
                model=figrf,
                schema=data.schema,
                imputer=data.imputer,
                standardizer=data.standardizer,
            ),
        )
