"""Subcommand implementations: each turns a config into report files."""

from pathlib import Path
from typing import Sequence

import pandas as pd
from loguru import logger

from config import RunConfig
from dataset import load_feature_matrix, load_labels
from experiment import Experiment, RunSummary
from importance import ImportanceProfile
from metrics import MetricReport, evaluate
from persistence import RunDirectory, load_model
from sa_tuner import SaResult
from synthetic import make_classification, write_csv

METRIC_COLUMNS = ("accuracy", "precision", "recall", "f1")


def _write_importance(out: RunDirectory, profile: ImportanceProfile, top_k: int) -> None:
    out.write_json("importance.json", profile.to_dict())
    out.write_csv("importance.csv", profile.to_frame())
    out.write_text("top_features.txt", profile.top(top_k))


def _write_tuning(out: RunDirectory, result: SaResult) -> None:
    out.write_jsonl("tune_trace.jsonl", [*result.trace.to_records(), result.summary()])
    out.write_json("tune_best.json", result.summary())


def _metric_row(model: str, report: MetricReport) -> dict:
    return {"model": model, **{name: getattr(report, name) for name in METRIC_COLUMNS}}


def cmd_importance(config: RunConfig) -> ImportanceProfile:
    """Baseline forest + the three importance estimators on training-side data."""
    out = RunDirectory.create(Path(config.output_dir))
    profile = Experiment(config).importance_profile()
    _write_importance(out, profile, config.top_k)
    return profile


def cmd_tune(config: RunConfig) -> SaResult:
    """Anneal (n_estimators, max_depth) against the validation split."""
    out = RunDirectory.create(Path(config.output_dir))
    result = Experiment(config).tune()
    _write_tuning(out, result)
    return result


def cmd_run(config: RunConfig) -> RunSummary:
    """Full pipeline, ending with one evaluation of both forests on the test split."""
    out = RunDirectory.create(Path(config.output_dir))
    summary = Experiment(config).run()

    _write_importance(out, summary.profile, config.top_k)
    _write_tuning(out, summary.tuning)
    out.write_json("baseline_report.json", summary.baseline.to_dict())
    out.write_json("figrf_report.json", summary.figrf.to_dict())
    out.write_csv("usage.csv", pd.DataFrame([row.to_dict() for row in summary.usage]))
    out.save_model("model.json", summary.bundle)
    out.write_json(
        "comparison.json",
        {
            "baseline": summary.baseline.to_dict(),
            "figrf": summary.figrf.to_dict(),
            "tuned": summary.tuning.summary(),
            "usage": [row.to_dict() for row in summary.usage],
        },
    )
    out.write_csv(
        "comparison.csv",
        pd.DataFrame([_metric_row("baseline", summary.baseline), _metric_row("figrf", summary.figrf)]),
    )
    return summary


def cmd_predict(model_path: Path, csv_path: Path, out_dir: Path) -> Path:
    """One prediction per CSV row, written to ``predictions.csv``."""
    bundle = load_model(model_path)
    features = load_feature_matrix(csv_path, bundle.schema)
    predictions = bundle.predict(features)
    logger.info(f"Predicted {predictions.size} rows")
    return RunDirectory.create(out_dir).write_csv(
        "predictions.csv", pd.DataFrame({"prediction": predictions})
    )


def cmd_evaluate(model_path: Path, csv_path: Path, out_dir: Path) -> MetricReport:
    """Score a saved model on a labelled CSV."""
    bundle = load_model(model_path)
    features = load_feature_matrix(csv_path, bundle.schema)
    report = evaluate(bundle.predict(features), load_labels(csv_path, bundle.schema))
    RunDirectory.create(out_dir).write_json("evaluation.json", report.to_dict())
    return report


def cmd_benchmark(config: RunConfig, seeds: Sequence[int]) -> pd.DataFrame:
    """Repeat the full pipeline per seed and tabulate both models' test metrics."""
    if not seeds:
        raise ValueError("benchmark needs at least one seed")
    rows = []
    for seed in seeds:
        logger.info(f"Benchmark seed {seed}")
        summary = Experiment(config.with_seed(seed)).run()
        best = summary.tuning.best
        rows.append(
            {
                "seed": seed,
                **_metric_row("baseline", summary.baseline),
                "n_estimators": config.baseline.n_estimators,
                "max_depth": config.baseline.max_depth,
            }
        )
        rows.append(
            {
                "seed": seed,
                **_metric_row("figrf", summary.figrf),
                "n_estimators": best.n_estimators,
                "max_depth": best.max_depth,
            }
        )
    table = pd.DataFrame(rows)
    # Integer column with gaps for unbounded depth
    table["max_depth"] = table["max_depth"].astype("Int64")
    RunDirectory.create(Path(config.output_dir)).write_csv("benchmark.csv", table)
    for model, group in table.groupby("model", sort=False):
        logger.info(f"{model}: mean accuracy {group['accuracy'].mean():.4f} over {len(group)} seeds")
    return table


def cmd_synthesize(
    path: Path, n_samples: int, n_informative: int, n_noise: int, seed: int
) -> Path:
    data = make_classification(n_samples, n_informative, n_noise, seed=seed)
    return write_csv(data, path)
