import json
from pathlib import Path

import pytest

from conftest import CONFIG_DIR, DATA_DIR
from config import RunConfig, default_output_dir, resolve_n_jobs
from dataset import SplitSpec


def test_shipped_configs_resolve_relative_paths():
    config = RunConfig.load(CONFIG_DIR / "iris.json")
    assert Path(config.dataset_path).resolve() == (DATA_DIR / "iris_binary.csv").resolve()
    assert Path(config.output_dir).resolve() == (CONFIG_DIR.parent / "runs" / "iris").resolve()
    assert config.split == SplitSpec(0.2, 0.2, True, 42)
    assert config.baseline.n_estimators == 100 and config.baseline.max_depth is None
    assert config.importance.n_repeats == 2 and config.importance.softmax_alpha == 1.5
    assert config.annealing.max_iterations == 30 and config.annealing.cooling_rate == 0.95


def test_minimal_config_gets_defaults(tmp_path, monkeypatch):
    monkeypatch.setenv("FIGRF_OUT", str(tmp_path / "elsewhere"))
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"dataset": {"path": "data.csv"}}))
    config = RunConfig.load(path)
    assert config.dataset_path == str(tmp_path / "data.csv")
    assert config.label_column == "target"
    assert config.split.validation_fraction == 0.2
    assert config.output_dir == str(tmp_path / "elsewhere")
    assert config.threads == 1 and config.top_k == 10


def test_save_and_load_round_trip(tmp_path):
    config = RunConfig.load(CONFIG_DIR / "wine.json")
    config.save(tmp_path / "copy.json")
    assert RunConfig.load(tmp_path / "copy.json").to_dict() == config.to_dict()


def test_with_seed_reseeds_every_stream():
    config = RunConfig.load(CONFIG_DIR / "iris.json").with_seed(7)
    assert config.split.seed == 7
    assert config.baseline.seed == 7
    assert config.importance.seed == 7
    assert config.annealing.seed == 7


def test_missing_file_names_the_path(tmp_path):
    with pytest.raises(ValueError, match="config file not found"):
        RunConfig.load(tmp_path / "absent.json")


def test_invalid_json(tmp_path):
    path = tmp_path / "run.json"
    path.write_text("{")
    with pytest.raises(ValueError, match="invalid JSON"):
        RunConfig.load(path)


def test_missing_dataset_section(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"split": {}}))
    with pytest.raises(ValueError, match="missing field 'dataset'"):
        RunConfig.load(path)


@pytest.mark.parametrize(
    "section, values",
    [
        ("split", {"validation_fraction": 0.0}),
        ("annealing", {"cooling_rate": 1.5}),
        ("importance", {"softmax_alpha": -1}),
        ("output", {"threads": -2}),
        ("output", {"top_k": 0}),
    ],
)
def test_invalid_values_name_the_file(tmp_path, section, values):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"dataset": {"path": "x.csv"}, section: values}))
    with pytest.raises(ValueError, match="run.json"):
        RunConfig.load(path)


def test_resolve_n_jobs():
    assert resolve_n_jobs(1) == 1
    assert resolve_n_jobs(4) == 4
    assert resolve_n_jobs(0) == -1
    with pytest.raises(ValueError):
        resolve_n_jobs(-1)


def test_default_output_dir_uses_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("FIGRF_OUT", str(tmp_path))
    assert default_output_dir() == tmp_path
    monkeypatch.delenv("FIGRF_OUT")
    assert default_output_dir() == Path.cwd() / "runs"
