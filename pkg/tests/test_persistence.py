import json

import numpy as np
import pandas as pd
import pytest

from conftest import random_dataset
from dataset import (
    DatasetSchema,
    apply_imputer,
    apply_standardizer,
    fit_imputer,
    fit_standardizer,
)
from forest import fit_forest
from guided_forest import fit_figrf
from models import FigrfConfig, FigrfModel, ForestConfig, ForestModel
from persistence import (
    FORMAT_VERSION,
    ModelBundle,
    ModelFormatError,
    RunDirectory,
    load_model,
    model_from_dict,
    save_model,
)


def _bundle(model, data) -> ModelBundle:
    imputer = fit_imputer(data)
    return ModelBundle(
        model=model,
        schema=DatasetSchema("target", data.columns or ()),
        imputer=imputer,
        standardizer=fit_standardizer(apply_imputer(imputer, data)),
    )


@pytest.fixture
def figrf_bundle():
    data = random_dataset(np.random.default_rng(0), n=100, d=6)
    imputer = fit_imputer(data)
    prepared = apply_standardizer(fit_standardizer(data), apply_imputer(imputer, data))
    probabilities = np.array([0.3, 0.25, 0.2, 0.1, 0.1, 0.05])
    model = fit_figrf(prepared, FigrfConfig(n_estimators=25, probabilities=probabilities, max_depth=6, seed=4))
    return _bundle(model, data)


def test_saved_model_predicts_identically(tmp_path, figrf_bundle):
    path = tmp_path / "model.json"
    save_model(path, figrf_bundle)
    loaded = load_model(path)
    probe = np.random.default_rng(1).normal(size=(1000, 6))
    np.testing.assert_array_equal(loaded.predict(probe), figrf_bundle.predict(probe))
    assert isinstance(loaded.model, FigrfModel)
    np.testing.assert_array_equal(loaded.model.usage_counts, figrf_bundle.model.usage_counts)


def test_save_is_byte_stable(tmp_path, figrf_bundle):
    save_model(tmp_path / "a.json", figrf_bundle)
    save_model(tmp_path / "b.json", load_model(tmp_path / "a.json"))
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_model_json_layout(figrf_bundle):
    data = figrf_bundle.to_dict()
    assert data["format_version"] == FORMAT_VERSION
    model = data["model"]
    assert model["sampling"] == "weighted"
    assert model["n_estimators"] == 25 and model["max_depth"] == 6
    assert len(model["probabilities"]) == 6 and len(model["usage_counts"]) == 6
    tree = model["trees"][0]
    assert set(tree) >= {"features", "nodes"}
    root = tree["nodes"][0]
    assert {"feature", "threshold", "left", "right"} <= set(root)


def test_uniform_forest_round_trips_through_sampling_tag():
    data = random_dataset(np.random.default_rng(2))
    model = fit_forest(data, ForestConfig(n_estimators=5, seed=1))
    loaded = model_from_dict(json.loads(json.dumps(model.to_dict())))
    assert isinstance(loaded, ForestModel)
    np.testing.assert_array_equal(loaded.predict(data.features), model.predict(data.features))


def test_missing_model_file(tmp_path):
    with pytest.raises(ModelFormatError, match="no such model file"):
        load_model(tmp_path / "absent.json")


def test_invalid_json(tmp_path):
    path = tmp_path / "model.json"
    path.write_text("{not json")
    with pytest.raises(ModelFormatError, match="invalid JSON"):
        load_model(path)


def test_wrong_format_version(tmp_path, figrf_bundle):
    data = figrf_bundle.to_dict()
    data["format_version"] = 99
    path = tmp_path / "model.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ModelFormatError, match="format_version"):
        load_model(path)


def test_unknown_sampling_tag(tmp_path, figrf_bundle):
    data = figrf_bundle.to_dict()
    data["model"]["sampling"] = "stratified"
    path = tmp_path / "model.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ModelFormatError, match="sampling"):
        load_model(path)


def test_truncated_model(tmp_path, figrf_bundle):
    data = figrf_bundle.to_dict()
    del data["model"]["trees"]
    path = tmp_path / "model.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ModelFormatError, match="malformed"):
        load_model(path)


def test_run_directory_writers(tmp_path):
    out = RunDirectory.create(tmp_path / "nested" / "run")
    out.write_json("a.json", {"x": 1})
    out.write_jsonl("b.jsonl", [{"i": 0}, {"i": 1}])
    out.write_csv("c.csv", pd.DataFrame({"k": [1, 2]}))
    out.write_text("d.txt", "hello")
    assert (out.out_dir / "a.json").read_text() == '{\n  "x": 1\n}\n'
    assert (out.out_dir / "b.jsonl").read_text() == '{"i": 0}\n{"i": 1}\n'
    assert (out.out_dir / "c.csv").read_text() == "k\n1\n2\n"
    assert (out.out_dir / "d.txt").read_text() == "hello\n"
