import json

import numpy as np
import pytest

from conftest import random_dataset
from dataset import SplitSpec, split
from forest import bootstrap_indices, fit_forest, predict_forest, tree_rng
from models import ForestConfig, ForestModel
from tree import TreeConfig, fit_tree


def _constant_tree(label: int, n_features: int = 2):
    X = np.zeros((2, n_features))
    return fit_tree(X, [label, label], [0], TreeConfig())


def _voting_forest(labels):
    trees = [_constant_tree(label) for label in labels]
    return ForestModel(trees=trees, config=ForestConfig(n_estimators=len(trees)), n_features=2)


@pytest.mark.parametrize(
    "votes, expected",
    [((1, 1, 1), 1), ((0, 1, 1), 1), ((1, 0, 0), 0), ((0, 1), 0), ((1, 1, 0, 0), 0)],
)
def test_majority_vote(votes, expected):
    assert predict_forest(_voting_forest(votes), np.zeros(2)) == expected


def test_unanimous_forest_matches_its_tree():
    rng = np.random.default_rng(0)
    data = random_dataset(rng)
    tree = fit_tree(data.features, data.labels, range(data.n_features), TreeConfig(max_depth=3))
    model = ForestModel(trees=[tree] * 5, config=ForestConfig(n_estimators=5), n_features=data.n_features)
    probe = rng.normal(size=(200, data.n_features))
    np.testing.assert_array_equal(model.predict(probe), tree.predict(probe))


def test_single_tree_over_all_features():
    data = random_dataset(np.random.default_rng(1), d=4)
    model = fit_forest(data, ForestConfig(n_estimators=1, features_per_tree=4))
    assert len(model.trees) == 1
    assert model.trees[0].allowed_features == (0, 1, 2, 3)


def test_default_features_per_tree_is_floor_sqrt():
    data = random_dataset(np.random.default_rng(2), d=13)
    model = fit_forest(data, ForestConfig(n_estimators=20))
    assert model.config.features_per_tree == 3
    assert all(len(features) == 3 for features in model.feature_sets)


def test_trees_split_only_on_their_subset():
    data = random_dataset(np.random.default_rng(3), n=120, d=9)
    model = fit_forest(data, ForestConfig(n_estimators=30))
    for tree in model.trees:
        assert tree.feature_indices_used <= set(tree.allowed_features)


def test_features_per_tree_above_d_rejected():
    data = random_dataset(np.random.default_rng(4), d=3)
    with pytest.raises(ValueError):
        fit_forest(data, ForestConfig(features_per_tree=4))


def test_forest_config_validation():
    with pytest.raises(ValueError):
        ForestConfig(n_estimators=0)
    with pytest.raises(ValueError):
        ForestConfig(max_depth=0)


def test_iris_test_accuracy(iris):
    train, _, test = split(iris, SplitSpec(test_fraction=0.2, seed=0))
    model = fit_forest(train, ForestConfig(n_estimators=100, seed=0))
    assert (model.predict(test.features) == test.labels).all()


def test_fixed_seed_serialises_identically():
    data = random_dataset(np.random.default_rng(5))
    first = fit_forest(data, ForestConfig(n_estimators=15, seed=11))
    second = fit_forest(data, ForestConfig(n_estimators=15, seed=11))
    assert json.dumps(first.to_dict()) == json.dumps(second.to_dict())


def test_threads_do_not_change_the_model():
    data = random_dataset(np.random.default_rng(6), n=100, d=6)
    serial = fit_forest(data, ForestConfig(n_estimators=25, seed=3, n_jobs=1))
    threaded = fit_forest(data, ForestConfig(n_estimators=25, seed=3, n_jobs=4))
    assert json.dumps(serial.to_dict()) == json.dumps(threaded.to_dict())


def test_bootstrap_has_n_rows_and_expected_unique_fraction():
    n = 10_000
    rows = bootstrap_indices(n, tree_rng(0, 0))
    assert rows.size == n
    assert np.unique(rows).size / n == pytest.approx(1 - np.exp(-1), abs=0.03)


def test_forest_round_trip():
    rng = np.random.default_rng(7)
    data = random_dataset(rng)
    model = fit_forest(data, ForestConfig(n_estimators=10, max_depth=4, seed=2))
    loaded = ForestModel.from_dict(json.loads(json.dumps(model.to_dict())))
    probe = rng.normal(size=(300, data.n_features))
    np.testing.assert_array_equal(loaded.predict(probe), model.predict(probe))


def test_predict_rejects_wrong_width():
    model = _voting_forest((0, 1, 1))
    with pytest.raises(ValueError):
        model.predict(np.zeros((1, 3)))
