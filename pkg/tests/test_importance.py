import math

import numpy as np
import pytest

from conftest import random_dataset
from dataset import Dataset, SplitSpec, split
from forest import fit_forest
from guided_forest import fit_figrf
from importance import (
    ImportanceConfig,
    compose,
    compute_profile,
    discretize,
    gini_importance,
    min_max_normalize,
    mutual_information,
    mutual_information_from_table,
    permutation_importance,
    softmax,
)
from models import FigrfConfig, ForestConfig, ForestModel
from tree import TreeConfig, accumulate_gini_importance, fit_tree

PETAL = {"petal length (cm)", "petal width (cm)"}


def _brute_force_mi(table: np.ndarray) -> float:
    total = table.sum()
    rows, cols = table.shape
    mi = 0.0
    for i in range(rows):
        for j in range(cols):
            if table[i, j] == 0:
                continue
            joint = table[i, j] / total
            p_x = sum(table[i, k] for k in range(cols)) / total
            p_y = sum(table[k, j] for k in range(rows)) / total
            mi += joint * math.log(joint / (p_x * p_y))
    return mi


def test_mi_table_matches_double_loop_oracle():
    rng = np.random.default_rng(0)
    for case in range(1000):
        shape = (2, 2) if case % 2 else (4, 2)
        table = rng.integers(0, 20, size=shape)
        table[0, 0] += 1
        assert mutual_information_from_table(table) == pytest.approx(_brute_force_mi(table), abs=1e-12)


def test_mi_is_symmetric_under_relabelling():
    table = np.array([[5, 1], [2, 7], [0, 3]])
    base = mutual_information_from_table(table)
    assert mutual_information_from_table(table[::-1]) == pytest.approx(base, abs=1e-12)
    assert mutual_information_from_table(table[:, ::-1]) == pytest.approx(base, abs=1e-12)


def test_mi_of_label_copy_is_ln2():
    labels = np.array([0, 1] * 50)
    data = Dataset(labels[:, np.newaxis].astype(float), labels, ("copy",))
    assert mutual_information(data, ImportanceConfig())[0] == pytest.approx(math.log(2))


def test_mi_of_round_robin_feature_is_zero():
    labels = np.array([0, 1] * 20)
    values = np.repeat(np.arange(20), 2).astype(float)
    data = Dataset(values[:, np.newaxis], labels, ("rr",))
    assert mutual_information(data, ImportanceConfig(mi_bins=5))[0] == pytest.approx(0.0, abs=1e-9)


def test_discretize_keeps_few_values_and_bins_many():
    assert discretize(np.array([3.0, 1.0, 3.0, 2.0]), 10).tolist() == [2, 0, 2, 1]
    codes = discretize(np.arange(1000, dtype=float), 10)
    assert np.unique(codes).size == 10
    assert np.bincount(codes).tolist() == [100] * 10


def test_min_max_normalize():
    assert min_max_normalize(np.array([2.0, 4.0, 3.0])).tolist() == [0.0, 1.0, 0.5]
    assert min_max_normalize(np.array([7.0, 7.0])).tolist() == [0.0, 0.0]


def test_softmax_closed_form():
    p = softmax(np.array([1.0, 0.0]), 1.0)
    assert p.tolist() == pytest.approx([math.e / (math.e + 1), 1 / (math.e + 1)])


def test_softmax_survives_large_scores():
    p = softmax(np.array([1000.0, 999.0]), 50.0)
    assert np.isfinite(p).all()
    assert p.sum() == pytest.approx(1.0)


def test_softmax_stays_positive_for_very_large_alpha():
    p = softmax(np.array([1.0, 0.5, 0.0]), 2000.0)
    assert (p > 0).all()
    assert p[0] == pytest.approx(1.0)
    config = FigrfConfig(n_estimators=5, probabilities=p, features_per_tree=3)
    assert config.probabilities.size == 3


def test_softmax_invariants():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        d = int(rng.integers(1, 20))
        scores = rng.random(d)
        alpha = float(rng.uniform(0.1, 10.0))
        p = softmax(scores, alpha)
        assert p.sum() == pytest.approx(1.0, abs=1e-9)
        assert (p > 0).all()
        i, j = np.argmax(scores), np.argmin(scores)
        if scores[i] > scores[j]:
            assert p[i] > p[j]
        np.testing.assert_allclose(softmax(scores + rng.normal(), alpha), p, atol=1e-12)


def test_larger_alpha_concentrates_mass():
    scores = np.array([0.9, 0.5, 0.1])
    tops = [softmax(scores, alpha)[0] for alpha in (0.5, 1.0, 1.5, 5.0, 20.0)]
    assert tops == sorted(tops)


def test_compose_constant_inputs_give_uniform_probabilities():
    profile = compose(np.ones(4), np.full(4, 2.0), np.zeros(4), ImportanceConfig())
    assert profile.averaged.tolist() == [0.0] * 4
    assert profile.probabilities.tolist() == pytest.approx([0.25] * 4)
    assert profile.ranking.tolist() == [0, 1, 2, 3]


def test_compose_averages_normalised_scores():
    profile = compose(
        np.array([0.0, 0.2, 0.1]),
        np.array([3.0, 1.0, 2.0]),
        np.array([0.5, 0.5, 1.5]),
        ImportanceConfig(softmax_alpha=2.0),
        feature_names=("a", "b", "c"),
    )
    np.testing.assert_allclose(profile.averaged, [1 / 3, 1 / 3, 2 / 3])
    assert profile.ranking.tolist() == [2, 0, 1]
    assert profile.rank_of().tolist() == [2, 3, 1]
    assert profile.probabilities.sum() == pytest.approx(1.0, abs=1e-9)


def test_compose_length_mismatch():
    with pytest.raises(ValueError):
        compose(np.zeros(3), np.zeros(2), np.zeros(3), ImportanceConfig())


def test_importance_config_validation():
    with pytest.raises(ValueError):
        ImportanceConfig(n_repeats=0)
    with pytest.raises(ValueError):
        ImportanceConfig(mi_bins=1)
    with pytest.raises(ValueError):
        ImportanceConfig(softmax_alpha=0.0)


def test_permutation_of_unused_features_is_zero():
    data = random_dataset(np.random.default_rng(2), n=80, d=3)
    model = fit_figrf(data, FigrfConfig(n_estimators=10, probabilities=[1.0, 0.0, 0.0]))
    scores = permutation_importance(model, data, ImportanceConfig(n_repeats=3))
    assert scores[1] == 0.0 and scores[2] == 0.0


def test_permutation_of_constant_column_is_zero():
    rng = np.random.default_rng(3)
    data = random_dataset(rng, n=80, d=3)
    features = data.features.copy()
    features[:, 2] = 4.0
    data = data.with_features(features)
    model = fit_forest(data, ForestConfig(n_estimators=20, features_per_tree=3))
    assert permutation_importance(model, data, ImportanceConfig())[2] == 0.0


def test_permutation_of_perfect_feature_approaches_half():
    rng = np.random.default_rng(4)
    labels = np.array([0, 1] * 200)
    values = labels + rng.uniform(-0.4, 0.4, size=labels.size)
    data = Dataset(values[:, np.newaxis], labels, ("signal",))
    model = fit_forest(data, ForestConfig(n_estimators=5))
    scores = permutation_importance(model, data, ImportanceConfig(n_repeats=200))
    assert scores[0] == pytest.approx(0.5, abs=0.05)


def test_permutation_is_deterministic_and_thread_independent():
    data = random_dataset(np.random.default_rng(5), n=100, d=4)
    model = fit_forest(data, ForestConfig(n_estimators=20))
    serial = permutation_importance(model, data, ImportanceConfig(seed=8))
    threaded = permutation_importance(model, data, ImportanceConfig(seed=8, n_jobs=4))
    np.testing.assert_array_equal(serial, threaded)


def test_gini_of_single_tree_forest_equals_tree():
    data = random_dataset(np.random.default_rng(6))
    model = fit_forest(data, ForestConfig(n_estimators=1, features_per_tree=5))
    expected = accumulate_gini_importance(model.trees[0], np.zeros(5))
    np.testing.assert_array_equal(gini_importance(model), expected)


def test_gini_of_leaf_only_forest_is_zero():
    X = np.zeros((3, 2))
    tree = fit_tree(X, [1, 1, 1], [0], TreeConfig())
    model = ForestModel(trees=[tree, tree], config=ForestConfig(n_estimators=2), n_features=2)
    assert gini_importance(model).tolist() == [0.0, 0.0]


def test_iris_gini_ranks_petals_first(iris):
    model = fit_forest(iris, ForestConfig(n_estimators=100, seed=0))
    scores = dict(zip(iris.feature_names, gini_importance(model)))
    assert all(value >= 0 for value in scores.values())
    assert min(scores[name] for name in PETAL) > max(
        scores[name] for name in iris.feature_names if name not in PETAL
    )


def test_iris_profile_ranks_petals_above_sepals(iris):
    fit, validation, _ = split(iris, SplitSpec(0.2, 0.2, seed=42))
    model = fit_forest(fit, ForestConfig(n_estimators=100, seed=42))
    profile = compute_profile(model, fit, validation, ImportanceConfig(n_repeats=2, softmax_alpha=1.5))
    top_two = {profile.feature_names[i] for i in profile.ranking[:2]}
    assert top_two == PETAL
    assert profile.probabilities.sum() == pytest.approx(1.0, abs=1e-9)


def test_wine_profile_top_features(wine):
    fit, validation, _ = split(wine, SplitSpec(0.2, 0.2, seed=42))
    model = fit_forest(fit, ForestConfig(n_estimators=100, seed=42))
    profile = compute_profile(model, fit, validation, ImportanceConfig(n_repeats=2, softmax_alpha=1.5))
    top_five = {profile.feature_names[i] for i in profile.ranking[:5]}
    assert len(top_five & {"proline", "flavanoids", "alcohol"}) >= 2


def test_profile_reports():
    profile = compose(
        np.array([0.3, 0.0, 0.1]),
        np.array([1.0, 0.2, 0.4]),
        np.array([0.6, 0.1, 0.3]),
        ImportanceConfig(),
        feature_names=("a", "b", "c"),
    )
    frame = profile.to_frame()
    assert list(frame.columns) == [
        "feature", "permutation", "gini", "mutual_info", "permutation_norm",
        "gini_norm", "mutual_info_norm", "average", "rank", "probability",
    ]
    report = profile.to_dict()
    assert report["ranking"] == ["a", "c", "b"]
    assert [row["feature"] for row in report["features"]] == ["a", "b", "c"]
    table = profile.top(2).splitlines()
    assert len(table) == 3
    assert "a" in table[1] and "c" in table[2]
