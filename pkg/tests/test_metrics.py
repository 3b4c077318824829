import numpy as np
import pytest

from metrics import ConfusionMatrix, MetricReport, confusion_matrix, evaluate


def test_perfect_predictions():
    truth = np.array([0, 1, 1, 0, 1])
    report = evaluate(truth, truth)
    assert (report.accuracy, report.precision, report.recall, report.f1) == (1.0, 1.0, 1.0, 1.0)
    assert report.fitness == 1.0


def test_all_negative_predictions_use_zero_division_convention():
    truth = np.array([0, 1] * 5)
    report = evaluate(np.zeros(10, dtype=int), truth)
    assert report.accuracy == 0.5
    assert (report.precision, report.recall, report.f1) == (0.0, 0.0, 0.0)
    assert report.fitness == pytest.approx(0.125)


def test_hand_computed_counts():
    report = MetricReport.from_matrix(ConfusionMatrix(tp=27, fp=12, tn=200, fn=22))
    assert report.precision == pytest.approx(27 / 39)
    assert report.recall == pytest.approx(27 / 49)
    assert report.f1 == pytest.approx(0.6136, abs=1e-4)
    assert report.accuracy == (27 + 200) / 261


def test_confusion_counts():
    matrix = confusion_matrix([1, 1, 0, 0, 1], [1, 0, 0, 1, 1])
    assert matrix == ConfusionMatrix(tp=2, fp=1, tn=1, fn=1)
    assert matrix.total == 5
    assert matrix.as_table() == [[1, 1], [1, 2]]


def test_report_shape():
    report = evaluate([1, 0, 1], [1, 0, 0])
    data = report.to_dict()
    assert list(data) == ["accuracy", "precision", "recall", "f1", "fitness", "confusion"]
    assert data["confusion"] == {"tp": 1, "fp": 1, "tn": 1, "fn": 0}


def test_permuting_pairs_leaves_report_unchanged():
    rng = np.random.default_rng(0)
    predictions = rng.integers(0, 2, 50)
    truth = rng.integers(0, 2, 50)
    order = rng.permutation(50)
    assert evaluate(predictions, truth) == evaluate(predictions[order], truth[order])


def test_fitness_is_one_only_for_diagonal_matrices():
    rng = np.random.default_rng(1)
    for _ in range(500):
        truth = rng.integers(0, 2, 12)
        truth[:2] = [0, 1]
        predictions = np.where(rng.random(12) < 0.2, 1 - truth, truth)
        report = evaluate(predictions, truth)
        diagonal = report.matrix.fp == 0 and report.matrix.fn == 0
        assert 0.0 <= report.fitness <= 1.0
        assert (report.fitness == 1.0) == diagonal


@pytest.mark.parametrize(
    "predictions, truth",
    [([], []), ([0, 1], [0]), ([0, 2], [0, 1]), ([0, 1], [0, -1])],
)
def test_invalid_inputs(predictions, truth):
    with pytest.raises(ValueError):
        evaluate(predictions, truth)
