import numpy as np
import pytest

from refvlm.eval.confusion import ConfusionMatrix, EmptyMatrixError, MetricsReport, accuracy, balanced_accuracy


def cm(counts, names=None):
    counts = np.asarray(counts)
    names = names or tuple(f"k{i}" for i in range(counts.shape[0]))
    return ConfusionMatrix(tuple(names), counts)


def loop_accuracy(counts):
    correct = 0
    total = 0
    for i in range(len(counts)):
        for j in range(len(counts)):
            total += counts[i][j]
            if i == j:
                correct += counts[i][j]
    return correct / total


def loop_balanced_accuracy(counts):
    recalls = []
    for i in range(len(counts)):
        row = sum(counts[i])
        if row == 0:
            continue  # classes without GT samples are excluded
        recalls.append(counts[i][i] / row)
    return sum(recalls) / len(recalls)


def test_perfect_diagonal():
    assert accuracy(cm([[5, 0], [0, 5]])) == 1.0
    assert balanced_accuracy(cm([[5, 0], [0, 5]])) == 1.0


def test_hand_counts():
    m = cm([[3, 1], [2, 2]])
    assert accuracy(m) == pytest.approx(5 / 8)
    assert balanced_accuracy(m) == pytest.approx((0.75 + 0.5) / 2)


def test_random_matrices_match_loop_oracles(rng):
    for _ in range(50):
        counts = rng.integers(0, 10, size=(4, 4))
        if counts.sum() == 0:
            continue
        m = cm(counts)
        assert accuracy(m) == loop_accuracy(counts.tolist())
        if counts.sum(axis=1).max() > 0:
            assert balanced_accuracy(m) == pytest.approx(loop_balanced_accuracy(counts.tolist()))


def test_empty_gt_rows_are_excluded(rng):
    counts = rng.integers(1, 10, size=(4, 4))
    counts[2, :] = 0
    m = cm(counts)
    assert balanced_accuracy(m) == pytest.approx(loop_balanced_accuracy(counts.tolist()))


def test_empty_matrix_errors():
    with pytest.raises(EmptyMatrixError):
        accuracy(cm(np.zeros((3, 3), dtype=int)))
    with pytest.raises(EmptyMatrixError):
        balanced_accuracy(cm(np.zeros((3, 3), dtype=int)))


def test_balanced_equals_plain_on_equal_row_sums(rng):
    # property: with equal GT row sums, BA == accuracy
    for _ in range(25):
        k = int(rng.integers(2, 6))
        row_sum = int(rng.integers(4, 12))
        counts = np.zeros((k, k), dtype=int)
        for i in range(k):
            split = rng.multinomial(row_sum, np.ones(k) / k)
            counts[i] = split
        m = cm(counts)
        assert balanced_accuracy(m) == pytest.approx(accuracy(m), abs=1e-12)


def test_negative_counts_rejected():
    with pytest.raises(ValueError):
        cm([[1, -1], [0, 2]])


def test_from_pairs_and_report():
    m = ConfusionMatrix.from_pairs(("a", "b"), gt=[0, 0, 1], pred=[0, 1, 1])
    assert m.counts.tolist() == [[1, 1], [0, 1]]
    report = MetricsReport(task="severity", accuracy=accuracy(m), balanced_accuracy=balanced_accuracy(m),
                           confusion=m, n_evaluated=3, n_extraction_failures=2)
    assert report.n_attempted == 5


def test_report_rejects_out_of_range_metrics():
    m = cm([[1, 0], [0, 1]])
    with pytest.raises(ValueError):
        MetricsReport(task="x", accuracy=1.5, balanced_accuracy=0.5, confusion=m, n_evaluated=2)
