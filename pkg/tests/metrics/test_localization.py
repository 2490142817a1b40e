import numpy as np
import pytest
from sklearn.metrics import average_precision_score

from foodmil.exceptions import InvalidInputError, MissingHeatmapError
from foodmil.inference.heatmap import Heatmap
from foodmil.metrics.localization import iou, iou_sweep, pixel_ap


def test_iou_of_offset_rectangles():
    pred = np.zeros((4, 8), dtype=bool)
    gt = np.zeros((4, 8), dtype=bool)
    pred[:2, :4] = True
    gt[:2, 2:6] = True
    assert iou(pred, gt) == pytest.approx(1 / 3)
    assert iou(gt, pred) == pytest.approx(1 / 3)


def test_iou_edge_cases():
    empty = np.zeros((3, 3), dtype=bool)
    full = np.ones((3, 3), dtype=bool)
    assert iou(empty, empty) == 1.0
    assert iou(full, empty) == 0.0
    assert iou(full, full) == 1.0
    with pytest.raises(InvalidInputError):
        iou(np.zeros((2, 2)), np.zeros((3, 3)))


def test_iou_matches_set_definition():
    rng = np.random.default_rng(11)
    for _ in range(200):
        pred = rng.random((6, 6)) < 0.4
        gt = rng.random((6, 6)) < 0.4
        p = {tuple(x) for x in np.argwhere(pred)}
        g = {tuple(x) for x in np.argwhere(gt)}
        expected = 1.0 if not p | g else len(p & g) / len(p | g)
        assert iou(pred, gt) == pytest.approx(expected)


def test_ap_small_example():
    values = np.array([[0.9, 0.8], [0.7, 0.1]])
    gt = np.array([[True, False], [True, False]])
    assert pixel_ap(values, gt) == pytest.approx((1 / 1 + 2 / 3) / 2)


def test_ap_perfect_ranking():
    values = np.array([[0.9, 0.2], [0.8, 0.1]])
    gt = np.array([[True, False], [True, False]])
    assert pixel_ap(values, gt) == pytest.approx(1.0)


def test_ap_ties_keep_row_major_order():
    values = np.ones((2, 2))
    gt = np.array([[False, True], [False, True]])
    assert pixel_ap(values, gt) == pytest.approx((1 / 2 + 2 / 4) / 2)


def _ap_by_thresholds(values, gt):
    """Precision at each positive pixel's rank, computed by walking the ranking."""
    flat_values = values.ravel()
    flat_gt = gt.ravel()
    order = sorted(range(flat_values.size), key=lambda i: (-flat_values[i], i))
    found, total = 0, 0.0
    for rank, index in enumerate(order, start=1):
        if flat_gt[index]:
            found += 1
            total += found / rank
    return total / flat_gt.sum()


def test_ap_matches_ranking_walk():
    rng = np.random.default_rng(23)
    checked = 0
    for _ in range(1000):
        values = np.round(rng.random((8, 8)), 2)
        gt = rng.random((8, 8)) < 0.3
        if not gt.any():
            continue
        assert pixel_ap(values, gt) == pytest.approx(_ap_by_thresholds(values, gt), abs=1e-12)
        checked += 1
    assert checked > 900


def test_ap_matches_sklearn_without_ties():
    rng = np.random.default_rng(4)
    for _ in range(20):
        values = rng.permutation(64).reshape(8, 8) / 64.0
        gt = rng.random((8, 8)) < 0.25
        if not gt.any():
            continue
        expected = average_precision_score(gt.ravel(), values.ravel())
        assert pixel_ap(values, gt) == pytest.approx(expected, abs=1e-9)


def test_ap_needs_positive_pixels():
    with pytest.raises(InvalidInputError):
        pixel_ap(np.ones((2, 2)), np.zeros((2, 2), dtype=bool))


def _heatmap(values):
    values = np.asarray(values, dtype=np.float64)
    return Heatmap(values, np.ones(values.shape, dtype=np.int64))


def test_iou_sweep():
    heatmaps = {"a": _heatmap([[1.0, 0.5], [0.2, 0.0]])}
    gt = {"a": np.array([[True, True], [False, False]])}
    sweep = iou_sweep(heatmaps, gt, [0.0, 0.4, 0.6])
    assert sweep == pytest.approx({0.0: 0.5, 0.4: 1.0, 0.6: 0.5})
    with pytest.raises(MissingHeatmapError):
        iou_sweep({}, gt, [0.3])
