import numpy as np
import pytest

from conftest import make_record
from foodmil.dataset.meta_classes import MetaClassMap
from foodmil.exceptions import InvalidInputError, MissingHeatmapError, MissingPredictionError
from foodmil.inference.heatmap import Heatmap
from foodmil.inference.predictor import Prediction
from foodmil.metrics.evaluation import evaluate_testset, ground_truth_mask

TARGET = MetaClassMap.from_ids("Target", [1])


def _heatmap(values):
    return Heatmap(values, np.ones(values.shape, dtype=np.int64))


def _top_half(size=32):
    values = np.zeros((size, size))
    values[: size // 2] = 1.0
    return values


@pytest.fixture
def testset():
    records = [
        make_record("a-pos", True, split="test", seed=1),
        make_record("b-pos", True, split="test", seed=2),
        make_record("c-neg", False, split="test", seed=3),
        make_record("d-neg", False, split="test", seed=4),
    ]
    predictions = {
        "a-pos": Prediction.from_probability("a-pos", 0.9),
        "b-pos": Prediction.from_probability("b-pos", 0.2),
        "c-neg": Prediction.from_probability("c-neg", 0.7),
        "d-neg": Prediction.from_probability("d-neg", 0.1),
    }
    # Top-quadrant ground truth; a top-half heatmap doubles the segmented area.
    heatmaps = {"a-pos": _heatmap(_top_half()), "b-pos": _heatmap(_top_half())}
    return records, predictions, heatmaps


def test_classification_and_pixel_scores(testset):
    records, predictions, heatmaps = testset
    report = evaluate_testset(predictions, heatmaps, records, a=0.3, meta_class=TARGET)
    assert report.confusion.rows() == [[1, 1], [1, 1]]
    assert report.accuracy == 0.5
    assert report.n_images_pixel_eval == 2
    assert report.mean_iou == pytest.approx(0.5)
    assert report.per_image["b-pos"]["iou"] == pytest.approx(0.5)
    # Half the top-half pixels are positive and they come first within each row
    assert 0.5 < report.mean_ap < 1.0


def test_record_order_does_not_matter(testset):
    records, predictions, heatmaps = testset
    forward = evaluate_testset(predictions, heatmaps, records, a=0.3, meta_class=TARGET)
    backward = evaluate_testset(predictions, heatmaps, list(reversed(records)), a=0.3, meta_class=TARGET)
    assert forward.to_dict() == backward.to_dict()


def test_missing_heatmap_for_positive(testset):
    records, predictions, heatmaps = testset
    del heatmaps["b-pos"]
    with pytest.raises(MissingHeatmapError) as info:
        evaluate_testset(predictions, heatmaps, records, a=0.3, meta_class=TARGET)
    assert info.value.image_ids == ["b-pos"]


def test_missing_prediction(testset):
    records, predictions, heatmaps = testset
    del predictions["c-neg"]
    with pytest.raises(MissingPredictionError) as info:
        evaluate_testset(predictions, heatmaps, records, a=0.3, meta_class=TARGET)
    assert info.value.image_ids == ["c-neg"]
    assert "missing prediction" in str(info.value)


def test_skip_pixel(testset):
    records, predictions, _ = testset
    report = evaluate_testset(predictions, {}, records, a=0.3, skip_pixel=True)
    assert report.mean_iou is None
    assert report.mean_ap is None
    assert report.n_images_pixel_eval == 0


def test_pixel_eval_needs_meta_class(testset):
    records, predictions, heatmaps = testset
    with pytest.raises(InvalidInputError):
        evaluate_testset(predictions, heatmaps, records, a=0.3)
    with pytest.raises(InvalidInputError):
        evaluate_testset(predictions, heatmaps, [], a=0.3, meta_class=TARGET)


def test_ground_truth_mask_uses_member_ids():
    record = make_record("x", True, size=8)
    mask = ground_truth_mask(record, TARGET)
    assert mask.sum() == 16
    assert mask[:4, :4].all()


def test_iou_sweep_in_report(testset):
    records, predictions, heatmaps = testset
    report = evaluate_testset(predictions, heatmaps, records, a=0.3, meta_class=TARGET,
                              sweep_thresholds=[0.0, 0.3, 0.9])
    # a=0 keeps the whole image, four times the ground-truth quadrant
    assert report.iou_sweep == pytest.approx({0.0: 0.25, 0.3: 0.5, 0.9: 0.5})
    assert report.iou_sweep[0.3] == pytest.approx(report.mean_iou)
    assert report.to_dict()["iou_sweep"]["0.9"] == pytest.approx(0.5)


def test_default_sweep_and_opt_out(testset):
    records, predictions, heatmaps = testset
    report = evaluate_testset(predictions, heatmaps, records, a=0.3, meta_class=TARGET)
    assert sorted(report.iou_sweep) == [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
    bare = evaluate_testset(predictions, heatmaps, records, a=0.3, meta_class=TARGET, sweep_thresholds=())
    assert bare.iou_sweep == {}
