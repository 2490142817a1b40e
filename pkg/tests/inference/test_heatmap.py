import numpy as np
import pytest

from foodmil.exceptions import InvalidInputError
from foodmil.inference.heatmap import Heatmap, accumulate_heatmap, segment
from foodmil.patchbag.grid import GridSpec, grid_origins


def test_uniform_weights_give_flat_map():
    spec = GridSpec(16, 8, 0.5)
    origins = grid_origins(spec)
    heatmap = accumulate_heatmap(np.full(len(origins), 1.0 / len(origins)), origins, 16, 8)
    assert np.allclose(heatmap.values, 1.0)
    assert heatmap.coverage.min() >= 1


def test_single_patch():
    heatmap = accumulate_heatmap(np.array([1.0]), np.array([[2, 3]]), D=10, d=4)
    expected = np.zeros((10, 10))
    expected[2:6, 3:7] = 1.0
    assert np.array_equal(heatmap.values, expected)
    assert np.array_equal(heatmap.coverage, expected.astype(np.int64))


def test_overlapping_patches_average():
    heatmap = accumulate_heatmap(np.array([0.25, 0.75]), np.array([[0, 0], [0, 4]]), D=12, d=8)
    row = heatmap.values[0]
    assert np.allclose(row[:4], 1 / 3)
    assert np.allclose(row[4:8], 2 / 3)
    assert np.allclose(row[8:], 1.0)
    assert np.all(heatmap.values[8:] == 0.0)
    assert heatmap.values.max() == pytest.approx(1.0)


def test_coverage_matches_brute_force():
    spec = GridSpec(64, 16, 0.875)
    origins = grid_origins(spec)
    rng = np.random.default_rng(0)
    weights = rng.random(len(origins))
    heatmap = accumulate_heatmap(weights, origins, spec.D, spec.d)

    total = np.zeros((64, 64))
    count = np.zeros((64, 64))
    for r in range(64):
        for c in range(64):
            inside = ((origins[:, 0] <= r) & (r < origins[:, 0] + 16)
                      & (origins[:, 1] <= c) & (c < origins[:, 1] + 16))
            count[r, c] = inside.sum()
            total[r, c] = weights[inside].sum()
    mean = total / count
    assert np.array_equal(heatmap.coverage, count.astype(np.int64))
    assert np.allclose(heatmap.values, mean / mean.max())


def test_segmentation_thresholds():
    heatmap = accumulate_heatmap(np.array([0.25, 0.75]), np.array([[0, 0], [0, 4]]), D=12, d=8)
    assert np.array_equal(segment(heatmap, 0.0), heatmap.coverage > 0)
    assert segment(heatmap, 0.5).sum() == 8 * 8
    assert np.array_equal(heatmap.segmentation, segment(heatmap, 0.3))

    previous = None
    for a in np.linspace(0.0, 1.0, 11):
        mask = segment(heatmap, a)
        if previous is not None:
            assert not np.any(mask & ~previous)
        previous = mask
    assert segment(heatmap, 1.0).sum() == 8 * 4


def test_with_threshold_keeps_values():
    heatmap = accumulate_heatmap(np.array([0.25, 0.75]), np.array([[0, 0], [0, 4]]), D=12, d=8)
    strict = heatmap.with_threshold(0.9)
    assert strict.values is heatmap.values
    assert strict.segmentation.sum() < heatmap.segmentation.sum()


@pytest.mark.parametrize("weights, origins", [
    (np.array([]), np.zeros((0, 2))),
    (np.array([0.5, 0.5]), np.array([[0, 0]])),
    (np.array([-0.1]), np.array([[0, 0]])),
    (np.array([np.nan]), np.array([[0, 0]])),
    (np.array([1.0]), np.array([[5, 0]])),
])
def test_invalid_inputs(weights, origins):
    with pytest.raises(InvalidInputError):
        accumulate_heatmap(weights, origins, D=8, d=4)


def test_threshold_range_and_shapes():
    heatmap = accumulate_heatmap(np.array([1.0]), np.array([[0, 0]]), D=4, d=4)
    with pytest.raises(InvalidInputError):
        segment(heatmap, 1.5)
    with pytest.raises(InvalidInputError):
        Heatmap(np.zeros((4, 4)), np.zeros((3, 3), dtype=np.int64))


def test_dense_grid_heatmap_ignores_bag_order():
    spec = GridSpec(512, 64, 0.875)
    origins = grid_origins(spec)
    assert len(origins) == 3249
    rng = np.random.default_rng(11)
    weights = rng.random(len(origins))
    weights /= weights.sum()
    order = rng.permutation(len(origins))
    reference = accumulate_heatmap(weights, origins, spec.D, spec.d)
    shuffled = accumulate_heatmap(weights[order], origins[order], spec.D, spec.d)
    assert np.max(np.abs(reference.values - shuffled.values)) < 1e-6
    assert np.array_equal(reference.coverage, shuffled.coverage)
