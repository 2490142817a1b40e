import numpy as np
import pytest

from foodmil.config import DatasetConfig
from foodmil.dataset.meta_classes import load_meta_class
from foodmil.dataset.preprocessing import (
    binarize_label,
    filter_records,
    preprocess,
    resize_image,
    resize_mask,
    scaled_pixel_threshold,
)
from foodmil.dataset.records import ImageRecord, Label
from foodmil.exceptions import InvalidInputError


@pytest.fixture(scope="module")
def bakery():
    return load_meta_class("Bakery")


def test_resize_identity():
    rng = np.random.default_rng(1)
    image = rng.integers(0, 256, (512, 512, 3), dtype=np.uint8)
    out = resize_image(image, 512)
    assert out.dtype == np.uint8
    np.testing.assert_array_equal(out, image)


def test_resize_constant_color():
    image = np.empty((1024, 768, 3), dtype=np.uint8)
    image[...] = (12, 200, 77)
    out = resize_image(image, 512)
    assert out.shape == (512, 512, 3)
    assert np.all(out == np.array([12, 200, 77], dtype=np.uint8))


def test_resize_checkerboard_matches_hand_stencil():
    board = np.array([[0.0, 1.0], [1.0, 0.0]])
    image = np.repeat(board[:, :, None], 3, axis=2)
    out = resize_image(image, 4)
    # Half-pixel centres give source fractions 0, 1/4, 3/4, 1 along each axis.
    frac = np.array([0.0, 0.25, 0.75, 1.0])
    fr, fc = np.meshgrid(frac, frac, indexing="ij")
    expected = fr + fc - 2 * fr * fc
    for channel in range(3):
        np.testing.assert_allclose(out[:, :, channel], expected, atol=1e-12)


def test_resize_rejects_empty():
    with pytest.raises(InvalidInputError):
        resize_image(np.zeros((0, 4, 3), dtype=np.uint8), 8)


def test_resize_mask_uniform_and_identity():
    uniform = np.full((300, 200), 7, dtype=np.int64)
    assert np.all(resize_mask(uniform, 64) == 7)
    rng = np.random.default_rng(2)
    mask = rng.integers(0, 104, (512, 512))
    np.testing.assert_array_equal(resize_mask(mask, 512), mask)


def test_resize_mask_quadrants():
    mask = np.zeros((4, 4), dtype=np.int64)
    mask[:2, :2], mask[:2, 2:], mask[2:, :2], mask[2:, 2:] = 1, 2, 3, 4
    np.testing.assert_array_equal(resize_mask(mask, 2), [[1, 2], [3, 4]])


def test_resize_mask_never_invents_ids():
    rng = np.random.default_rng(3)
    mask = rng.choice([0, 5, 58], size=(97, 131))
    out = resize_mask(mask, 40)
    assert set(np.unique(out)) <= {0, 5, 58}


def test_binarize_background(bakery):
    assert binarize_label(np.zeros((512, 512), dtype=np.int64), bakery, 20000) == (Label.NEGATIVE, 0)


def test_binarize_threshold_boundary(bakery):
    mask = np.zeros(512 * 512, dtype=np.int64)
    mask[:20000] = 58
    assert binarize_label(mask.reshape(512, 512), bakery, 20000) == (Label.POSITIVE, 20000)
    mask[19999] = 0
    assert binarize_label(mask.reshape(512, 512), bakery, 20000) == (Label.NEGATIVE, 19999)


def test_binarize_ignores_other_classes(bakery):
    mask = np.full((10, 10), 46, dtype=np.int64)  # steak
    mask[0, :3] = 2  # egg tart
    assert binarize_label(mask, bakery, 1) == (Label.POSITIVE, 3)


def _record(image_id, count, threshold=20000):
    label = Label.POSITIVE if count >= threshold else Label.NEGATIVE
    return ImageRecord(image_id=image_id, label=label, positive_pixel_count=count)


def test_filter_records():
    records = [_record("zero", 0), _record("weak", 10000), _record("edge", 19999), _record("pos", 20000)]
    kept = filter_records(records, DatasetConfig())
    assert [r.image_id for r in kept] == ["zero", "pos"]
    assert kept[0].label == Label.NEGATIVE
    assert kept[1].label == Label.POSITIVE
    assert filter_records(kept, DatasetConfig()) == kept


def test_scaled_threshold():
    assert scaled_pixel_threshold(512) == 20000
    assert scaled_pixel_threshold(128) == 1250
    assert scaled_pixel_threshold(256) == 5000


def test_preprocess_counts_after_resize(bakery):
    image = np.zeros((200, 100, 3), dtype=np.uint8)
    mask = np.zeros((200, 100), dtype=np.int64)
    mask[:100] = 10  # cake on the top half
    config = DatasetConfig(target_size=50, pixel_threshold=1000)
    pixels, resized, label, count = preprocess(image, mask, bakery, config)
    assert pixels.shape == (50, 50, 3)
    assert resized.shape == (50, 50)
    assert count == 50 * 25
    assert label == Label.POSITIVE


def test_preprocess_shape_mismatch(bakery):
    with pytest.raises(InvalidInputError):
        preprocess(np.zeros((10, 10, 3), dtype=np.uint8), np.zeros((10, 9), dtype=np.int64), bakery,
                   DatasetConfig(target_size=8, pixel_threshold=1))
