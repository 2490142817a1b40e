import numpy as np
import pytest

from foodmil.dataset.preprocessing import scaled_pixel_threshold
from foodmil.dataset.records import Label
from foodmil.dataset.synthetic_plates import (
    TARGET_CLASS_ID,
    TARGET_META_CLASS,
    generate_synthetic,
    render_plate,
)
from foodmil.exceptions import InvalidInputError


@pytest.fixture(scope="module")
def corpus():
    return generate_synthetic(seed=7, n_images=200, size=64)


def test_same_seed_is_identical(corpus):
    again = generate_synthetic(seed=7, n_images=200, size=64)
    for a, b in zip(corpus, again):
        assert a.image_id == b.image_id
        assert a.split == b.split
        assert a.label == b.label
        assert a.pixels.tobytes() == b.pixels.tobytes()
        assert a.mask.tobytes() == b.mask.tobytes()


def test_different_seed_differs(corpus):
    other = generate_synthetic(seed=8, n_images=200, size=64)
    assert any(a.pixels.tobytes() != b.pixels.tobytes() for a, b in zip(corpus, other))


def test_label_balance_and_split(corpus):
    positives = sum(r.label == Label.POSITIVE for r in corpus)
    assert 0.4 <= positives / len(corpus) <= 0.6
    assert sum(r.split == "test" for r in corpus) == 60


def test_counts_match_masks(corpus):
    threshold = scaled_pixel_threshold(64)
    for record in corpus:
        recount = int(np.count_nonzero(record.mask == TARGET_CLASS_ID))
        assert record.positive_pixel_count == recount
        if record.label == Label.NEGATIVE:
            assert recount == 0
        else:
            assert recount >= threshold


def test_target_pixels_are_orange(corpus):
    record = next(r for r in corpus if r.label == Label.POSITIVE)
    target = record.pixels[record.mask == TARGET_CLASS_ID].astype(float).mean(axis=0)
    # Red channel dominates blue inside the target region.
    assert target[0] > target[2] + 80


def test_render_without_target():
    rng = np.random.default_rng(0)
    for _ in range(20):
        pixels, mask = render_plate(rng, 48, with_target=False)
        assert pixels.dtype == np.uint8
        assert TARGET_CLASS_ID not in mask


def test_meta_class():
    assert TARGET_META_CLASS.member_class_ids == frozenset({TARGET_CLASS_ID})


def test_argument_checks():
    with pytest.raises(InvalidInputError):
        generate_synthetic(seed=0, n_images=1, size=64)
    with pytest.raises(InvalidInputError):
        generate_synthetic(seed=0, n_images=10, size=16)
