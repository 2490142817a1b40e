import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.join(os.path.dirname(__file__), "..", "src"))

from foodmil.config import TrainConfig  # noqa: E402
from foodmil.dataset.records import ImageRecord, Label  # noqa: E402
from foodmil.model.attention_mil import AttentionMIL  # noqa: E402
from foodmil.model.backbones import BackboneConfig  # noqa: E402

RUN_SLOW = os.environ.get("FOODMIL_RUN_SLOW") == "1"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: desk-scale runs, enabled with FOODMIL_RUN_SLOW=1")


def pytest_collection_modifyitems(config, items):
    if RUN_SLOW:
        return
    skip = pytest.mark.skip(reason="set FOODMIL_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def make_record(image_id, positive, size=32, split="train", seed=0):
    """In-memory record with random pixels and a matching mask."""
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)
    mask = np.zeros((size, size), dtype=np.uint8)
    if positive:
        mask[: size // 2, : size // 2] = 1
    return ImageRecord(
        image_id=image_id,
        label=Label.POSITIVE if positive else Label.NEGATIVE,
        positive_pixel_count=int(np.count_nonzero(mask)),
        split=split,
        pixels=pixels,
        mask=mask,
    )


@pytest.fixture
def small_records():
    return [make_record(f"img-{i:02d}", positive=i % 3 == 0, seed=i) for i in range(9)]


@pytest.fixture
def tiny_train_config():
    return TrainConfig(total_epochs=2, frozen_epochs=1, K=4, d=8, t=0.5, batch_size=3,
                       head_lr=1e-3, backbone_lr=1e-3, backbone="small-cnn",
                       embedding_dim=8, attention_dim=6, checkpoint_every=1, seed=3, workers=0)


@pytest.fixture
def small_model():
    import torch

    torch.manual_seed(0)
    return AttentionMIL(BackboneConfig(kind="small-cnn"), patch_size=8, embedding_dim=8,
                        attention_dim=6, load_weights=False)
