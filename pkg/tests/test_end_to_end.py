import os

import pytest

from foodmil.config import apply_overrides, load_config
from foodmil.foodmil_core import FoodMILCore

CONFIG = os.path.join(os.path.dirname(__file__), "..", "configs", "synthetic.yaml")


@pytest.mark.slow
def test_synthetic_plates_are_learned(tmp_path):
    config = load_config(CONFIG)
    config = apply_overrides(config, {
        "output_dir": str(tmp_path / "run"),
        "workers": 0,
        "dataset.prepared_dir": str(tmp_path / "prepared"),
        "dataset.manifest": str(tmp_path / "prepared" / "manifest.tsv"),
    })
    core = FoodMILCore(config)

    records = core.synth()
    assert len(records) == 400
    state = core.train()
    assert state.epoch == 20
    assert state.history[-1]["loss"] < state.history[0]["loss"]

    report = core.evaluate()
    assert report.accuracy >= 0.90
    assert report.mean_iou >= 0.40
    assert report.n_images_pixel_eval > 0
