import math

import pandas as pd
import pytest
import torch

from foodmil.exceptions import InvalidInputError, TrainingDivergedError
from foodmil.model.checkpoint import backbone_checksum, read_checkpoint
from foodmil.training.mil_trainer import (
    FINAL_CHECKPOINT,
    LAST_CHECKPOINT,
    MILTrainer,
    TrainState,
    bag_loss,
    build_optimizer,
    train_step,
)


def test_loss_at_perfect_prediction():
    loss = bag_loss(torch.tensor([1.0, 0.0, 1.0]), torch.tensor([1.0, 0.0, 1.0]))
    assert float(loss) <= 1e-6


def test_loss_at_chance():
    loss = bag_loss(torch.full((4,), 0.5), torch.tensor([1.0, 0.0, 1.0, 0.0]))
    assert float(loss) == pytest.approx(math.log(2.0), abs=1e-6)


def test_loss_is_a_batch_mean():
    probability = torch.tensor([0.2, 0.9, 0.6])
    labels = torch.tensor([0.0, 1.0, 0.0])
    doubled = bag_loss(probability.repeat(2), labels.repeat(2))
    assert float(doubled) == pytest.approx(float(bag_loss(probability, labels)), abs=1e-7)


def _state(model, config):
    return TrainState(model=model, optimizer=build_optimizer(model, config))


def test_step_reduces_loss(small_model, tiny_train_config):
    torch.manual_seed(0)
    bags = torch.rand(4, 5, 3, 8, 8)
    labels = torch.tensor([1.0, 0.0, 1.0, 0.0])
    state = _state(small_model, tiny_train_config)
    before = train_step(state, bags, labels)
    with torch.no_grad():
        after = float(bag_loss(small_model(bags).probability, labels))
    assert after < before


def test_frozen_step_leaves_backbone_untouched(small_model, tiny_train_config):
    state = _state(small_model, tiny_train_config)
    small_model.set_backbone_trainable(False)
    checksum = backbone_checksum(small_model)
    head_before = small_model.classifier.weight.detach().clone()
    train_step(state, torch.rand(2, 4, 3, 8, 8), torch.tensor([1.0, 0.0]))
    assert backbone_checksum(small_model) == checksum
    assert not torch.equal(small_model.classifier.weight, head_before)


def test_divergence_is_reported(small_model, tiny_train_config):
    state = _state(small_model, tiny_train_config)
    with torch.no_grad():
        small_model.classifier.bias.fill_(float("nan"))
    with pytest.raises(TrainingDivergedError) as info:
        train_step(state, torch.rand(2, 4, 3, 8, 8), torch.tensor([1.0, 0.0]), batch_index=7)
    assert info.value.batch_index == 7


def test_labels_must_be_binary(small_model, tiny_train_config):
    state = _state(small_model, tiny_train_config)
    with pytest.raises(InvalidInputError):
        train_step(state, torch.rand(2, 4, 3, 8, 8), torch.tensor([1.0, 0.5]))


def _trainer(config, tmp_path, model):
    return MILTrainer(config, tmp_path, model=model, device="cpu")


def test_zero_epochs_returns_initial_model(tmp_path, small_records, small_model, tiny_train_config):
    tiny_train_config.total_epochs = 0
    tiny_train_config.frozen_epochs = 0
    initial = {k: v.clone() for k, v in small_model.state_dict().items()}
    state = _trainer(tiny_train_config, tmp_path, small_model).fit(small_records)
    assert state.history == []
    assert state.epoch == 0
    for key, value in state.model.state_dict().items():
        assert torch.equal(value, initial[key])
    assert (tmp_path / FINAL_CHECKPOINT).exists()


def test_frozen_phase_keeps_backbone(tmp_path, small_records, small_model, tiny_train_config):
    tiny_train_config.total_epochs = 1
    tiny_train_config.frozen_epochs = 1
    checksum = backbone_checksum(small_model)
    state = _trainer(tiny_train_config, tmp_path, small_model).fit(small_records)
    assert backbone_checksum(state.model) == checksum
    assert state.history[0]["phase"] == "frozen"


def test_fine_tuning_moves_backbone(tmp_path, small_records, small_model, tiny_train_config):
    tiny_train_config.total_epochs = 1
    tiny_train_config.frozen_epochs = 0
    checksum = backbone_checksum(small_model)
    state = _trainer(tiny_train_config, tmp_path, small_model).fit(small_records)
    assert backbone_checksum(state.model) != checksum
    assert state.history[0]["phase"] == "fine-tune"


def test_history_files_and_checkpoints(tmp_path, small_records, small_model, tiny_train_config):
    state = _trainer(tiny_train_config, tmp_path, small_model).fit(small_records)
    assert [row["epoch"] for row in state.history] == [1, 2]
    lines = (tmp_path / "history.log").read_text().splitlines()
    assert len(lines) == 2 and lines[0].startswith("epoch")
    frame = pd.read_csv(tmp_path / "history.csv")
    assert list(frame["epoch"]) == [1, 2]
    assert {"loss", "wall_time", "phase"} <= set(frame.columns)
    payload = read_checkpoint(tmp_path / LAST_CHECKPOINT)
    assert payload["epoch"] == 2
    assert len(payload["history"]) == 2


def test_resume_matches_uninterrupted_run(tmp_path, small_records, tiny_train_config):
    from foodmil.training.mil_trainer import build_model

    tiny_train_config.total_epochs = 3
    full = MILTrainer(tiny_train_config, tmp_path / "full", device="cpu", load_weights=False).fit(small_records)

    tiny_train_config.total_epochs = 2
    MILTrainer(tiny_train_config, tmp_path / "split", device="cpu", load_weights=False).fit(small_records)
    tiny_train_config.total_epochs = 3
    resumed = MILTrainer(tiny_train_config, tmp_path / "split", device="cpu",
                         load_weights=False).fit(small_records, resume=True)

    assert resumed.epoch == 3
    assert len(resumed.history) == 3
    for a, b in zip(full.history, resumed.history):
        assert a["loss"] == pytest.approx(b["loss"], abs=1e-5)
    assert isinstance(build_model(tiny_train_config, load_weights=False), type(full.model))


def test_validation_metrics_recorded(tmp_path, small_records, small_model, tiny_train_config):
    tiny_train_config.total_epochs = 1
    tiny_train_config.val_fraction = 0.34
    state = _trainer(tiny_train_config, tmp_path, small_model).fit(small_records)
    row = state.history[0]
    assert 0.0 <= row["val_accuracy"] <= 1.0
    assert row["val_loss"] > 0.0


def test_empty_records(tmp_path, small_model, tiny_train_config):
    with pytest.raises(InvalidInputError):
        _trainer(tiny_train_config, tmp_path, small_model).fit([])
