"""
Two-phase MIL training

The backbone stays frozen for the first `frozen_epochs` epochs while the
projection, attention and classifier learn; afterwards every parameter is
fine-tuned. Each epoch draws new random bags from its epoch plan.
"""

import dataclasses
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import torch
import torch.nn.functional as F
from sklearn.model_selection import train_test_split
from torch.utils.data import DataLoader
from tqdm import tqdm

from ..config import TrainConfig
from ..dataset.records import ImageRecord
from ..exceptions import InvalidInputError, TrainingDivergedError
from ..model.attention_mil import AttentionMIL, patches_to_tensor
from ..model.backbones import BackboneConfig
from ..model.checkpoint import read_checkpoint, save_checkpoint
from ..patchbag.bag_sampler import sample_bag
from ..patchbag.grid import GridSpec
from .bag_dataset import BagDataset
from .epoch_plan import make_epoch_plan, stable_hash

logger = logging.getLogger(__name__)

PROBABILITY_EPS = 1e-7
LAST_CHECKPOINT = "last.pt"
FINAL_CHECKPOINT = "final.pt"


def bag_loss(probability: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7]."""
    clamped = probability.clamp(PROBABILITY_EPS, 1.0 - PROBABILITY_EPS)
    return F.binary_cross_entropy(clamped, labels.to(clamped.dtype))


def build_model(config: TrainConfig, load_weights: bool = True) -> AttentionMIL:
    return AttentionMIL(
        BackboneConfig(kind=config.backbone),
        patch_size=config.d,
        embedding_dim=config.embedding_dim,
        attention_dim=config.attention_dim,
        load_weights=load_weights,
    )


def build_optimizer(model: AttentionMIL, config: TrainConfig) -> torch.optim.Optimizer:
    """Adam with separate head and backbone learning rates."""
    return torch.optim.Adam([
        {"params": list(model.head_parameters()), "lr": config.head_lr},
        {"params": list(model.backbone.parameters()), "lr": config.backbone_lr},
    ])


@dataclass
class TrainState:
    model: AttentionMIL
    optimizer: torch.optim.Optimizer
    epoch: int = 0
    history: List[Dict[str, Any]] = field(default_factory=list)


def train_step(state: TrainState, bags: torch.Tensor, labels: torch.Tensor, batch_index: int = 0) -> float:
    """
    One optimizer update on a batch of bags.

    Args:
        state: Model and optimizer to update
        bags: (B, K, 3, d, d) patches
        labels: (B,) binary labels
        batch_index: Position in the epoch, for diagnostics

    Returns:
        Batch loss before the update
    """
    if not torch.all((labels == 0) | (labels == 1)):
        raise InvalidInputError("labels must be 0 or 1")
    state.model.train()
    output = state.model(bags)
    if not torch.isfinite(output.probability).all():
        raise TrainingDivergedError(state.epoch + 1, batch_index, float("nan"), "non-finite probabilities")
    loss = bag_loss(output.probability, labels)
    if not torch.isfinite(loss):
        raise TrainingDivergedError(state.epoch + 1, batch_index, float(loss))
    state.optimizer.zero_grad(set_to_none=True)
    loss.backward()
    state.optimizer.step()
    return float(loss.detach())


def _image_size(records: Sequence[ImageRecord]) -> int:
    return int(records[0].load_pixels().shape[0])


class MILTrainer:
    """
    Runs the frozen and fine-tuning phases, with history files and checkpoints
    under `output_dir`.
    """

    def __init__(self, config: TrainConfig, output_dir, model: Optional[AttentionMIL] = None,
                 device: Optional[str] = None, run_config: Optional[Dict[str, Any]] = None,
                 load_weights: bool = True):
        """
        Args:
            config: Training settings
            output_dir: Where history and checkpoints are written
            model: Start from this model instead of a fresh one
            device: Torch device; CUDA when available by default
            run_config: Full run configuration stored in checkpoints
            load_weights: Fetch pretrained backbone weights for a fresh model
        """
        self.config = config
        self.output_dir = Path(output_dir)
        self.device = torch.device(device or ("cuda" if torch.cuda.is_available() else "cpu"))
        self.run_config = run_config or {"train": dataclasses.asdict(config)}

        torch.manual_seed(config.seed)
        model = model if model is not None else build_model(config, load_weights=load_weights)
        model.to(self.device)
        self.state = TrainState(model=model, optimizer=build_optimizer(model, config))

    @property
    def model(self) -> AttentionMIL:
        return self.state.model

    @property
    def history(self) -> List[Dict[str, Any]]:
        return self.state.history

    def checkpoint_path(self, name: str = LAST_CHECKPOINT) -> Path:
        return self.output_dir / name

    # -- persistence -------------------------------------------------------

    def save(self, name: str = LAST_CHECKPOINT) -> Path:
        return save_checkpoint(self.checkpoint_path(name), self.model, self.state.epoch,
                               optimizer=self.state.optimizer, history=self.history,
                               config=self.run_config)

    def restore(self, path: Optional[Path] = None) -> bool:
        """Resume from a checkpoint; returns False when there is nothing to resume."""
        path = Path(path) if path is not None else self.checkpoint_path()
        if not path.exists():
            logger.warning("No checkpoint at %s, starting from scratch", path)
            return False
        payload = read_checkpoint(path)
        self.model.load_state_dict(payload["state_dict"])
        if payload.get("optimizer") is not None:
            self.state.optimizer.load_state_dict(payload["optimizer"])
        self.state.epoch = int(payload["epoch"])
        self.state.history = list(payload.get("history") or [])
        if payload.get("torch_rng") is not None:
            torch.set_rng_state(payload["torch_rng"])
        logger.info("Resumed from %s after epoch %d", path, self.state.epoch)
        return True

    def _write_history(self) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        with open(self.output_dir / "history.log", "w", encoding="utf-8") as handle:
            for row in self.history:
                handle.write(f"epoch {row['epoch']:4d}  loss {row['loss']:.6f}  time {row['wall_time']:.1f}s\n")
        pd.DataFrame(self.history).to_csv(self.output_dir / "history.csv", index=False)

    # -- training ----------------------------------------------------------

    def split_validation(self, records: Sequence[ImageRecord]):
        if self.config.val_fraction <= 0:
            return list(records), []
        labels = [int(r.label) for r in records]
        train, val = train_test_split(list(records), test_size=self.config.val_fraction,
                                      stratify=labels, random_state=self.config.seed)
        logger.info("Holding out %d of %d images for validation", len(val), len(records))
        return train, val

    def run_epoch(self, records: Sequence[ImageRecord], spec: GridSpec) -> float:
        epoch = self.state.epoch
        self.model.set_backbone_trainable(epoch >= self.config.frozen_epochs)
        plan = make_epoch_plan(records, self.config, epoch)
        loader = DataLoader(BagDataset(records, plan, spec, self.config.K), batch_size=self.config.batch_size,
                            shuffle=False, num_workers=self.config.workers)
        losses, sizes = [], []
        for batch_index, (bags, labels) in enumerate(tqdm(loader, desc=f"epoch {epoch + 1}", leave=False)):
            loss = train_step(self.state, bags.to(self.device), labels.to(self.device), batch_index)
            losses.append(loss)
            sizes.append(len(labels))
        return float(np.average(losses, weights=sizes))

    @torch.no_grad()
    def validate(self, records: Sequence[ImageRecord], spec: GridSpec) -> Dict[str, float]:
        """Loss and accuracy on fixed bags of held-out images."""
        self.model.eval()
        probabilities, labels = [], []
        for record in records:
            bag = sample_bag(record, spec, self.config.K, stable_hash(self.config.seed, "val", record.image_id))
            output = self.model(patches_to_tensor(bag.patches).unsqueeze(0).to(self.device))
            probabilities.append(float(output.probability[0]))
            labels.append(float(record.label))
        prob = torch.tensor(probabilities)
        target = torch.tensor(labels)
        accuracy = float(((prob >= 0.5).float() == target).float().mean())
        return {"val_loss": float(bag_loss(prob, target)), "val_accuracy": accuracy}

    def fit(self, records: Sequence[ImageRecord], resume: bool = False) -> TrainState:
        """
        Train for the configured number of epochs.

        Args:
            records: Filtered training records, both classes present
            resume: Continue from `last.pt` in the output directory

        Returns:
            Final training state; `final.pt` holds the same model
        """
        if not records:
            raise InvalidInputError("no training records")
        if resume:
            self.restore()
        train_records, val_records = self.split_validation(records)
        spec = GridSpec(_image_size(train_records), self.config.d, self.config.t)

        if self.state.epoch < self.config.total_epochs:
            logger.info("Training %s for epochs %d-%d (%d frozen) on %d images",
                        self.config.backbone, self.state.epoch + 1, self.config.total_epochs,
                        self.config.frozen_epochs, len(train_records))
        while self.state.epoch < self.config.total_epochs:
            started = time.perf_counter()
            phase = "frozen" if self.state.epoch < self.config.frozen_epochs else "fine-tune"
            mean_loss = self.run_epoch(train_records, spec)
            self.state.epoch += 1
            row: Dict[str, Any] = {"epoch": self.state.epoch, "phase": phase, "loss": mean_loss,
                                   "wall_time": time.perf_counter() - started}
            if val_records:
                row.update(self.validate(val_records, spec))
            self.history.append(row)
            self._write_history()
            logger.info("Epoch %d/%d [%s] loss %.4f", self.state.epoch, self.config.total_epochs, phase, mean_loss)
            if self.state.epoch % self.config.checkpoint_every == 0:
                self.save(LAST_CHECKPOINT)

        self.model.eval()
        self.save(LAST_CHECKPOINT)
        self.save(FINAL_CHECKPOINT)
        return self.state
