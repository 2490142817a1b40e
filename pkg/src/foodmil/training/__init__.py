"""
Training: epoch plans, bag loading and the two-phase trainer
"""

from .bag_dataset import BagDataset
from .epoch_plan import PlanEntry, bag_seed, make_epoch_plan, plan_counts, stable_hash
from .mil_trainer import (
    FINAL_CHECKPOINT,
    LAST_CHECKPOINT,
    MILTrainer,
    TrainState,
    bag_loss,
    build_model,
    build_optimizer,
    train_step,
)

__all__ = [
    "BagDataset",
    "FINAL_CHECKPOINT",
    "LAST_CHECKPOINT",
    "MILTrainer",
    "PlanEntry",
    "TrainState",
    "bag_loss",
    "bag_seed",
    "build_model",
    "build_optimizer",
    "make_epoch_plan",
    "plan_counts",
    "stable_hash",
    "train_step",
]
