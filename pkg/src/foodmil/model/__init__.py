"""The attention-based MIL network and its checkpoints."""

from .attention_mil import (
    AttentionMIL,
    AttentionOutput,
    attention_scores,
    attention_weights,
    classify,
    patches_to_tensor,
    pool_embedding,
)
from .backbones import BackboneConfig, SmallCNN, build_backbone
from .checkpoint import backbone_checksum, load_checkpoint, read_checkpoint, save_checkpoint

__all__ = [
    "AttentionMIL",
    "AttentionOutput",
    "BackboneConfig",
    "SmallCNN",
    "attention_scores",
    "attention_weights",
    "backbone_checksum",
    "build_backbone",
    "classify",
    "load_checkpoint",
    "patches_to_tensor",
    "pool_embedding",
    "read_checkpoint",
    "save_checkpoint",
]
