"""
Attention-based multiple instance learning network

Each patch x_k of a bag goes through the backbone phi and an affine
projection to an M-dimensional embedding h_k. Attention pooling

    a_k = softmax_k( w^T tanh(V h_k) ),    z = sum_k a_k h_k

collapses the bag to z, and a single linear layer rho followed by a sigmoid
gives p(y=1 | X). The functional forms below are what the module uses, so they
can be checked by hand.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
import torch
import torch.nn as nn

from ..exceptions import InvalidInputError, NumericError
from .backbones import IMAGENET_MEAN, IMAGENET_STD, BackboneConfig, build_backbone

logger = logging.getLogger(__name__)


@dataclass
class AttentionOutput:
    weights: torch.Tensor      # (B, K)
    z: torch.Tensor            # (B, M)
    logit: torch.Tensor        # (B,)
    probability: torch.Tensor  # (B,)

    def detach(self) -> "AttentionOutput":
        return AttentionOutput(*(t.detach().cpu() for t in (self.weights, self.z, self.logit, self.probability)))


def attention_scores(H: torch.Tensor, V: torch.Tensor, w: torch.Tensor) -> torch.Tensor:
    """
    Pre-softmax scores w^T tanh(V h_k).

    Args:
        H: (..., K, M) embeddings
        V: (L, M) weight matrix
        w: (L,) or (L, 1) weight vector

    Returns:
        (..., K) scores
    """
    if H.shape[-1] != V.shape[-1]:
        raise InvalidInputError(f"embedding width {H.shape[-1]} does not match V of shape {tuple(V.shape)}")
    w = w.reshape(-1)
    if w.shape[0] != V.shape[0]:
        raise InvalidInputError(f"w has {w.shape[0]} entries, V has {V.shape[0]} rows")
    return torch.tanh(H @ V.T) @ w


def attention_weights(H: torch.Tensor, V: torch.Tensor, w: torch.Tensor) -> torch.Tensor:
    """Softmax over the bag of the attention scores; each row sums to one."""
    scores = attention_scores(H, V, w)
    if not torch.isfinite(scores).all():
        raise NumericError("non-finite attention scores")
    return torch.softmax(scores, dim=-1)


def pool_embedding(H: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
    """z = sum_k a_k h_k for (..., K, M) embeddings and (..., K) weights."""
    if H.shape[:-1] != weights.shape:
        raise InvalidInputError(f"{tuple(weights.shape)} weights for embeddings of shape {tuple(H.shape)}")
    return (weights.unsqueeze(-1) * H).sum(dim=-2)


def classify(z: torch.Tensor, weight: torch.Tensor, bias: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """Logit rho(z) = weight . z + bias and its sigmoid probability."""
    logit = z @ weight.reshape(-1) + bias.reshape(())
    return logit, torch.sigmoid(logit)


def patches_to_tensor(patches: np.ndarray) -> torch.Tensor:
    """(K, d, d, 3) uint8 patches to a (K, 3, d, d) float tensor in [0, 1]."""
    tensor = torch.from_numpy(np.ascontiguousarray(patches))
    tensor = tensor.permute(0, 3, 1, 2).float()
    if patches.dtype == np.uint8:
        tensor = tensor / 255.0
    return tensor


class AttentionMIL(nn.Module):
    """
    Binary bag classifier with attention pooling.

    One model detects one meta-class. Inputs are bags of (B, K, 3, d, d)
    patches scaled to [0, 1]; channel normalisation happens inside.
    """

    def __init__(self, backbone: BackboneConfig, patch_size: int,
                 embedding_dim: int = 128, attention_dim: int = 128, load_weights: bool = True):
        """
        Args:
            backbone: Feature extractor settings
            patch_size: Side length d of the patches
            embedding_dim: M, width of h_k and z
            attention_dim: L, hidden width of the attention network
            load_weights: Fetch pretrained backbone weights
        """
        super().__init__()
        if patch_size < backbone.min_patch_size:
            raise InvalidInputError(
                f"{backbone.kind} needs patches of at least {backbone.min_patch_size}px, got {patch_size}"
            )
        self.backbone_config = backbone
        self.patch_size = patch_size
        self.embedding_dim = embedding_dim
        self.attention_dim = attention_dim

        self.backbone = build_backbone(backbone, load_weights=load_weights)
        self.projection = nn.Linear(backbone.output_dim, embedding_dim)
        self.attention_V = nn.Linear(embedding_dim, attention_dim, bias=False)
        self.attention_w = nn.Linear(attention_dim, 1, bias=False)
        self.classifier = nn.Linear(embedding_dim, 1)

        mean, std = (IMAGENET_MEAN, IMAGENET_STD) if backbone.uses_imagenet_statistics else ((0.0,) * 3, (1.0,) * 3)
        self.register_buffer("input_mean", torch.tensor(mean).view(1, 3, 1, 1))
        self.register_buffer("input_std", torch.tensor(std).view(1, 3, 1, 1))

        self._backbone_frozen = False
        if backbone.frozen:
            self.set_backbone_trainable(False)

    # -- configuration ---------------------------------------------------

    def describe(self) -> Dict[str, Any]:
        return {
            "backbone": self.backbone_config.kind,
            "patch_size": self.patch_size,
            "embedding_dim": self.embedding_dim,
            "attention_dim": self.attention_dim,
        }

    @classmethod
    def from_description(cls, description: Dict[str, Any], load_weights: bool = False) -> "AttentionMIL":
        return cls(
            BackboneConfig(kind=description["backbone"]),
            patch_size=int(description["patch_size"]),
            embedding_dim=int(description["embedding_dim"]),
            attention_dim=int(description["attention_dim"]),
            load_weights=load_weights,
        )

    @property
    def backbone_frozen(self) -> bool:
        return self._backbone_frozen

    def set_backbone_trainable(self, trainable: bool) -> None:
        """Freeze or release the backbone; a frozen backbone also stays in eval mode."""
        for parameter in self.backbone.parameters():
            parameter.requires_grad = trainable
        self._backbone_frozen = not trainable
        if not trainable:
            self.backbone.eval()
        elif self.training:
            self.backbone.train()

    def train(self, mode: bool = True) -> "AttentionMIL":
        super().train(mode)
        if self._backbone_frozen:
            self.backbone.eval()
        return self

    def head_parameters(self):
        for module in (self.projection, self.attention_V, self.attention_w, self.classifier):
            yield from module.parameters()

    # -- the pipeline, step by step ---------------------------------------

    def extract_features(self, patches: torch.Tensor) -> torch.Tensor:
        """
        Embeddings h_k for a flat batch of patches.

        Args:
            patches: (N, 3, d, d) in [0, 1]

        Returns:
            (N, M) embeddings
        """
        if patches.dim() != 4 or patches.shape[1] != 3 or patches.shape[2] != self.patch_size \
                or patches.shape[3] != self.patch_size:
            raise InvalidInputError(
                f"expected (N, 3, {self.patch_size}, {self.patch_size}) patches, got {tuple(patches.shape)}"
            )
        normalized = (patches - self.input_mean) / self.input_std
        features = self.backbone(normalized)
        return self.projection(features.flatten(1))

    def attention_weights(self, H: torch.Tensor) -> torch.Tensor:
        return attention_weights(H, self.attention_V.weight, self.attention_w.weight)

    def pool_embedding(self, H: torch.Tensor, weights: torch.Tensor) -> torch.Tensor:
        return pool_embedding(H, weights)

    def classify(self, z: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        return classify(z, self.classifier.weight, self.classifier.bias)

    def forward_features(self, H: torch.Tensor) -> AttentionOutput:
        """Attention, pooling and classification from (B, K, M) embeddings."""
        weights = self.attention_weights(H)
        z = self.pool_embedding(H, weights)
        logit, probability = self.classify(z)
        return AttentionOutput(weights=weights, z=z, logit=logit, probability=probability)

    def forward(self, bags: torch.Tensor) -> AttentionOutput:
        """
        Args:
            bags: (B, K, 3, d, d) patches, all bags of equal K

        Returns:
            AttentionOutput with a batch dimension B
        """
        if bags.dim() != 5:
            raise InvalidInputError(f"expected (B, K, 3, d, d) bags, got {tuple(bags.shape)}")
        batch, k = bags.shape[:2]
        H = self.extract_features(bags.reshape(batch * k, *bags.shape[2:])).reshape(batch, k, -1)
        return self.forward_features(H)

    @torch.no_grad()
    def forward_bag(self, patches: torch.Tensor, chunk_size: Optional[int] = 256) -> AttentionOutput:
        """
        Inference on one possibly large bag, extracting features in chunks.

        Attention is still normalised over the whole bag.

        Args:
            patches: (K, 3, d, d)
            chunk_size: Patches per backbone call; None for a single call

        Returns:
            AttentionOutput with a batch dimension of 1
        """
        if chunk_size is None or chunk_size >= len(patches):
            H = self.extract_features(patches)
        else:
            H = torch.cat([self.extract_features(chunk) for chunk in torch.split(patches, chunk_size)])
        return self.forward_features(H.unsqueeze(0))
