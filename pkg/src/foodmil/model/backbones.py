"""
Patch feature extractors

`resnet34-pretrained` is the ImageNet ResNet-34 with its classification layer
removed (512 features per patch). `small-cnn` is a three-block network of
about 93k parameters for desk-scale runs and tests.
"""

import logging
from dataclasses import dataclass

import torch
import torch.nn as nn

from ..exceptions import InvalidInputError

logger = logging.getLogger(__name__)

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

_OUTPUT_DIMS = {"resnet34-pretrained": 512, "small-cnn": 128}
_MIN_PATCH = {"resnet34-pretrained": 32, "small-cnn": 4}


@dataclass(frozen=True)
class BackboneConfig:
    kind: str = "resnet34-pretrained"
    frozen: bool = False

    def __post_init__(self):
        if self.kind not in _OUTPUT_DIMS:
            raise InvalidInputError(f"unknown backbone {self.kind!r}; choose from {sorted(_OUTPUT_DIMS)}")

    @property
    def output_dim(self) -> int:
        return _OUTPUT_DIMS[self.kind]

    @property
    def min_patch_size(self) -> int:
        return _MIN_PATCH[self.kind]

    @property
    def uses_imagenet_statistics(self) -> bool:
        return self.kind == "resnet34-pretrained"


class SmallCNN(nn.Module):
    """Three conv blocks and global average pooling."""

    def __init__(self, width: int = 32):
        super().__init__()
        self.features = nn.Sequential(
            nn.Conv2d(3, width, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
            nn.MaxPool2d(2),
            nn.Conv2d(width, width * 2, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
            nn.MaxPool2d(2),
            nn.Conv2d(width * 2, width * 4, kernel_size=3, padding=1),
            nn.ReLU(inplace=True),
            nn.AdaptiveAvgPool2d(1),
            nn.Flatten(),
        )
        self.output_dim = width * 4

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.features(x)


def _resnet34(load_weights: bool) -> nn.Module:
    from torchvision.models import ResNet34_Weights, resnet34

    weights = ResNet34_Weights.IMAGENET1K_V1 if load_weights else None
    if load_weights:
        logger.info("Loading ImageNet ResNet-34 weights")
    network = resnet34(weights=weights)
    network.fc = nn.Identity()
    return network


def build_backbone(config: BackboneConfig, load_weights: bool = True) -> nn.Module:
    """
    Instantiate a backbone.

    Args:
        config: Backbone kind
        load_weights: Fetch pretrained weights; False when a checkpoint will
            overwrite them anyway

    Returns:
        Module mapping (N, 3, d, d) patches to (N, config.output_dim) features
    """
    if config.kind == "resnet34-pretrained":
        return _resnet34(load_weights)
    return SmallCNN()
