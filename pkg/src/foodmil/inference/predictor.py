"""
Test-time classification and localisation

A Predictor wraps a trained model snapshot. It classifies an image from its
dense bag at the test overlap and, for the images selected by the heatmap
policy, turns the attention weights of that same bag into a heatmap.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
import torch
from tqdm import tqdm

from ..config import HEATMAP_POLICIES, InferenceConfig
from ..dataset.records import ImageRecord, Label
from ..exceptions import InvalidInputError
from ..model.attention_mil import AttentionMIL, AttentionOutput, patches_to_tensor
from ..patchbag.bag_sampler import PatchBag, dense_bag
from ..patchbag.grid import GridSpec, count_mismatch, count_patches
from .heatmap import Heatmap, accumulate_heatmap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Prediction:
    image_id: str
    probability: float
    label: Label
    threshold: float = 0.5

    @classmethod
    def from_probability(cls, image_id: str, probability: float, threshold: float = 0.5) -> "Prediction":
        label = Label.POSITIVE if probability >= threshold else Label.NEGATIVE
        return cls(image_id=image_id, probability=float(probability), label=label, threshold=threshold)

    @property
    def is_positive(self) -> bool:
        return self.label == Label.POSITIVE


def predict(image: ImageRecord, model: AttentionMIL, spec: GridSpec, threshold: float = 0.5,
            chunk_size: Optional[int] = 256, device: Optional[torch.device] = None,
            pixels: Optional[np.ndarray] = None) -> Tuple[Prediction, AttentionOutput, PatchBag]:
    """
    Classify one image from its dense bag.

    Args:
        image: Record to classify
        model: Trained model
        spec: Dense grid at the test overlap
        threshold: Probability at or above which the image is positive
        chunk_size: Patches per backbone call
        device: Device the model lives on
        pixels: Already loaded pixels of the image

    Returns:
        (prediction, attention output on CPU, the dense bag)
    """
    bag = dense_bag(image, spec, pixels=pixels)
    model.eval()
    patches = patches_to_tensor(bag.patches)
    if device is not None:
        patches = patches.to(device)
    output = model.forward_bag(patches, chunk_size=chunk_size).detach()
    prediction = Prediction.from_probability(image.image_id, float(output.probability[0]), threshold)
    return prediction, output, bag


def heatmap_from_output(output: AttentionOutput, bag: PatchBag, spec: GridSpec, a: float) -> Heatmap:
    heatmap = accumulate_heatmap(output.weights[0].double().numpy(), bag.origins, spec.D, spec.d)
    return heatmap.with_threshold(a)


class Predictor:
    """
    Classification and heatmaps over a read-only model.
    """

    def __init__(self, model: AttentionMIL, config: Optional[InferenceConfig] = None,
                 device: Optional[str] = None):
        self.config = config or InferenceConfig()
        self.device = torch.device(device or ("cuda" if torch.cuda.is_available() else "cpu"))
        self.model = model.to(self.device).eval()
        self._specs: Dict[int, GridSpec] = {}

    def spec_for(self, size: int) -> GridSpec:
        """Dense grid at the test overlap for a size x size image."""
        if size not in self._specs:
            spec = GridSpec(size, self.model.patch_size, self.config.overlap)
            if not spec.stride_divides_span():
                logger.warning("Stride %g does not divide D-d=%d: %d patches enumerated, closed form gives %d (%+d)",
                               spec.stride, spec.span, spec.positions_per_axis() ** 2, count_patches(spec),
                               count_mismatch(spec))
            self._specs[size] = spec
        return self._specs[size]

    def _analyse(self, record: ImageRecord) -> Tuple[Prediction, AttentionOutput, PatchBag, GridSpec]:
        pixels = record.load_pixels()
        spec = self.spec_for(pixels.shape[0])
        prediction, output, bag = predict(record, self.model, spec,
                                          threshold=self.config.classification_threshold,
                                          chunk_size=self.config.chunk_size, device=self.device, pixels=pixels)
        return prediction, output, bag, spec

    def predict(self, record: ImageRecord) -> Prediction:
        return self._analyse(record)[0]

    def heatmap_for(self, record: ImageRecord) -> Tuple[Prediction, Heatmap]:
        prediction, output, bag, spec = self._analyse(record)
        return prediction, heatmap_from_output(output, bag, spec, self.config.seg_threshold)

    def wants_heatmap(self, record: ImageRecord, prediction: Prediction, policy: Optional[str] = None) -> bool:
        policy = policy or self.config.heatmaps_for
        if policy not in HEATMAP_POLICIES:
            raise InvalidInputError(f"unknown heatmap policy {policy!r}")
        if policy == "all":
            return True
        if policy == "positive-labels":
            return record.is_positive
        if policy == "positive-predictions":
            return prediction.is_positive
        return record.is_positive or prediction.is_positive

    def run(self, records: Iterable[ImageRecord], policy: Optional[str] = None
            ) -> Tuple[Dict[str, Prediction], Dict[str, Heatmap]]:
        """
        Predict every record and build heatmaps for those the policy selects.

        Args:
            records: Images to process
            policy: One of positive-labels, positive-predictions, both, all;
                the configured policy when None

        Returns:
            (predictions by image id, heatmaps by image id)
        """
        records = list(records)
        predictions: Dict[str, Prediction] = {}
        heatmaps: Dict[str, Heatmap] = {}
        for record in tqdm(records, desc="inference", leave=False):
            prediction, output, bag, spec = self._analyse(record)
            predictions[record.image_id] = prediction
            if self.wants_heatmap(record, prediction, policy):
                heatmaps[record.image_id] = heatmap_from_output(output, bag, spec, self.config.seg_threshold)
        positives = sum(p.is_positive for p in predictions.values())
        logger.info("Predicted %d images (%d positive), built %d heatmaps", len(predictions), positives, len(heatmaps))
        return predictions, heatmaps
