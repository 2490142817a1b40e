"""
Published FoodSeg103 results

Confusion matrices and metric rows for the Meat and Bakery detectors trained
with the full recipe (ResNet-34, 130 epochs, 512x512 images). They serve as
fixtures for the metric code and as a yardstick printed next to local runs.
"""

from dataclasses import dataclass
from typing import Dict

from .classification import ConfusionMatrix


@dataclass(frozen=True)
class ReferenceResult:
    meta_class: str
    confusion: ConfusionMatrix
    accuracy: float
    precision: float
    recall: float
    f1: float
    iou: float
    ap: float
    # Test-set sizes quoted in the running text; they disagree with the matrices.
    text_positives: int
    text_negatives: int

    @property
    def table_negatives(self) -> int:
        return self.confusion.fp + self.confusion.tn

    @property
    def counts_reconciled(self) -> bool:
        return self.text_negatives == self.table_negatives


REFERENCE_RESULTS: Dict[str, ReferenceResult] = {
    "Meat": ReferenceResult(
        meta_class="Meat",
        confusion=ConfusionMatrix(tp=711, fn=206, fp=193, tn=905),
        accuracy=0.802, precision=0.786, recall=0.775, f1=0.780,
        iou=0.534, ap=0.775,
        text_positives=917, text_negatives=2015,
    ),
    "Bakery": ReferenceResult(
        meta_class="Bakery",
        confusion=ConfusionMatrix(tp=287, fn=256, fp=58, tn=1466),
        accuracy=0.848, precision=0.831, recall=0.528, f1=0.645,
        iou=0.474, ap=0.714,
        text_positives=543, text_negatives=1514,
    ),
}

# Training-set sizes after filtering, per meta-class: (positives, negatives).
REFERENCE_TRAIN_COUNTS: Dict[str, tuple] = {
    "Meat": (2048, 2627),
    "Bakery": (1330, 3464),
}
