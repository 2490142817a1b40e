"""
Image-level classification metrics
"""

from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, NamedTuple, Optional

from sklearn.metrics import confusion_matrix

from ..exceptions import InvalidInputError


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with rows as ground truth and columns as prediction, positive first."""

    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise InvalidInputError(f"confusion counts must be non-negative: {self}")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def rows(self) -> List[List[int]]:
        return [[self.tp, self.fn], [self.fp, self.tn]]

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


class ClassificationScores(NamedTuple):
    accuracy: float
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]


def _ratio(numerator: int, denominator: int) -> Optional[float]:
    return numerator / denominator if denominator else None


def classification_metrics(cm: ConfusionMatrix) -> ClassificationScores:
    """
    Accuracy, precision, recall and F1 of a confusion matrix.

    Metrics whose denominator is zero are None rather than 0.

    Raises:
        InvalidInputError: for an all-zero matrix
    """
    if cm.total == 0:
        raise InvalidInputError("confusion matrix is empty")
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    f1 = None
    if precision is not None and recall is not None and precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return ClassificationScores((cm.tp + cm.tn) / cm.total, precision, recall, f1)


def confusion_from_labels(y_true: Iterable[int], y_pred: Iterable[int]) -> ConfusionMatrix:
    """Build the matrix from binary ground-truth and predicted labels."""
    y_true, y_pred = list(y_true), list(y_pred)
    if len(y_true) != len(y_pred):
        raise InvalidInputError(f"{len(y_true)} labels but {len(y_pred)} predictions")
    if not y_true:
        raise InvalidInputError("no labels to compare")
    (tp, fn), (fp, tn) = confusion_matrix(y_true, y_pred, labels=[1, 0])
    return ConfusionMatrix(int(tp), int(fn), int(fp), int(tn))
