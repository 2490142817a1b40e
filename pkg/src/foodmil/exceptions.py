"""
Exceptions raised across the FoodMIL toolkit.

Everything derives from FoodMILError so the command line can map failures to
exit codes in one place.
"""

from typing import Iterable, List, Optional


class FoodMILError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(FoodMILError, ValueError):
    """An argument violates the documented preconditions of an operation."""


class NumericError(FoodMILError, ArithmeticError):
    """A non-finite value appeared where a finite one is required."""


class ConfigError(FoodMILError):
    """The run configuration failed validation."""

    def __init__(self, problems: Iterable[str]):
        self.problems: List[str] = list(problems)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.problems))


class DatasetError(FoodMILError):
    """A dataset could not be ingested or read."""


class MissingMaskError(DatasetError):
    """One or more images have no matching annotation mask."""

    def __init__(self, missing: Iterable[str]):
        self.missing: List[str] = sorted(missing)
        super().__init__(
            f"{len(self.missing)} image(s) without a mask:\n  " + "\n  ".join(self.missing)
        )


class UnknownImageError(FoodMILError):
    """Requested image ids are not part of the manifest."""

    def __init__(self, image_ids: Iterable[str]):
        self.image_ids: List[str] = sorted(image_ids)
        super().__init__("unknown image ids: " + ", ".join(self.image_ids))


class MissingHeatmapError(FoodMILError):
    """Ground-truth positive test images were evaluated without a heatmap."""

    def __init__(self, image_ids: Iterable[str]):
        self.image_ids: List[str] = sorted(image_ids)
        super().__init__("missing heatmap for: " + ", ".join(self.image_ids))


class MissingPredictionError(FoodMILError):
    """Test images were evaluated without a classification result."""

    def __init__(self, image_ids: Iterable[str]):
        self.image_ids: List[str] = sorted(image_ids)
        super().__init__("missing prediction for: " + ", ".join(self.image_ids))


class TrainingDivergedError(NumericError):
    """The training loss became NaN or infinite."""

    def __init__(self, epoch: int, batch_index: int, loss: float, detail: Optional[str] = None):
        self.epoch = epoch
        self.batch_index = batch_index
        self.loss = loss
        message = f"non-finite loss {loss} at epoch {epoch}, batch {batch_index}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class ExportError(FoodMILError):
    """Writing an output artifact failed."""

    def __init__(self, path, cause: OSError):
        self.path = path
        self.cause = cause
        super().__init__(f"could not write {path}: {cause}")
