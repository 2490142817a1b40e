"""
Image records and the on-disk manifest

A prepared dataset is a directory of resized RGB images, single-channel
palette masks and one tab-separated manifest describing every record.
"""

import enum
import logging
import os
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np
import pandas as pd
from PIL import Image

from ..exceptions import DatasetError, InvalidInputError

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = ["image_id", "image_path", "mask_path", "split", "label", "positive_pixel_count"]
SPLITS = ("train", "test")


class Label(enum.IntEnum):
    NEGATIVE = 0
    POSITIVE = 1

    @classmethod
    def parse(cls, text: str) -> "Label":
        try:
            return cls[str(text).strip().upper()]
        except KeyError as exc:
            raise DatasetError(f"unknown label {text!r}") from exc

    def __str__(self) -> str:
        return self.name.lower()


@dataclass
class ImageRecord:
    """
    One image with its image-level label.

    Pixels and mask are either held in memory (synthetic data) or read lazily
    from `image_path` / `mask_path` (prepared datasets), which keeps loader
    workers from copying the whole corpus.
    """

    image_id: str
    label: Label
    positive_pixel_count: int
    split: str = "train"
    pixels: Optional[np.ndarray] = None
    mask: Optional[np.ndarray] = None
    image_path: Optional[Path] = None
    mask_path: Optional[Path] = None

    def __post_init__(self):
        self.label = Label(int(self.label))
        if self.positive_pixel_count < 0:
            raise InvalidInputError(f"{self.image_id}: negative positive_pixel_count")
        if self.split not in SPLITS:
            raise InvalidInputError(f"{self.image_id}: split must be one of {SPLITS}")
        if self.pixels is not None:
            if self.pixels.ndim != 3 or self.pixels.shape[2] != 3 or self.pixels.shape[0] != self.pixels.shape[1]:
                raise InvalidInputError(f"{self.image_id}: pixels must be DxDx3, got {self.pixels.shape}")
            if self.mask is not None and self.mask.shape != self.pixels.shape[:2]:
                raise InvalidInputError(
                    f"{self.image_id}: mask shape {self.mask.shape} does not match pixels {self.pixels.shape[:2]}"
                )

    @property
    def is_positive(self) -> bool:
        return self.label == Label.POSITIVE

    @property
    def has_mask(self) -> bool:
        return self.mask is not None or self.mask_path is not None

    def load_pixels(self) -> np.ndarray:
        if self.pixels is not None:
            return self.pixels
        if self.image_path is None:
            raise DatasetError(f"{self.image_id}: no pixels in memory and no image path")
        return load_rgb(self.image_path)

    def load_mask(self) -> Optional[np.ndarray]:
        if self.mask is not None:
            return self.mask
        if self.mask_path is None:
            return None
        return load_mask_file(self.mask_path)


def load_rgb(path: os.PathLike) -> np.ndarray:
    """Read an image file as an HxWx3 uint8 array."""
    with Image.open(path) as image:
        return np.asarray(image.convert("RGB"), dtype=np.uint8).copy()


def load_mask_file(path: os.PathLike) -> np.ndarray:
    """Read a palette or grayscale mask as an HxW array of class ids."""
    with Image.open(path) as image:
        if image.mode not in ("P", "L", "I;16", "I"):
            raise DatasetError(f"{path}: mask must be a single-channel image, got mode {image.mode}")
        return np.asarray(image).astype(np.int64)


def _palette() -> List[int]:
    # Fixed pseudo-random palette so masks are viewable; index 0 stays black.
    rng = np.random.default_rng(103)
    colors = rng.integers(40, 256, size=(256, 3))
    colors[0] = 0
    return colors.astype(np.uint8).ravel().tolist()


_PALETTE = _palette()


def save_rgb(pixels: np.ndarray, path: os.PathLike) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.ascontiguousarray(pixels, dtype=np.uint8)).save(path, format="PNG")


def save_mask(mask: np.ndarray, path: os.PathLike) -> None:
    if mask.min(initial=0) < 0 or mask.max(initial=0) > 255:
        raise InvalidInputError(f"{path}: class ids must fit in 0..255 for a palette mask")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    image = Image.fromarray(np.ascontiguousarray(mask, dtype=np.uint8))
    image.putpalette(_PALETTE)
    image.save(path, format="PNG")


def _relative(path: Optional[Path], base: Path) -> str:
    if path is None:
        return ""
    return os.path.relpath(Path(path).resolve(), base.resolve())


def write_manifest(records: Iterable[ImageRecord], path: os.PathLike) -> Path:
    """
    Write the manifest, sorted by split then image id so reruns are byte-identical.

    Args:
        records: Records whose image files are already on disk
        path: Manifest file to write

    Returns:
        The manifest path
    """
    path = Path(path)
    base = path.parent
    base.mkdir(parents=True, exist_ok=True)
    rows = []
    for record in records:
        if record.image_path is None:
            raise DatasetError(f"{record.image_id}: cannot write a manifest row without an image file")
        rows.append({
            "image_id": record.image_id,
            "image_path": _relative(record.image_path, base),
            "mask_path": _relative(record.mask_path, base),
            "split": record.split,
            "label": str(record.label),
            "positive_pixel_count": int(record.positive_pixel_count),
        })
    frame = pd.DataFrame(rows, columns=MANIFEST_COLUMNS)
    if not frame.empty:
        frame = frame.sort_values(["split", "image_id"], kind="mergesort")
    frame.to_csv(path, sep="\t", index=False, lineterminator="\n")
    logger.info("Wrote manifest with %d records to %s", len(frame), path)
    return path


def read_manifest(path: os.PathLike, split: Optional[str] = None) -> List[ImageRecord]:
    """
    Read a manifest back into lazily loaded records.

    Args:
        path: Manifest file
        split: Optional split filter ("train" or "test")

    Returns:
        Records in manifest order
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"manifest not found: {path}")
    frame = pd.read_csv(path, sep="\t", dtype=str, keep_default_na=False)
    missing = [c for c in MANIFEST_COLUMNS if c not in frame.columns]
    if missing:
        raise DatasetError(f"{path}: manifest lacks columns {missing}")
    if frame["image_id"].duplicated().any():
        dupes = sorted(frame.loc[frame["image_id"].duplicated(), "image_id"].unique())
        raise DatasetError(f"{path}: duplicate image ids {dupes[:10]}")
    base = path.parent
    records = []
    for row in frame.itertuples(index=False):
        if split is not None and row.split != split:
            continue
        records.append(ImageRecord(
            image_id=row.image_id,
            label=Label.parse(row.label),
            positive_pixel_count=int(row.positive_pixel_count),
            split=row.split,
            image_path=base / row.image_path,
            mask_path=(base / row.mask_path) if row.mask_path else None,
        ))
    return records


def write_dataset(records: Iterable[ImageRecord], directory: os.PathLike) -> List[ImageRecord]:
    """Write in-memory records as image and mask files plus a manifest."""
    directory = Path(directory)
    written = []
    for record in records:
        image_path = directory / "images" / f"{record.image_id}.png"
        save_rgb(record.load_pixels(), image_path)
        mask_path = None
        mask = record.load_mask()
        if mask is not None:
            mask_path = directory / "masks" / f"{record.image_id}.png"
            save_mask(mask, mask_path)
        written.append(replace(record, image_path=image_path, mask_path=mask_path))
    write_manifest(written, directory / "manifest.tsv")
    return written


def summarize(records: Iterable[ImageRecord]) -> Dict[str, Dict[str, int]]:
    """
    Count positives and negatives per split.

    Returns:
        {"train": {"positive": n, "negative": m}, ...}
    """
    counts: Counter = Counter((r.split, str(r.label)) for r in records)
    summary: Dict[str, Dict[str, int]] = {}
    for split_name in SPLITS:
        pos = counts.get((split_name, "positive"), 0)
        neg = counts.get((split_name, "negative"), 0)
        if pos or neg:
            summary[split_name] = {"positive": pos, "negative": neg}
    return summary


def format_summary(summary: Dict[str, Dict[str, int]]) -> str:
    lines = []
    for split_name, counts in summary.items():
        lines.append(f"{split_name}: {counts['positive']} positive / {counts['negative']} negative")
    return "\n".join(lines) if lines else "no records"


def split_records(records: Iterable[ImageRecord]) -> Tuple[List[ImageRecord], List[ImageRecord]]:
    train, test = [], []
    for record in records:
        (train if record.split == "train" else test).append(record)
    return train, test
