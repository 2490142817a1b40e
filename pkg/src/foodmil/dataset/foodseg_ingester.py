"""
FoodSeg103 ingestion

Reads a local copy of FoodSeg103 laid out as

    <root>/Images/img_dir/{train,test}/<id>.jpg
    <root>/Images/ann_dir/{train,test}/<id>.png

and writes a prepared dataset: resized images and masks plus a manifest with
binary labels for one meta-class.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from tqdm import tqdm

from ..config import DatasetConfig
from ..exceptions import DatasetError, MissingMaskError
from .meta_classes import MetaClassMap
from .preprocessing import filter_records, is_weak_positive, preprocess
from .records import SPLITS, ImageRecord, load_mask_file, load_rgb, save_mask, save_rgb, write_manifest

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")


@dataclass(frozen=True)
class _Job:
    image_id: str
    split: str
    image_path: Path
    mask_path: Path
    out_dir: Path
    meta_class: MetaClassMap
    config: DatasetConfig


def _prepare_one(job: _Job) -> ImageRecord:
    pixels, mask, label, count = preprocess(
        load_rgb(job.image_path), load_mask_file(job.mask_path), job.meta_class, job.config
    )
    record = ImageRecord(image_id=job.image_id, label=label, positive_pixel_count=count, split=job.split)
    if is_weak_positive(record, job.config.pixel_threshold):
        # Discarded images are never written.
        return record
    image_out = job.out_dir / "images" / f"{job.image_id}.png"
    mask_out = job.out_dir / "masks" / f"{job.image_id}.png"
    save_rgb(pixels, image_out)
    save_mask(mask, mask_out)
    record.image_path = image_out
    record.mask_path = mask_out
    return record


class FoodSegIngester:
    """
    Prepares a FoodSeg103 copy for one meta-class.

    Every image is resized to DxD (bilinear), its mask follows with nearest
    neighbour resizing, the positive-pixel count is measured on the resized
    mask, and weak positives are discarded.
    """

    def __init__(self, root: os.PathLike, meta_class: MetaClassMap, config: DatasetConfig, workers: int = 0):
        """
        Args:
            root: FoodSeg103 directory containing `Images/`
            meta_class: Target meta-class
            config: Dataset settings (size, threshold)
            workers: Process count for per-image work; 0 runs in-process
        """
        self.root = Path(root)
        self.meta_class = meta_class
        self.config = config
        self.workers = workers

    def discover(self) -> Tuple[List[Tuple[str, str, Path, Path]], List[str]]:
        """
        Pair every image with its mask.

        Returns:
            (pairs of (image_id, split, image_path, mask_path), missing mask paths)
        """
        pairs = []
        missing = []
        for split in SPLITS:
            image_dir = self.root / "Images" / "img_dir" / split
            mask_dir = self.root / "Images" / "ann_dir" / split
            if not image_dir.is_dir():
                continue
            for image_path in sorted(image_dir.iterdir()):
                if image_path.suffix.lower() not in IMAGE_SUFFIXES:
                    continue
                mask_path = mask_dir / f"{image_path.stem}.png"
                if not mask_path.exists():
                    missing.append(str(mask_path))
                    continue
                pairs.append((f"{split}-{image_path.stem}", split, image_path, mask_path))
        return pairs, missing

    def ingest(self, out_dir: os.PathLike, manifest_path: Optional[os.PathLike] = None) -> List[ImageRecord]:
        """
        Prepare the dataset and write its manifest.

        Args:
            out_dir: Directory for resized images and masks
            manifest_path: Manifest file; `<out_dir>/manifest.tsv` by default

        Returns:
            Retained records, in manifest order
        """
        pairs, missing = self.discover()
        if missing:
            raise MissingMaskError(missing)
        if not pairs:
            raise DatasetError(f"no images found under {self.root / 'Images' / 'img_dir'}")

        out_dir = Path(out_dir)
        jobs = [
            _Job(image_id, split, image_path, mask_path, out_dir, self.meta_class, self.config)
            for image_id, split, image_path, mask_path in pairs
        ]
        logger.info("Preparing %d images for meta-class %s at %dx%d",
                    len(jobs), self.meta_class.name, self.config.target_size, self.config.target_size)
        records = self._run(jobs)
        retained = filter_records(records, self.config)
        write_manifest(retained, manifest_path or out_dir / "manifest.tsv")
        return retained

    def _run(self, jobs: Sequence[_Job]) -> List[ImageRecord]:
        progress = dict(total=len(jobs), desc="prepare", unit="img")
        if self.workers <= 0:
            return [_prepare_one(job) for job in tqdm(jobs, **progress)]
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            return list(tqdm(pool.map(_prepare_one, jobs, chunksize=8), **progress))


def ingest_foodseg103(root: os.PathLike, meta_class: MetaClassMap, config: DatasetConfig,
                      workers: int = 0, manifest_path: Optional[os.PathLike] = None) -> List[ImageRecord]:
    """Prepare FoodSeg103 into `config.prepared_dir` and write its manifest."""
    ingester = FoodSegIngester(root, meta_class, config, workers=workers)
    return ingester.ingest(config.prepared_dir, manifest_path)
