"""Dataset ingestion, labelling and synthetic generation."""

from .foodseg_ingester import FoodSegIngester, ingest_foodseg103
from .meta_classes import MetaClassMap, available_meta_classes, load_meta_class
from .preprocessing import (
    binarize_label,
    filter_records,
    resize_image,
    resize_mask,
    scaled_pixel_threshold,
)
from .records import ImageRecord, Label, read_manifest, summarize, write_dataset, write_manifest
from .synthetic_plates import TARGET_META_CLASS, generate_synthetic

__all__ = [
    "FoodSegIngester",
    "ImageRecord",
    "Label",
    "MetaClassMap",
    "TARGET_META_CLASS",
    "available_meta_classes",
    "binarize_label",
    "filter_records",
    "generate_synthetic",
    "ingest_foodseg103",
    "load_meta_class",
    "read_manifest",
    "resize_image",
    "resize_mask",
    "scaled_pixel_threshold",
    "summarize",
    "write_dataset",
    "write_manifest",
]
