"""
FoodMIL Core - the pipeline behind every command

FoodMILCore ties dataset preparation, training, segmentation and evaluation
together around one validated RunConfig. Every command checks the whole
configuration before it touches the disk.
"""

import logging
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from tqdm import tqdm

from .config import RunConfig, save_config
from .dataset.foodseg_ingester import ingest_foodseg103
from .dataset.meta_classes import MetaClassMap, load_meta_class
from .dataset.preprocessing import filter_records
from .dataset.records import ImageRecord, read_manifest, summarize, write_dataset, write_manifest
from .dataset.synthetic_plates import TARGET_META_CLASS, generate_synthetic
from .exceptions import InvalidInputError, UnknownImageError
from .inference.export import export_outputs, export_panel
from .inference.predictor import Predictor
from .metrics.evaluation import MetricsReport, evaluate_testset, ground_truth_mask
from .metrics.reference_results import REFERENCE_RESULTS
from .metrics.report import write_report
from .model.checkpoint import load_checkpoint
from .training.mil_trainer import FINAL_CHECKPOINT, MILTrainer, TrainState

logger = logging.getLogger(__name__)


class FoodMILCore:
    """
    Weakly supervised detector and segmenter for one food meta-class.

    Outputs land under `config.output_dir`: `train/` for history and
    checkpoints, `segment/` for per-image files and `eval/` for reports.
    """

    def __init__(self, config: RunConfig, load_weights: bool = True):
        """
        Args:
            config: Run configuration; command-line overrides already applied
            load_weights: Fetch pretrained backbone weights for new models
        """
        self.config = config
        self.load_weights = load_weights
        self.manifest_path = Path(config.dataset.manifest)

    # -- helpers -----------------------------------------------------------

    def meta_class(self) -> MetaClassMap:
        name = self.config.dataset.meta_class
        if name.lower() == TARGET_META_CLASS.name.lower():
            return TARGET_META_CLASS
        return load_meta_class(name, self.config.dataset.meta_class_file)

    def default_checkpoint(self) -> Path:
        return self.config.run_path("train", FINAL_CHECKPOINT)

    def records(self, split: Optional[str] = None) -> List[ImageRecord]:
        return read_manifest(self.manifest_path, split=split)

    # -- commands ----------------------------------------------------------

    def prepare(self) -> List[ImageRecord]:
        """Resize, label and filter the raw FoodSeg103 tree into a manifest."""
        self.config.validate(required_paths=["dataset.raw_root"])
        meta = self.meta_class()
        records = ingest_foodseg103(self.config.dataset.raw_root, meta, self.config.dataset,
                                    workers=self.config.workers, manifest_path=self.manifest_path)
        logger.info("Prepared %s: %s", meta.name, summarize(records))
        return records

    def synth(self) -> List[ImageRecord]:
        """Generate the synthetic plate corpus and write it like a prepared dataset."""
        self.config.validate()
        dataset = self.config.dataset
        records = generate_synthetic(self.config.seed, dataset.synthetic_images, dataset.target_size,
                                     pixel_threshold=dataset.pixel_threshold,
                                     test_fraction=dataset.test_fraction)
        records = filter_records(records, dataset)
        written = write_dataset(records, dataset.prepared_dir)
        if self.manifest_path.resolve() != (Path(dataset.prepared_dir) / "manifest.tsv").resolve():
            write_manifest(written, self.manifest_path)
        logger.info("Synthetic corpus: %s", summarize(written))
        return written

    def train(self, resume: bool = False) -> TrainState:
        """Run both training phases on the train split of the manifest."""
        self.config.validate(required_paths=["dataset.manifest"])
        records = self.records(split="train")
        positives = sum(r.is_positive for r in records)
        if positives == 0 or positives == len(records):
            raise InvalidInputError(
                f"training needs both positive and negative images, the train split has "
                f"{positives} positive of {len(records)}"
            )
        out_dir = self.config.run_path("train")
        save_config(self.config, out_dir / "config.yaml")
        trainer = MILTrainer(self.config.train, out_dir, run_config=self.config.to_dict(),
                             load_weights=self.load_weights)
        return trainer.fit(records, resume=resume)

    def predictor(self, checkpoint: Optional[Path] = None, threshold: Optional[float] = None) -> Predictor:
        model, _ = load_checkpoint(checkpoint or self.default_checkpoint())
        inference = self.config.inference
        if threshold is not None:
            inference = replace(inference, seg_threshold=threshold)
        return Predictor(model, inference)

    def segment(self, image_ids: Sequence[str] = (), all_test: bool = False,
                checkpoint: Optional[Path] = None, threshold: Optional[float] = None) -> Dict[str, Dict[str, Path]]:
        """
        Write prediction, heatmap and segmentation files, plus a panel for images with a mask.

        Args:
            image_ids: Images to process
            all_test: Process the whole test split instead
            checkpoint: Model to use; the final training checkpoint by default
            threshold: Segmentation threshold overriding the configured one

        Returns:
            Written paths per image id
        """
        self.config.validate(required_paths=["dataset.manifest"])
        available = {r.image_id: r for r in self.records()}
        if all_test:
            chosen = [r for r in available.values() if r.split == "test"]
        else:
            unknown = [i for i in image_ids if i not in available]
            if unknown:
                raise UnknownImageError(unknown)
            chosen = [available[i] for i in image_ids]

        predictor = self.predictor(checkpoint, threshold)
        meta = self.meta_class()
        out_dir = self.config.run_path("segment")
        outputs = {}
        for record in chosen:
            prediction, heatmap = predictor.heatmap_for(record)
            spec = predictor.spec_for(heatmap.size)
            paths = export_outputs(prediction, heatmap, out_dir, spec)
            if record.has_mask:
                paths["panel"] = export_panel(record.load_pixels(), ground_truth_mask(record, meta), heatmap,
                                              out_dir / f"{record.image_id}.panel.png")
            outputs[record.image_id] = paths
        logger.info("Wrote outputs for %d images to %s", len(outputs), out_dir)
        return outputs

    def evaluate(self, checkpoint: Optional[Path] = None, skip_pixel: bool = False) -> MetricsReport:
        """Score the test split and write metrics.txt, metrics.json and report.md."""
        self.config.validate(required_paths=["dataset.manifest"])
        records = self.records(split="test")
        meta = self.meta_class()
        predictor = self.predictor(checkpoint)
        if skip_pixel:
            predictions = {r.image_id: predictor.predict(r) for r in tqdm(records, desc="inference", leave=False)}
            heatmaps = {}
        else:
            predictions, heatmaps = predictor.run(records, policy="positive-labels")
        report = evaluate_testset(predictions, heatmaps, records, self.config.inference.seg_threshold,
                                  meta_class=meta, skip_pixel=skip_pixel)
        reference = REFERENCE_RESULTS.get(meta.name)
        write_report(report, self.config.run_path("eval"), title=meta.name, reference=reference)
        return report
