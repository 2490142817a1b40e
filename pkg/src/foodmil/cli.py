"""
Command line interface

    python -m foodmil synth   --config configs/synthetic.yaml
    python -m foodmil train   --config configs/synthetic.yaml --epochs 5
    python -m foodmil eval    --config configs/synthetic.yaml
    python -m foodmil segment --config configs/synthetic.yaml --all-test

Flags override values from the config file. Exit codes: 0 on success, 1 for
invalid configuration or input, 2 for failures while running.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from . import __version__
from .config import RunConfig, apply_overrides, load_config
from .dataset.records import format_summary, summarize
from .exceptions import ConfigError, DatasetError, FoodMILError, InvalidInputError
from .foodmil_core import FoodMILCore
from .metrics.reference_results import REFERENCE_RESULTS
from .metrics.report import render_report

logger = logging.getLogger("foodmil")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2

_DEFAULTS = RunConfig()


def _shared_flags() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="YAML run configuration (defaults: the FoodSeg103 Bakery protocol)")
    shared.add_argument("--seed", type=int, help="seed for every random stream (default 0)")
    shared.add_argument("--workers", type=int,
                        help="parallel workers for per-image work (default: number of processors)")
    shared.add_argument("--output-dir", help=f"run directory (default {_DEFAULTS.output_dir})")
    shared.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    return shared


def build_parser() -> argparse.ArgumentParser:
    shared = _shared_flags()
    train_defaults = _DEFAULTS.train
    inference_defaults = _DEFAULTS.inference
    parser = argparse.ArgumentParser(
        prog="foodmil",
        description="Weakly supervised food detection and segmentation with attention MIL.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser(
        "prepare", parents=[shared],
        help="resize FoodSeg103, binarize labels and write the manifest",
        description=f"Resize images to {_DEFAULTS.dataset.target_size}x{_DEFAULTS.dataset.target_size}, "
                    f"label an image positive when it has at least {_DEFAULTS.dataset.pixel_threshold} "
                    "meta-class pixels and drop weaker positives.",
    )
    commands.add_parser(
        "synth", parents=[shared],
        help="generate the synthetic plate dataset",
        description=f"Write {_DEFAULTS.dataset.synthetic_images} synthetic images with a "
                    f"{1 - _DEFAULTS.dataset.test_fraction:.0%}/{_DEFAULTS.dataset.test_fraction:.0%} train/test split.",
    )

    train = commands.add_parser(
        "train", parents=[shared], help="train the attention MIL model",
        description=f"Defaults follow the reference protocol: {train_defaults.total_epochs} epochs, the first "
                    f"{train_defaults.frozen_epochs} with a frozen backbone, bags of K={train_defaults.K} "
                    f"patches of {train_defaults.d}px at overlap t={train_defaults.t}.",
    )
    train.add_argument("--epochs", type=int, help=f"total epochs (default {train_defaults.total_epochs})")
    train.add_argument("--frozen-epochs", type=int,
                       help=f"epochs with a frozen backbone (default {train_defaults.frozen_epochs})")
    train.add_argument("--backbone", choices=["resnet34-pretrained", "small-cnn"],
                       help=f"patch feature extractor (default {train_defaults.backbone})")
    train.add_argument("--resume", action="store_true", help="continue from the last checkpoint")

    segment = commands.add_parser(
        "segment", parents=[shared], help="write heatmaps and segmentations",
        description=f"Dense bags at overlap t'={inference_defaults.overlap}, segmentation threshold "
                    f"a={inference_defaults.seg_threshold}.",
    )
    segment.add_argument("image_ids", nargs="*", help="image ids from the manifest")
    segment.add_argument("--all-test", action="store_true", help="process the whole test split")
    segment.add_argument("--threshold", type=float,
                         help=f"segmentation threshold a (default {inference_defaults.seg_threshold})")
    segment.add_argument("--checkpoint", help="model checkpoint (default <output-dir>/train/final.pt)")

    evaluate = commands.add_parser(
        "eval", parents=[shared], help="score the test split",
        description=f"Classification at p >= {inference_defaults.classification_threshold}; IoU at "
                    f"a={inference_defaults.seg_threshold} and pixel AP on ground-truth positive images.",
    )
    evaluate.add_argument("--skip-pixel", action="store_true", help="classification metrics only")
    evaluate.add_argument("--checkpoint", help="model checkpoint (default <output-dir>/train/final.pt)")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "seed": args.seed,
        "workers": args.workers,
        "output_dir": args.output_dir,
        "train.total_epochs": getattr(args, "epochs", None),
        "train.frozen_epochs": getattr(args, "frozen_epochs", None),
        "train.backbone": getattr(args, "backbone", None),
        "inference.seg_threshold": getattr(args, "threshold", None),
    }


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )


def run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    schedule = (config.train.total_epochs, config.train.frozen_epochs)
    config = apply_overrides(config, _overrides(args))
    if args.command == "train" and args.epochs is not None and args.frozen_epochs is None:
        # keep the frozen share of the schedule when only the length changes
        total, frozen = schedule
        config.train.frozen_epochs = int(round(args.epochs * frozen / total)) if total else 0
    core = FoodMILCore(config)

    if args.command == "prepare":
        print(format_summary(summarize(core.prepare())))
    elif args.command == "synth":
        print(format_summary(summarize(core.synth())))
    elif args.command == "train":
        state = core.train(resume=args.resume)
        if state.history:
            print(f"epoch {state.epoch}: loss {state.history[-1]['loss']:.4f}")
    elif args.command == "segment":
        if not args.image_ids and not args.all_test:
            raise InvalidInputError("give image ids or --all-test")
        outputs = core.segment(args.image_ids, all_test=args.all_test, checkpoint=args.checkpoint)
        print(f"wrote outputs for {len(outputs)} images to {config.run_path('segment')}")
    elif args.command == "eval":
        report = core.evaluate(checkpoint=args.checkpoint, skip_pixel=args.skip_pixel)
        meta = core.meta_class()
        print(render_report(report, meta.name, REFERENCE_RESULTS.get(meta.name)))
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return run(args)
    except (ConfigError, InvalidInputError, DatasetError) as exc:
        logger.error("%s", exc)
        return EXIT_INVALID
    except (FoodMILError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
