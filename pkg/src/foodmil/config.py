"""
Run configuration

A run is described by one YAML file with `dataset`, `train` and `inference`
sections. Defaults reproduce the reference FoodSeg103 protocol, so an empty
file plus a meta-class name is a complete experiment.
"""

import dataclasses
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Union

import yaml

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

BACKBONE_KINDS = ("resnet34-pretrained", "small-cnn")
HEATMAP_POLICIES = ("positive-labels", "positive-predictions", "both", "all")

# 20,000 positive pixels on a 512x512 image, about 7.6% of the area.
REFERENCE_SIZE = 512
REFERENCE_PIXEL_THRESHOLD = 20_000


@dataclass
class DatasetConfig:
    target_size: int = REFERENCE_SIZE
    pixel_threshold: int = REFERENCE_PIXEL_THRESHOLD
    meta_class: str = "Bakery"
    meta_class_file: Optional[str] = None
    oversample_positives: bool = True
    raw_root: Optional[str] = None
    prepared_dir: str = "prepared"
    manifest: str = "prepared/manifest.tsv"
    synthetic_images: int = 400
    test_fraction: float = 0.3

    def problems(self) -> List[str]:
        found = []
        if self.target_size < 1:
            found.append("dataset.target_size must be >= 1")
        if self.pixel_threshold < 1:
            found.append("dataset.pixel_threshold must be >= 1")
        elif self.target_size >= 1 and self.pixel_threshold > self.target_size ** 2:
            found.append("dataset.pixel_threshold exceeds the image area")
        if not self.meta_class:
            found.append("dataset.meta_class must be set")
        if self.synthetic_images < 2:
            found.append("dataset.synthetic_images must be >= 2")
        if not 0.0 < self.test_fraction < 1.0:
            found.append("dataset.test_fraction must lie in (0, 1)")
        return found

    @property
    def coverage_fraction(self) -> float:
        return self.pixel_threshold / float(self.target_size ** 2)


@dataclass
class TrainConfig:
    total_epochs: int = 130
    frozen_epochs: int = 50
    K: int = 50
    d: int = 64
    t: float = 0.75
    batch_size: int = 16
    head_lr: float = 1e-4
    backbone_lr: float = 1e-5
    oversample: bool = True
    backbone: str = "resnet34-pretrained"
    embedding_dim: int = 128
    attention_dim: int = 128
    checkpoint_every: int = 10
    val_fraction: float = 0.0
    seed: int = 0
    workers: int = 0

    def problems(self) -> List[str]:
        found = []
        if self.total_epochs < 0:
            found.append("train.total_epochs must be >= 0")
        if not 0 <= self.frozen_epochs <= max(self.total_epochs, 0):
            found.append("train.frozen_epochs must lie in [0, total_epochs]")
        if self.K < 1:
            found.append("train.K must be >= 1")
        if self.d < 1:
            found.append("train.d must be >= 1")
        if not 0.0 <= self.t < 1.0:
            found.append("train.t must lie in [0, 1)")
        if self.batch_size < 1:
            found.append("train.batch_size must be >= 1")
        if self.head_lr <= 0 or self.backbone_lr <= 0:
            found.append("train learning rates must be > 0")
        if self.backbone not in BACKBONE_KINDS:
            found.append(f"train.backbone must be one of {', '.join(BACKBONE_KINDS)}")
        if self.embedding_dim < 1 or self.attention_dim < 1:
            found.append("train.embedding_dim and train.attention_dim must be >= 1")
        if self.checkpoint_every < 1:
            found.append("train.checkpoint_every must be >= 1")
        if not 0.0 <= self.val_fraction < 1.0:
            found.append("train.val_fraction must lie in [0, 1)")
        if self.workers < 0:
            found.append("train.workers must be >= 0")
        return found


@dataclass
class InferenceConfig:
    overlap: float = 0.875
    seg_threshold: float = 0.3
    classification_threshold: float = 0.5
    chunk_size: int = 256
    heatmaps_for: str = "both"

    def problems(self) -> List[str]:
        found = []
        if not 0.0 <= self.overlap < 1.0:
            found.append("inference.overlap must lie in [0, 1)")
        if not 0.0 <= self.seg_threshold <= 1.0:
            found.append("inference.seg_threshold must lie in [0, 1]")
        if not 0.0 < self.classification_threshold < 1.0:
            found.append("inference.classification_threshold must lie in (0, 1)")
        if self.chunk_size < 1:
            found.append("inference.chunk_size must be >= 1")
        if self.heatmaps_for not in HEATMAP_POLICIES:
            found.append(f"inference.heatmaps_for must be one of {', '.join(HEATMAP_POLICIES)}")
        return found


@dataclass
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    output_dir: str = "runs/default"
    seed: int = 0
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)

    def validate(self, required_paths: Iterable[str] = ()) -> "RunConfig":
        """
        Check every section and the paths a command depends on.

        Args:
            required_paths: Dotted names of path fields that must exist on disk,
                e.g. "dataset.raw_root" or "dataset.manifest"

        Returns:
            self, so calls can be chained

        Raises:
            ConfigError: listing every problem found
        """
        found = self.dataset.problems() + self.train.problems() + self.inference.problems()
        if self.train.d > self.dataset.target_size:
            found.append("train.d must not exceed dataset.target_size")
        if self.workers < 0:
            found.append("workers must be >= 0")
        for dotted in required_paths:
            value = _get_dotted(self, dotted)
            if value is None:
                found.append(f"{dotted} must be set")
            elif not Path(value).exists():
                found.append(f"{dotted} does not exist: {value}")
        if found:
            raise ConfigError(found)
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Plain mapping that `config_from_dict` accepts back; train seed and workers live at the top."""
        raw = dataclasses.asdict(self)
        for key in _TOP_LEVEL_ONLY["train"]:
            raw["train"].pop(key)
        return raw

    def run_path(self, *parts: str) -> Path:
        return Path(self.output_dir).joinpath(*parts)


_SECTIONS = {"dataset": DatasetConfig, "train": TrainConfig, "inference": InferenceConfig}

# Keys owned by the top level and copied into the train section.
_TOP_LEVEL_ONLY = {"train": ("seed", "workers")}

_TYPE_NAMES = {int: "an integer", float: "a number", bool: "true or false", str: "a string"}


def _coerce(value: Any, kind: Any, dotted: str, problems: List[str]) -> Any:
    """Check one YAML value against a field type; numeric strings such as 1e-4 become floats."""
    optional = getattr(kind, "__origin__", None) is Union
    if optional:
        if value is None:
            return None
        kind = next(arg for arg in kind.__args__ if arg is not type(None))
    if kind is float:
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
        elif isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif kind is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif isinstance(value, kind):
        return value
    problems.append(f"{dotted} must be {_TYPE_NAMES.get(kind, kind.__name__)}")
    return None


def _build_section(cls, values: Mapping[str, Any], name: str, problems: List[str]):
    fields = {f.name: f.type for f in dataclasses.fields(cls)}
    for key in sorted(set(values) - set(fields)):
        problems.append(f"unknown key {name}.{key}")
    for key in _TOP_LEVEL_ONLY.get(name, ()):
        if key in values:
            problems.append(f"{name}.{key} is taken from the top-level {key}; set {key} instead")
    kwargs = {}
    before = len(problems)
    for key, value in values.items():
        if key in fields and key not in _TOP_LEVEL_ONLY.get(name, ()):
            kwargs[key] = _coerce(value, fields[key], f"{name}.{key}", problems)
    if len(problems) > before:
        return None
    return cls(**kwargs)


def config_from_dict(raw: Optional[Mapping[str, Any]]) -> RunConfig:
    """Build a RunConfig from a parsed YAML mapping, rejecting unknown or mistyped keys."""
    raw = dict(raw or {})
    problems: List[str] = []
    kwargs: Dict[str, Any] = {}
    for name, cls in _SECTIONS.items():
        section = raw.pop(name, None) or {}
        if not isinstance(section, Mapping):
            problems.append(f"section {name} must be a mapping")
            continue
        kwargs[name] = _build_section(cls, section, name, problems)
    top_level = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    for key in ("output_dir", "seed", "workers"):
        if key in raw:
            kwargs[key] = _coerce(raw.pop(key), top_level[key], key, problems)
    for key in sorted(raw):
        problems.append(f"unknown key {key}")
    if problems:
        raise ConfigError(problems)
    config = RunConfig(**kwargs)
    config.train.seed = config.seed
    config.train.workers = config.workers
    return config


def load_config(path: Optional[os.PathLike] = None) -> RunConfig:
    """
    Load a run configuration from YAML.

    Args:
        path: YAML file; None gives the built-in defaults

    Returns:
        Parsed, not yet validated, RunConfig
    """
    if path is None:
        return RunConfig()
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = yaml.safe_load(handle)
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
    except yaml.YAMLError as exc:
        raise ConfigError([f"config {path} is not valid YAML: {exc}"]) from exc
    logger.debug("Loaded config from %s", path)
    return config_from_dict(raw)


def apply_overrides(config: RunConfig, overrides: Mapping[str, Any]) -> RunConfig:
    """
    Apply dotted-key overrides such as {"train.total_epochs": 5}; None values are skipped.

    The top-level seed and workers also propagate into the train section so a
    single --seed flag controls every random stream.
    """
    for dotted, value in overrides.items():
        if value is None:
            continue
        _set_dotted(config, dotted, value)
    config.train.seed = config.seed
    config.train.workers = config.workers
    return config


def _get_dotted(obj: Any, dotted: str) -> Any:
    for part in dotted.split("."):
        obj = getattr(obj, part)
    return obj


def _set_dotted(obj: Any, dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    for part in parts[:-1]:
        obj = getattr(obj, part)
    if not hasattr(obj, parts[-1]):
        raise ConfigError([f"unknown key {dotted}"])
    setattr(obj, parts[-1], value)


def save_config(config: RunConfig, path: os.PathLike) -> None:
    """Write the effective configuration next to run outputs."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(config.to_dict(), handle, sort_keys=False)
