"""
Epoch plans

An epoch plan fixes, before any compute, which images are visited in which
order and with which bag seed. Seeds hash (seed, epoch, image id), so every
epoch draws fresh patches yet any epoch can be replayed exactly, including
after a resume.
"""

import hashlib
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np

from ..config import TrainConfig
from ..dataset.records import ImageRecord
from ..exceptions import InvalidInputError

_SEED_MASK = (1 << 63) - 1


@dataclass(frozen=True)
class PlanEntry:
    image_id: str
    bag_seed: int
    label: int


def stable_hash(*parts) -> int:
    """Process-independent 63-bit hash of the given parts."""
    text = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "little") & _SEED_MASK


def bag_seed(seed: int, epoch: int, image_id: str, repeat: int = 0) -> int:
    """Seed of one bag; oversampled copies of an image get distinct repeats."""
    if repeat:
        return stable_hash(seed, epoch, image_id, repeat)
    return stable_hash(seed, epoch, image_id)


def make_epoch_plan(records: Sequence[ImageRecord], config: TrainConfig, epoch: int) -> List[PlanEntry]:
    """
    Order and bag seeds for one epoch.

    With oversampling on, every image appears once and the minority class
    (positives in practice) is topped up by draws with replacement until both
    classes have the same count. The result is shuffled deterministically.

    Args:
        records: Training records, both classes present
        config: Seed and oversampling switch
        epoch: Zero-based epoch index

    Returns:
        Plan entries in visiting order
    """
    if not records:
        raise InvalidInputError("cannot plan an epoch without records")
    ordered = sorted(records, key=lambda r: r.image_id)
    positives = [r for r in ordered if r.is_positive]
    negatives = [r for r in ordered if not r.is_positive]
    if not positives or not negatives:
        raise InvalidInputError("training needs both positive and negative images")

    rng = np.random.default_rng(stable_hash(config.seed, epoch, "plan"))
    chosen = [(r, 0) for r in ordered]
    if config.oversample and len(positives) != len(negatives):
        minority = positives if len(positives) < len(negatives) else negatives
        extra = abs(len(positives) - len(negatives))
        repeats: Counter = Counter()
        for index in rng.choice(len(minority), size=extra, replace=True):
            record = minority[int(index)]
            repeats[record.image_id] += 1
            chosen.append((record, repeats[record.image_id]))

    order = rng.permutation(len(chosen))
    return [
        PlanEntry(chosen[i][0].image_id, bag_seed(config.seed, epoch, chosen[i][0].image_id, chosen[i][1]),
                  int(chosen[i][0].label))
        for i in order
    ]


def plan_counts(plan: Iterable[PlanEntry]) -> Counter:
    """How often each image id occurs in a plan."""
    return Counter(entry.image_id for entry in plan)
