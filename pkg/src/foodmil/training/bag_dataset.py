"""Torch dataset that turns an epoch plan into bags, so loader workers can crop in parallel."""

from typing import Dict, Sequence, Tuple

import torch
from torch.utils.data import Dataset

from ..dataset.records import ImageRecord
from ..exceptions import UnknownImageError
from ..model.attention_mil import patches_to_tensor
from ..patchbag.bag_sampler import sample_bag
from ..patchbag.grid import GridSpec
from .epoch_plan import PlanEntry


class BagDataset(Dataset):
    """
    Item i is the bag of plan entry i as a (K, 3, d, d) tensor and its label.
    """

    def __init__(self, records: Sequence[ImageRecord], plan: Sequence[PlanEntry], spec: GridSpec, K: int):
        self.records: Dict[str, ImageRecord] = {r.image_id: r for r in records}
        unknown = {e.image_id for e in plan} - set(self.records)
        if unknown:
            raise UnknownImageError(unknown)
        self.plan = list(plan)
        self.spec = spec
        self.K = K

    def __len__(self) -> int:
        return len(self.plan)

    def __getitem__(self, index: int) -> Tuple[torch.Tensor, torch.Tensor]:
        entry = self.plan[index]
        bag = sample_bag(self.records[entry.image_id], self.spec, self.K, entry.bag_seed)
        return patches_to_tensor(bag.patches), torch.tensor(float(entry.label))
