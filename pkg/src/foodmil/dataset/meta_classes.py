"""
Meta-classes

A meta-class merges several fine-grained dataset classes into one broader
target, e.g. "Bakery" = bread + cake + biscuit + egg tart.
"""

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Mapping, Optional

import yaml

from ..exceptions import InvalidInputError

BUNDLED_MAPPING = Path(__file__).with_name("meta_classes.yaml")


@dataclass(frozen=True)
class MetaClassMap:
    name: str
    member_class_ids: FrozenSet[int]
    member_names: Mapping[str, int] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.member_class_ids:
            raise InvalidInputError(f"meta-class {self.name!r} has no members")
        if 0 in self.member_class_ids:
            raise InvalidInputError(f"meta-class {self.name!r}: background id 0 cannot be a member")
        if any(int(c) < 0 for c in self.member_class_ids):
            raise InvalidInputError(f"meta-class {self.name!r}: class ids must be non-negative")

    @classmethod
    def from_ids(cls, name: str, ids: Iterable[int]) -> "MetaClassMap":
        ids = [int(i) for i in ids]
        if len(set(ids)) != len(ids):
            raise InvalidInputError(f"meta-class {name!r} lists duplicate class ids")
        return cls(name=name, member_class_ids=frozenset(ids))


def _load_mapping(path: os.PathLike) -> Dict[str, Dict[str, int]]:
    with open(path, "r", encoding="utf-8") as handle:
        data = yaml.safe_load(handle) or {}
    if not isinstance(data, dict):
        raise InvalidInputError(f"{path}: expected a mapping of meta-class names")
    return data


def available_meta_classes(mapping_path: Optional[os.PathLike] = None):
    return sorted(_load_mapping(mapping_path or BUNDLED_MAPPING))


def load_meta_class(name: str, mapping_path: Optional[os.PathLike] = None) -> MetaClassMap:
    """
    Load a meta-class by name.

    Args:
        name: Meta-class name, case-insensitive ("Bakery", "meat")
        mapping_path: YAML file of {meta-class: {class name: id}}; the bundled
            FoodSeg103 mapping when omitted

    Returns:
        The MetaClassMap
    """
    mapping = _load_mapping(mapping_path or BUNDLED_MAPPING)
    by_lower = {key.lower(): key for key in mapping}
    key = by_lower.get(name.lower())
    if key is None:
        raise InvalidInputError(f"unknown meta-class {name!r}; known: {', '.join(sorted(mapping))}")
    members = mapping[key]
    if isinstance(members, Mapping):
        names = {str(k): int(v) for k, v in members.items()}
        ids = list(names.values())
    else:
        names = {}
        ids = [int(v) for v in members]
    if len(set(ids)) != len(ids):
        raise InvalidInputError(f"meta-class {key!r} lists duplicate class ids")
    return MetaClassMap(name=key, member_class_ids=frozenset(ids), member_names=names)
