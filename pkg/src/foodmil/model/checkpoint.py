"""
Checkpoints

One torch archive per checkpoint holding the model description, parameters,
optimizer state, epoch, history and the torch RNG state. Writes go to a
temporary file that is renamed into place, so a crash never leaves a torn file.
"""

import hashlib
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import torch

from ..exceptions import ExportError, FoodMILError
from .attention_mil import AttentionMIL

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def backbone_checksum(model: AttentionMIL) -> str:
    """SHA-256 over the backbone parameter bytes, in parameter-name order."""
    digest = hashlib.sha256()
    for name, parameter in sorted(model.backbone.named_parameters()):
        digest.update(name.encode("utf-8"))
        digest.update(parameter.detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()


def save_checkpoint(path: os.PathLike, model: AttentionMIL, epoch: int,
                    optimizer: Optional[torch.optim.Optimizer] = None,
                    history: Optional[List[Dict[str, Any]]] = None,
                    config: Optional[Dict[str, Any]] = None) -> Path:
    """
    Atomically write a checkpoint.

    Args:
        path: Destination file
        model: Model to save
        epoch: Number of completed epochs
        optimizer: Optimizer whose state should be resumable
        history: Per-epoch history rows
        config: Run configuration, stored for provenance

    Returns:
        The checkpoint path
    """
    path = Path(path)
    payload = {
        "format_version": FORMAT_VERSION,
        "model": model.describe(),
        "state_dict": {k: v.detach().cpu() for k, v in model.state_dict().items()},
        "epoch": int(epoch),
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
        "history": list(history or []),
        "config": config or {},
        "torch_rng": torch.get_rng_state(),
    }
    tmp = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        torch.save(payload, tmp)
        os.replace(tmp, path)
    except OSError as exc:
        raise ExportError(path, exc) from exc
    logger.debug("Saved checkpoint for epoch %d to %s", epoch, path)
    return path


def read_checkpoint(path: os.PathLike) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FoodMILError(f"checkpoint not found: {path}")
    payload = torch.load(path, map_location="cpu", weights_only=True)
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise FoodMILError(f"{path}: unsupported checkpoint format {version!r}")
    return payload


def load_checkpoint(path: os.PathLike) -> Tuple[AttentionMIL, Dict[str, Any]]:
    """
    Rebuild the model stored in a checkpoint.

    Returns:
        (model in eval mode, full payload)
    """
    payload = read_checkpoint(path)
    model = AttentionMIL.from_description(payload["model"], load_weights=False)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    logger.info("Loaded %s model from %s (epoch %d)", payload["model"]["backbone"], path, payload["epoch"])
    return model, payload
