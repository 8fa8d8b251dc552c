"""Weight checkpoints: a versioned file carrying the architecture spec,
its hash, the state dict, and the measure ranges predictions map to."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import pickle

import numpy as np
import torch

from .model import Surrogate, SurrogateSpec, build_model

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Unreadable or inconsistent checkpoint file."""


def spec_hash(spec: SurrogateSpec) -> str:
    canon = json.dumps(dataclasses.asdict(spec), sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def save_checkpoint(path, model: Surrogate, measure_ranges,
                    curves: dict = None) -> str:
    payload = {
        "format_version": FORMAT_VERSION,
        "spec": dataclasses.asdict(model.spec),
        "spec_hash": spec_hash(model.spec),
        "state": model.state_dict(),
        "measure_ranges": np.asarray(measure_ranges, dtype=float).tolist(),
        "loss_curves": curves or {},
    }
    torch.save(payload, path)
    return str(path)


def load_checkpoint(path):
    """(model, measure_ranges) from a checkpoint; model is in eval mode."""
    try:
        payload = torch.load(path)
    except (OSError, RuntimeError, ValueError, EOFError,
            pickle.UnpicklingError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or \
            payload.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format in {path}")
    try:
        spec = SurrogateSpec(**payload["spec"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"bad architecture spec in {path}") from exc
    if payload.get("spec_hash") != spec_hash(spec):
        raise CheckpointError(f"spec hash mismatch in {path}")
    model = build_model(spec)
    try:
        model.load_state_dict(payload["state"])
    except (KeyError, RuntimeError) as exc:
        raise CheckpointError(f"weights do not fit spec in {path}") from exc
    model.eval()
    ranges = np.asarray(payload.get("measure_ranges"), dtype=np.float32)
    if ranges.shape != (2, 2):
        raise CheckpointError(f"bad measure ranges in {path}")
    return model, ranges
