"""Versioned batch exchange: JSON payloads in, JSON payloads out.

A request carries ``version``, ``mode`` ("predict" or "train"), the grid
dims, and either one-hot layout tensors (H x W x C nested lists) or
training records.  Responses answer per layout, in order, with the
declared shapes.  Measures travel in raw units; training normalizes them
internally to the supplied ranges and predictions are mapped back.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ONE_HOT_CHANNELS

PROTOCOL_VERSION = 1


class ProtocolError(ValueError):
    """Malformed or unsupported exchange payload."""


@dataclass
class TrainingSet:
    """Decoded training records as stacked arrays.

    ``unrepaired`` and ``repaired`` are N x C x H x W float32, ``usage``
    is N x (H*W) row-normalized, ``measures`` raw-unit N x 2, and
    ``measure_ranges`` the per-measure (lo, hi) used for target scaling.
    """

    unrepaired: np.ndarray
    repaired: np.ndarray
    usage: np.ndarray
    objective: np.ndarray
    measures: np.ndarray
    measure_ranges: np.ndarray = field(default=None)

    def __len__(self):
        return self.unrepaired.shape[0]


def _require(condition: bool, message: str):
    if not condition:
        raise ProtocolError(message)


def check_header(payload: dict, mode: str):
    _require(isinstance(payload, dict), "payload must be a JSON object")
    _require(payload.get("version") == PROTOCOL_VERSION,
             f"unsupported protocol version {payload.get('version')!r}")
    _require(payload.get("mode") == mode,
             f"expected mode {mode!r}, got {payload.get('mode')!r}")
    for key in ("height", "width"):
        _require(isinstance(payload.get(key), int) and payload[key] > 0,
                 f"{key} must be a positive integer")


def _grid(entry, height: int, width: int, what: str) -> np.ndarray:
    try:
        arr = np.asarray(entry, dtype=np.float32)
    except (TypeError, ValueError) as exc:
        raise ProtocolError(f"{what} is not a numeric tensor: {exc}") from exc
    _require(arr.shape == (height, width, ONE_HOT_CHANNELS),
             f"{what} has shape {arr.shape}, expected "
             f"{(height, width, ONE_HOT_CHANNELS)}")
    _require(bool(np.isfinite(arr).all()), f"{what} has non-finite values")
    return arr.transpose(2, 0, 1)  # channels-last wire form to C x H x W


def decode_predict(payload: dict) -> np.ndarray:
    """Predict request to a B x C x H x W batch."""
    check_header(payload, "predict")
    layouts = payload.get("layouts")
    _require(isinstance(layouts, list) and layouts,
             "layouts must be a nonempty array")
    h, w = payload["height"], payload["width"]
    return np.stack([_grid(entry, h, w, f"layouts[{i}]")
                     for i, entry in enumerate(layouts)])


def _usage_row(entry, n_tiles: int, what: str) -> np.ndarray:
    try:
        row = np.asarray(entry, dtype=np.float32).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise ProtocolError(f"{what} is not numeric: {exc}") from exc
    _require(row.shape == (n_tiles,),
             f"{what} has {row.shape[0]} entries, expected {n_tiles}")
    _require(bool(np.isfinite(row).all()) and row.min() >= 0,
             f"{what} must be finite and nonnegative")
    total = float(row.sum())
    _require(total > 0, f"{what} has no mass")
    return row / total

def decode_train(payload: dict) -> TrainingSet:
    """Train request to stacked arrays; fills measure ranges from the
    payload or, failing that, from the records themselves."""
    check_header(payload, "train")
    records = payload.get("records")
    _require(isinstance(records, list) and records,
             "records must be a nonempty array")
    h, w = payload["height"], payload["width"]
    unrepaired, repaired, usage, objective, measures = [], [], [], [], []
    for i, rec in enumerate(records):
        _require(isinstance(rec, dict), f"records[{i}] must be an object")
        unrepaired.append(_grid(rec.get("unrepaired"), h, w,
                                f"records[{i}].unrepaired"))
        repaired.append(_grid(rec.get("repaired"), h, w,
                              f"records[{i}].repaired"))
        usage.append(_usage_row(rec.get("tile_usage"), h * w,
                                f"records[{i}].tile_usage"))
        try:
            objective.append(float(rec.get("objective")))
            m = [float(v) for v in rec.get("measures")]
        except (TypeError, ValueError) as exc:
            raise ProtocolError(
                f"records[{i}] objective/measures not numeric") from exc
        _require(len(m) == 2, f"records[{i}].measures must have 2 entries")
        measures.append(m)
    data = TrainingSet(
        unrepaired=np.stack(unrepaired),
        repaired=np.stack(repaired),
        usage=np.stack(usage),
        objective=np.asarray(objective, dtype=np.float32),
        measures=np.asarray(measures, dtype=np.float32))
    data.measure_ranges = _resolve_ranges(payload.get("measure_ranges"),
                                          data.measures)
    return data


def _resolve_ranges(declared, measures: np.ndarray) -> np.ndarray:
    if declared is not None:
        try:
            ranges = np.asarray(declared, dtype=np.float32)
        except (TypeError, ValueError) as exc:
            raise ProtocolError("measure_ranges not numeric") from exc
        _require(ranges.shape == (2, 2), "measure_ranges must be 2 x (lo, hi)")
        _require(bool((ranges[:, 1] > ranges[:, 0]).all()),
                 "measure_ranges must have hi > lo")
        return ranges
    lo, hi = measures.min(axis=0), measures.max(axis=0)
    hi = np.where(hi > lo, hi, lo + 1.0)  # degenerate column: unit span
    return np.stack([lo, hi], axis=1)


def normalize_measures(measures: np.ndarray, ranges: np.ndarray) -> np.ndarray:
    lo, hi = ranges[:, 0], ranges[:, 1]
    return (measures - lo) / (hi - lo)


def denormalize_measures(scaled: np.ndarray, ranges: np.ndarray) -> np.ndarray:
    lo, hi = ranges[:, 0], ranges[:, 1]
    return lo + scaled * (hi - lo)


def predict_response(repaired: np.ndarray, usage: np.ndarray,
                     scores: np.ndarray, ranges: np.ndarray) -> dict:
    """Wire form of a batch answer.

    ``repaired`` B x C x H x W one-hot, ``usage`` B x 1 x H x W, and
    ``scores`` B x 3 with normalized measures; measures are returned in
    raw units via ``ranges``.
    """
    batch = repaired.shape[0]
    raw = denormalize_measures(scores[:, 1:], ranges)
    predictions = []
    for i in range(batch):
        predictions.append({
            "repaired": repaired[i].transpose(1, 2, 0).tolist(),
            "tile_usage": usage[i].reshape(-1).tolist(),
            "objective": float(scores[i, 0]),
            "measures": [float(v) for v in raw[i]],
        })
    return {"version": PROTOCOL_VERSION, "predictions": predictions}


def train_response(curves: dict, n_records: int, model_ref: str) -> dict:
    return {
        "version": PROTOCOL_VERSION,
        "model_ref": model_ref,
        "records": n_records,
        "losses": {name: [float(v) for v in values]
                   for name, values in curves.items()},
    }
