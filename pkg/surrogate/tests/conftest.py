"""Shared builders: synthetic layouts and exchange payloads."""

import numpy as np
import pytest

from warehouse_surrogate.model import ONE_HOT_CHANNELS


def random_one_hot(rng, height, width):
    """H x W x C nested lists with exactly one hot channel per tile."""
    grid = np.zeros((height, width, ONE_HOT_CHANNELS), dtype=np.float32)
    picks = rng.integers(0, ONE_HOT_CHANNELS, size=(height, width))
    for r in range(height):
        for c in range(width):
            grid[r, c, picks[r, c]] = 1.0
    return grid.tolist()


def make_records(rng, n, height, width):
    records = []
    for _ in range(n):
        mass = rng.random(height * width) + 0.01
        records.append({
            "unrepaired": random_one_hot(rng, height, width),
            "repaired": random_one_hot(rng, height, width),
            "tile_usage": (mass / mass.sum()).tolist(),
            "objective": float(rng.uniform(0.0, 4.0)),
            "measures": [float(rng.integers(0, 13)),
                         float(rng.uniform(2.0, 14.0))],
        })
    return records


def train_payload(rng, n=12, height=5, width=6, **extra):
    payload = {"version": 1, "mode": "train", "height": height,
               "width": width, "records": make_records(rng, n, height, width)}
    payload.update(extra)
    return payload


def predict_payload(rng, n=3, height=5, width=6):
    return {"version": 1, "mode": "predict", "height": height, "width": width,
            "layouts": [random_one_hot(rng, height, width)
                        for _ in range(n)]}


@pytest.fixture
def rng():
    return np.random.default_rng(7)
