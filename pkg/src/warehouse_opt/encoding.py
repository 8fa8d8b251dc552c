"""One-hot layout tensors for the surrogate exchange protocol.

A layout becomes an H x W x 5 float array; channel k is 1 where the tile
has type ``ONE_HOT_TYPES[k]``.  The channel order is shelf, endpoint,
workstation, home, empty (the integer tile-type order); the milp-internal
dummy-source type never appears in layouts and has no channel.
"""

from __future__ import annotations

import numpy as np

from .layouts import Layout, TileType

ONE_HOT_TYPES = (
    TileType.SHELF,
    TileType.ENDPOINT,
    TileType.WORKSTATION,
    TileType.HOME,
    TileType.EMPTY,
)

_CHANNEL_OF = {t: k for k, t in enumerate(ONE_HOT_TYPES)}


def one_hot(layout: Layout) -> np.ndarray:
    """H x W x 5 float32 one-hot tensor of the layout's tiles."""
    out = np.zeros((layout.height, layout.width, len(ONE_HOT_TYPES)),
                   dtype=np.float32)
    for i, tile in enumerate(layout.tiles):
        r, c = divmod(i, layout.width)
        out[r, c, _CHANNEL_OF[tile]] = 1.0
    return out


def from_one_hot(array, like: Layout) -> Layout:
    """Layout from per-tile channel scores via argmax.

    ``like`` supplies the grid shape and storage rectangle; raises
    LayoutError (via the Layout constructor) if the argmax places a
    terminal inside the storage area."""
    arr = np.asarray(array)
    if arr.shape != (like.height, like.width, len(ONE_HOT_TYPES)):
        raise ValueError(
            f"expected shape {(like.height, like.width, len(ONE_HOT_TYPES))},"
            f" got {arr.shape}")
    winners = arr.reshape(-1, len(ONE_HOT_TYPES)).argmax(axis=1)
    tiles = tuple(ONE_HOT_TYPES[k] for k in winners)
    return Layout(like.height, like.width, tiles, like.storage)
