"""Shared fixtures and strategies for the test suite."""

from __future__ import annotations

from hypothesis import strategies as st

from warehouse_opt.layouts import CHAR_TILES, Layout, StorageRect


def make_layout(rows, storage=None) -> Layout:
    """Build a layout from ascii art rows; storage defaults to the full grid."""
    h, w = len(rows), len(rows[0])
    if storage is None:
        storage = (0, 0, h, w)
    tiles = tuple(CHAR_TILES[ch] for row in rows for ch in row)
    return Layout(h, w, tiles, StorageRect(*storage))


@st.composite
def layouts(draw, max_side: int = 8):
    """Random layouts honoring the tile placement invariant."""
    h = draw(st.integers(1, max_side))
    w = draw(st.integers(1, max_side))
    sr = draw(st.integers(0, h - 1))
    sc = draw(st.integers(0, w - 1))
    sh = draw(st.integers(1, h - sr))
    sw = draw(st.integers(1, w - sc))
    storage = StorageRect(sr, sc, sh, sw)
    tiles = []
    for r in range(h):
        for c in range(w):
            pool = "@e." if storage.contains(r, c) else "@e.wr"
            tiles.append(CHAR_TILES[draw(st.sampled_from(pool))])
    return Layout(h, w, tuple(tiles), storage)
