"""Layout frames and storage-fill generators.

A *frame* is a full layout whose non-storage tiles (workstations or home
locations plus empty margins) are laid out by a deterministic rule and whose
storage area is entirely empty.  Optimizers mutate only the storage tiles and
graft them back into the frame with :func:`embed_storage`.
"""

from __future__ import annotations

import numpy as np

from .layouts import Layout, StorageRect, TileType

STORAGE_FILL_CHOICES = (TileType.SHELF, TileType.ENDPOINT, TileType.EMPTY)


def even_positions(count: int, span: int) -> tuple:
    """``count`` indices spread as evenly as possible over ``range(span)``.

    Uses the midpoints of ``count`` equal bands, so 2 positions in a span of
    7 land on 1 and 5.
    """
    if count < 0 or span < 0:
        raise ValueError("count and span must be non-negative")
    if count > span:
        raise ValueError(f"cannot spread {count} positions over span {span}")
    return tuple((2 * i + 1) * span // (2 * count) for i in range(count))


def _blank(height, width, storage):
    return Layout(height, width, (TileType.EMPTY,) * (height * width), storage)


def embed_storage(frame: Layout, tiles) -> Layout:
    """Replace the frame's storage-area tiles with ``tiles`` (row-major over
    the storage rectangle)."""
    return frame.with_storage(tuple(tiles))


def storage_tiles(layout: Layout) -> tuple:
    """The storage-area tiles of ``layout``, row-major."""
    return tuple(layout.tiles[i] for i in layout.storage_indices)


def workstation_frame(storage_h: int, storage_w: int, n_w: int) -> Layout:
    """Frame with workstations on the left and right border columns.

    Adds a 2-column margin on each side; stations split evenly between the
    two borders (left gets the extra one when n_w is odd) and spread evenly
    down the column.
    """
    height, width = storage_h, storage_w + 4
    frame = _blank(height, width, StorageRect(0, 2, storage_h, storage_w))
    n_left = (n_w + 1) // 2
    changes = {r * width: TileType.WORKSTATION
               for r in even_positions(n_left, height)}
    for r in even_positions(n_w - n_left, height):
        changes[r * width + width - 1] = TileType.WORKSTATION
    return frame.with_tiles(changes)


def desk_frame(storage_h: int, storage_w: int, n_w: int = 4,
               side_margin: int = 1, top_margin: int = 2) -> Layout:
    """Compact frame with workstations on the top and bottom border rows.

    Sized for small benchmark maps: ``side_margin`` empty columns per side,
    ``top_margin`` rows above and below the storage area, stations spread
    evenly along the outer rows.
    """
    height = storage_h + 2 * top_margin
    width = storage_w + 2 * side_margin
    frame = _blank(height, width,
                   StorageRect(top_margin, side_margin, storage_h, storage_w))
    n_top = (n_w + 1) // 2
    changes = {side_margin + c: TileType.WORKSTATION
               for c in even_positions(n_top, storage_w)}
    for c in even_positions(n_w - n_top, storage_w):
        changes[(height - 1) * width + side_margin + c] = TileType.WORKSTATION
    return frame.with_tiles(changes)


def _comb_teeth(height, width, depth):
    """Home-location comb: teeth poke inward from all four borders, every
    other row/column, leaving white gaps so each tooth cell keeps an empty
    neighbor connected to the margin."""
    teeth = {"top": [], "bottom": [], "left": [], "right": []}
    for c in range(0, width, 2):
        teeth["top"].append([(d, c) for d in range(depth)])
        teeth["bottom"].append([(height - 1 - d, c) for d in range(depth)])
    # side teeth start one row below the top teeth so the ring row between
    # them stays white and every 1-wide gap drains into it
    for r in range(depth + 1, height - depth - 1, 2):
        teeth["left"].append([(r, d) for d in range(depth)])
        teeth["right"].append([(r, width - 1 - d) for d in range(depth)])
    return teeth


def home_frame(storage_h: int, storage_w: int, n_h: int,
               margin: int = 4) -> Layout:
    """Frame with ``n_h`` home locations combed around the border margin.

    Teeth are filled round-robin across the four sides so the homes spread
    evenly; every home keeps an adjacent empty tile on the margin's white
    ring, which keeps repaired layouts well-formable.
    """
    depth = min(3, margin - 1)
    if depth < 1:
        raise ValueError("margin must be at least 2")
    height = storage_h + 2 * margin
    width = storage_w + 2 * margin
    teeth = _comb_teeth(height, width, depth)
    capacity = sum(len(t) for side in teeth.values() for t in side)
    if n_h > capacity:
        raise ValueError(f"cannot place {n_h} home locations, capacity {capacity}")

    frame = _blank(height, width,
                   StorageRect(margin, margin, storage_h, storage_w))
    changes = {}
    queues = [list(teeth[s]) for s in ("top", "bottom", "left", "right")]
    while len(changes) < n_h:
        for q in queues:
            if len(changes) >= n_h or not q:
                continue
            for r, c in q.pop(0):
                if len(changes) >= n_h:
                    break
                changes[r * width + c] = TileType.HOME
    return frame.with_tiles(changes)


def human_style_storage(storage_h: int, storage_w: int, n_s: int,
                        run: int = 10) -> tuple:
    """Row-pattern storage fill: shelf rows in runs of up to ``run`` tiles,
    endpoint rows directly above and below, empty aisles between and around.

    Fills shelf rows top-down until exactly ``n_s`` shelves are placed;
    raises when the pattern cannot reach that count.
    """
    n_runs = max(1, (storage_w + 1) // (run + 1))
    run_len = run if n_runs * (run + 1) - 1 <= storage_w else min(run, storage_w - 1)
    offset = (storage_w - (n_runs * run_len + n_runs - 1)) // 2
    run_cols = [offset + k * (run_len + 1) + j
                for k in range(n_runs) for j in range(run_len)]
    # shelf rows need an endpoint row on both sides
    shelf_rows = [r for r in range(storage_h - 1) if r % 4 == 2]

    grid = [[TileType.EMPTY] * storage_w for _ in range(storage_h)]
    remaining = n_s
    for r in shelf_rows:
        for c in run_cols:
            if remaining == 0:
                break
            grid[r][c] = TileType.SHELF
            grid[r - 1][c] = TileType.ENDPOINT
            grid[r + 1][c] = TileType.ENDPOINT
            remaining -= 1
    if remaining:
        raise ValueError(f"row pattern fits only {n_s - remaining} shelves, "
                         f"wanted {n_s}")
    return tuple(t for row in grid for t in row)


def human_style_layout(frame: Layout, n_s: int, run: int = 10) -> Layout:
    """``frame`` with its storage area filled by the row pattern."""
    s = frame.storage
    return embed_storage(frame, human_style_storage(s.height, s.width, n_s, run))


def random_storage_fill(frame: Layout, rng: np.random.Generator) -> Layout:
    """``frame`` with every storage tile drawn i.i.d. uniform from
    shelf / endpoint / empty."""
    n = len(frame.storage_indices)
    draws = rng.integers(0, len(STORAGE_FILL_CHOICES), size=n)
    return embed_storage(frame, (STORAGE_FILL_CHOICES[d] for d in draws))


# named experiment frames: (storage_h, storage_w, scenario terminal count)
SETUP_FRAMES = {
    1: ("home", 9, 12, 88),
    2: ("workstation", 9, 12, 6),
    3: ("workstation", 17, 12, 10),
    4: ("workstation", 33, 32, 22),
}

SETUP_SHELF_COUNTS = {1: 20, 2: 20, 3: 40, 4: 240}


def setup_frame(setup_id: int) -> Layout:
    """The named experiment frame (storage size and terminal placement)."""
    kind, h, w, count = SETUP_FRAMES[setup_id]
    if kind == "home":
        return home_frame(h, w, count)
    return workstation_frame(h, w, count)
