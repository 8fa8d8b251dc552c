"""Grid layout representation, parsing, serialization, and validity checking.

A layout is a rectangular 4-neighbor grid of typed tiles plus a designated
storage rectangle.  Only storage tiles are ever rewritten by the optimizer;
the surrounding band (workstations, home locations, empty aisles) is fixed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from typing import Iterable, Iterator, Optional, Sequence


class TileType(IntEnum):
    SHELF = 0        # storage rack, not traversable
    ENDPOINT = 1     # agents park here to interact with an adjacent shelf
    WORKSTATION = 2  # human-operated station, outside the storage area
    HOME = 3         # agent parking tile, outside the storage area
    EMPTY = 4        # plain floor
    DUMMY = 5        # internal flow-source marker; never appears in a layout


TILE_CHARS = {
    TileType.SHELF: "@",
    TileType.ENDPOINT: "e",
    TileType.WORKSTATION: "w",
    TileType.HOME: "r",
    TileType.EMPTY: ".",
}
CHAR_TILES = {c: t for t, c in TILE_CHARS.items()}

#: Tile types a mutated or randomly generated storage tile may take.
STORAGE_TILE_CHOICES = (TileType.SHELF, TileType.ENDPOINT, TileType.EMPTY)


class Scenario(IntEnum):
    """Which task pattern the warehouse serves.

    HOME: agents shuttle between endpoints and rest at home locations;
    requires a well-formed layout.  WORKSTATION: agents alternate between
    workstations and endpoints; requires a valid layout.
    """

    HOME = 0
    WORKSTATION = 1

    @classmethod
    def parse(cls, name: str) -> "Scenario":
        key = name.strip().lower().replace("-", "_")
        if key in ("home", "home_location", "homelocation"):
            return cls.HOME
        if key in ("workstation", "work_station"):
            return cls.WORKSTATION
        raise ValueError(f"unknown scenario {name!r}")

    @property
    def label(self) -> str:
        return "home" if self is Scenario.HOME else "workstation"


class LayoutError(ValueError):
    """A structurally impossible layout (bad storage rect, illegal tile)."""


class LayoutFormatError(LayoutError):
    """Parse failure; carries the 1-based line and column of the offence."""

    def __init__(self, message: str, line: int, col: int = 0):
        super().__init__(f"line {line}" + (f", col {col}" if col else "") + f": {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class StorageRect:
    row: int
    col: int
    height: int
    width: int

    def contains(self, r: int, c: int) -> bool:
        return self.row <= r < self.row + self.height and self.col <= c < self.col + self.width


@dataclass(frozen=True)
class Layout:
    """Immutable grid of tiles with a storage rectangle.

    ``tiles`` is row-major.  Workstations and home locations may only occur
    outside the storage rectangle, and the dummy flow-source type never
    appears here at all.
    """

    height: int
    width: int
    tiles: tuple
    storage: StorageRect

    def __post_init__(self):
        if self.height <= 0 or self.width <= 0:
            raise LayoutError(f"non-positive dimensions {self.height}x{self.width}")
        if len(self.tiles) != self.height * self.width:
            raise LayoutError(
                f"expected {self.height * self.width} tiles, got {len(self.tiles)}"
            )
        s = self.storage
        if s.height <= 0 or s.width <= 0 or s.row < 0 or s.col < 0 \
                or s.row + s.height > self.height or s.col + s.width > self.width:
            raise LayoutError(f"storage rectangle {s} exceeds {self.height}x{self.width} grid")
        for i, t in enumerate(self.tiles):
            r, c = divmod(i, self.width)
            if t == TileType.DUMMY or t not in TILE_CHARS:
                raise LayoutError(f"illegal tile type {t} at ({r}, {c})")
            if t in (TileType.WORKSTATION, TileType.HOME) and s.contains(r, c):
                raise LayoutError(
                    f"{TileType(t).name} tile at ({r}, {c}) inside the storage area"
                )

    # -- indexing ---------------------------------------------------------

    def index(self, r: int, c: int) -> int:
        return r * self.width + c

    def tile_at(self, r: int, c: int) -> TileType:
        return TileType(self.tiles[r * self.width + c])

    def coords(self) -> Iterator[tuple]:
        for r in range(self.height):
            for c in range(self.width):
                yield r, c

    @cached_property
    def storage_indices(self) -> tuple:
        """Flat indices of the storage tiles, row-major order."""
        s = self.storage
        return tuple(
            r * self.width + c
            for r in range(s.row, s.row + s.height)
            for c in range(s.col, s.col + s.width)
        )

    @cached_property
    def traversable(self) -> tuple:
        """Per-tile flags: True unless the tile is a shelf."""
        return tuple(t != TileType.SHELF for t in self.tiles)

    def tiles_of(self, kind: TileType) -> tuple:
        return tuple(i for i, t in enumerate(self.tiles) if t == kind)

    def count(self, kind: TileType) -> int:
        return sum(1 for t in self.tiles if t == kind)

    def neighbors(self, i: int) -> Iterator[int]:
        r, c = divmod(i, self.width)
        if r > 0:
            yield i - self.width
        if r + 1 < self.height:
            yield i + self.width
        if c > 0:
            yield i - 1
        if c + 1 < self.width:
            yield i + 1

    # -- derivation -------------------------------------------------------

    def with_tiles(self, changes: dict) -> "Layout":
        """New layout with ``changes`` (flat index -> TileType) applied."""
        tiles = list(self.tiles)
        for i, t in changes.items():
            tiles[i] = TileType(t)
        return Layout(self.height, self.width, tuple(tiles), self.storage)

    def with_storage(self, values: Sequence[TileType]) -> "Layout":
        """New layout whose storage tiles are replaced row-major by ``values``."""
        idx = self.storage_indices
        if len(values) != len(idx):
            raise LayoutError(f"expected {len(idx)} storage tiles, got {len(values)}")
        tiles = list(self.tiles)
        for i, v in zip(idx, values):
            tiles[i] = TileType(v)
        return Layout(self.height, self.width, tuple(tiles), self.storage)

    def hamming_distance(self, other: "Layout") -> int:
        if (self.height, self.width) != (other.height, other.width):
            raise LayoutError("cannot compare layouts of different sizes")
        return sum(1 for a, b in zip(self.tiles, other.tiles) if a != b)


# -- text format ----------------------------------------------------------
#
# line 1: "type warehouse"
# line 2: "height H"
# line 3: "width W"
# line 4: "storage R0 C0 SH SW"
# then H rows of W characters from {@ e w r .}


def parse_layout(text: str) -> Layout:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # canonical files end with a newline

    def header(n: int, key: str, argc: int) -> list:
        if n > len(lines):
            raise LayoutFormatError(f"missing '{key}' header", n)
        parts = lines[n - 1].split()
        if not parts or parts[0] != key:
            raise LayoutFormatError(f"expected '{key}' header, got {lines[n - 1]!r}", n)
        if len(parts) != 1 + argc:
            raise LayoutFormatError(f"'{key}' header takes {argc} value(s)", n)
        out = []
        for p in parts[1:]:
            try:
                out.append(int(p))
            except ValueError:
                raise LayoutFormatError(f"non-integer value {p!r} in '{key}' header", n)
        return out

    if not lines or lines[0].split() != ["type", "warehouse"]:
        raise LayoutFormatError("expected 'type warehouse'", 1)
    (height,) = header(2, "height", 1)
    (width,) = header(3, "width", 1)
    r0, c0, sh, sw = header(4, "storage", 4)
    if height <= 0 or width <= 0:
        raise LayoutFormatError(f"non-positive dimensions {height}x{width}", 2)
    if r0 < 0 or c0 < 0 or sh <= 0 or sw <= 0 or r0 + sh > height or c0 + sw > width:
        raise LayoutFormatError("storage rectangle out of bounds", 4)
    if len(lines) != 4 + height:
        raise LayoutFormatError(f"expected {height} rows, found {len(lines) - 4}", min(len(lines), 4 + height) + 1)

    tiles = []
    for r in range(height):
        row = lines[4 + r]
        if len(row) != width:
            raise LayoutFormatError(
                f"row has {len(row)} characters, expected {width}", 5 + r, len(row) + 1
            )
        for c, ch in enumerate(row):
            t = CHAR_TILES.get(ch)
            if t is None:
                raise LayoutFormatError(f"unknown tile character {ch!r}", 5 + r, c + 1)
            tiles.append(t)
    return Layout(height, width, tuple(tiles), StorageRect(r0, c0, sh, sw))


def serialize_layout(layout: Layout) -> str:
    s = layout.storage
    rows = [
        "".join(TILE_CHARS[TileType(layout.tiles[r * layout.width + c])]
                for c in range(layout.width))
        for r in range(layout.height)
    ]
    head = [
        "type warehouse",
        f"height {layout.height}",
        f"width {layout.width}",
        f"storage {s.row} {s.col} {s.height} {s.width}",
    ]
    return "\n".join(head + rows) + "\n"


def layout_to_json(layout: Layout) -> dict:
    """JSON mirror of the text format, for machine exchange."""
    s = layout.storage
    return {
        "type": "warehouse",
        "height": layout.height,
        "width": layout.width,
        "storage": [s.row, s.col, s.height, s.width],
        "tiles": [
            "".join(TILE_CHARS[TileType(layout.tiles[r * layout.width + c])]
                    for c in range(layout.width))
            for r in range(layout.height)
        ],
    }


def layout_from_json(data) -> Layout:
    if isinstance(data, str):
        data = json.loads(data)
    if data.get("type") != "warehouse":
        raise LayoutError(f"unsupported layout record type {data.get('type')!r}")
    text = "\n".join(
        [
            "type warehouse",
            f"height {data['height']}",
            f"width {data['width']}",
            "storage " + " ".join(str(v) for v in data["storage"]),
        ]
        + list(data["tiles"])
    ) + "\n"
    return parse_layout(text)


# -- validation -----------------------------------------------------------

RULE_CONNECTIVITY = "connectivity"            # endpoint/workstation/home cut off
RULE_ENDPOINT_NEEDS_SHELF = "endpoint-shelf-adjacency"
RULE_SHELF_NEEDS_ENDPOINTS = "shelf-endpoint-adjacency"
RULE_HOME_CAPACITY = "home-capacity"          # fewer homes than agents
RULE_WHITE_CONNECTIVITY = "white-connectivity"
RULE_REACHABILITY = "reachability"            # traversable tile cut off

#: Coordinate used for layout-global violations (no single offending tile).
GLOBAL_COORD = (-1, -1)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the validity / well-formedness / reachability checks.

    ``is_reachable`` is the stricter condition the repair step enforces:
    every traversable tile lies in one connected component.
    """

    is_valid: bool
    is_well_formed: bool
    is_reachable: bool
    violations: tuple = field(default_factory=tuple)

    def rules(self) -> set:
        return {rule for rule, _ in self.violations}

    def ok_for(self, scenario: Scenario) -> bool:
        return self.is_well_formed if scenario is Scenario.HOME else self.is_valid


def _component_labels(layout: Layout, member: Sequence[bool]) -> tuple:
    """4-neighbor component labels over ``member`` tiles; -1 elsewhere."""
    labels = [-1] * len(member)
    count = 0
    for start in range(len(member)):
        if not member[start] or labels[start] >= 0:
            continue
        labels[start] = count
        stack = [start]
        while stack:
            v = stack.pop()
            for u in layout.neighbors(v):
                if member[u] and labels[u] < 0:
                    labels[u] = count
                    stack.append(u)
        count += 1
    return labels, count


def validate(layout: Layout, scenario: Scenario, n_agents: int = 0) -> ValidationReport:
    """Check validity, well-formedness, and full traversable connectivity.

    Validity: all endpoint/workstation/home tiles mutually connected over
    non-shelf tiles, every endpoint touches a shelf, every shelf touches at
    least two endpoints.  Well-formedness additionally requires at least
    ``n_agents`` home locations and a whites-only path between every pair of
    endpoint/home tiles.
    """
    W = layout.width
    violations = []
    terminals = [
        i for i, t in enumerate(layout.tiles)
        if t in (TileType.ENDPOINT, TileType.WORKSTATION, TileType.HOME)
    ]
    trav_labels, _ = _component_labels(layout, layout.traversable)

    connected = True
    if terminals:
        ref = trav_labels[terminals[0]]
        for i in terminals:
            if trav_labels[i] != ref:
                connected = False
                violations.append((RULE_CONNECTIVITY, divmod(i, W)))

    adjacency_ok = True
    for i, t in enumerate(layout.tiles):
        if t == TileType.ENDPOINT:
            if not any(layout.tiles[u] == TileType.SHELF for u in layout.neighbors(i)):
                adjacency_ok = False
                violations.append((RULE_ENDPOINT_NEEDS_SHELF, divmod(i, W)))
        elif t == TileType.SHELF:
            n_e = sum(1 for u in layout.neighbors(i) if layout.tiles[u] == TileType.ENDPOINT)
            if n_e < 2:
                adjacency_ok = False
                violations.append((RULE_SHELF_NEEDS_ENDPOINTS, divmod(i, W)))

    is_valid = connected and adjacency_ok

    # Well-formedness: pairwise whites-only connectivity between endpoint and
    # home tiles.  Two such tiles are connected if they are adjacent or share
    # an adjacent component of empty tiles; the requirement is per pair, not
    # transitive.
    wf_terminals = [
        i for i, t in enumerate(layout.tiles)
        if t in (TileType.ENDPOINT, TileType.HOME)
    ]
    white = [t == TileType.EMPTY for t in layout.tiles]
    white_labels, _ = _component_labels(layout, white)
    adjacent_whites = {}
    neighbor_sets = {}
    for i in wf_terminals:
        adjacent_whites[i] = frozenset(
            white_labels[u] for u in layout.neighbors(i) if white[u]
        )
        neighbor_sets[i] = frozenset(layout.neighbors(i))

    white_ok = True
    flagged = set()
    for a_pos, i in enumerate(wf_terminals):
        for j in wf_terminals[a_pos + 1:]:
            if j in neighbor_sets[i]:
                continue
            if adjacent_whites[i] & adjacent_whites[j]:
                continue
            white_ok = False
            if j not in flagged:
                flagged.add(j)
                violations.append((RULE_WHITE_CONNECTIVITY, divmod(j, W)))

    n_home = layout.count(TileType.HOME)
    capacity_ok = n_home >= n_agents
    if not capacity_ok:
        violations.append((RULE_HOME_CAPACITY, GLOBAL_COORD))

    is_well_formed = is_valid and white_ok and capacity_ok

    trav = [i for i, ok in enumerate(layout.traversable) if ok]
    is_reachable = True
    if trav:
        ref = trav_labels[trav[0]]
        for i in trav:
            if trav_labels[i] != ref:
                is_reachable = False
                violations.append((RULE_REACHABILITY, divmod(i, W)))

    return ValidationReport(is_valid, is_well_formed, is_reachable, tuple(violations))


def bfs_distances(layout: Layout, source: int) -> list:
    """Unweighted shortest-path distance from ``source`` over non-shelf
    tiles; -1 where unreachable.  Shelves always get -1."""
    dist = [-1] * len(layout.tiles)
    if not layout.traversable[source]:
        return dist
    dist[source] = 0
    frontier = [source]
    d = 0
    trav = layout.traversable
    while frontier:
        d += 1
        nxt = []
        for v in frontier:
            for u in layout.neighbors(v):
                if trav[u] and dist[u] < 0:
                    dist[u] = d
                    nxt.append(u)
        frontier = nxt
    return dist
