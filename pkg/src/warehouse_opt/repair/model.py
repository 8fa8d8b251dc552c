"""Integer-program construction for layout repair.

The repaired layout is encoded one-hot: a binary variable per (tile, type)
pair, minimizing Hamming distance to the input.  Linear constraints force
exactly one type per tile, freeze the non-storage area, pin the shelf and
terminal counts, require shelves and endpoints to be mutually adjacent, and
require a feasible single-commodity flow from one terminal (re-typed as a
model-internal dummy source) to every non-shelf tile, which guarantees the
connectivity the simulator needs.

The dummy source never leaves this module: decoding restores the terminal
tile it replaced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..layouts import Layout, Scenario, TileType

# one-hot variable order per vertex; letter = variable name prefix
TILE_VARS = (
    ("h", TileType.HOME),
    ("w", TileType.WORKSTATION),
    ("e", TileType.ENDPOINT),
    ("s", TileType.SHELF),
    ("p", TileType.EMPTY),
)
VAR_OF_TILE = {tile: k for k, (_, tile) in enumerate(TILE_VARS)}

INF = math.inf


@dataclass(frozen=True)
class Constraint:
    """One linear row: sum(coef * var) sense rhs."""

    name: str
    terms: tuple          # ((var_index, coefficient), ...)
    sense: str            # "=", "<=", ">="
    rhs: float


@dataclass
class RepairModel:
    """A built repair instance plus the index maps needed to decode it."""

    layout: Layout
    scenario: Scenario
    n_s: int
    n_w: int
    n_h: int
    source: int | None            # flat tile index re-typed as dummy source
    var_names: tuple
    objective: tuple              # coefficient per variable
    objective_const: float        # constant completing the Hamming objective
    integrality: tuple            # 1 = binary, 0 = continuous
    lower: tuple
    upper: tuple
    constraints: tuple
    x_index: dict = field(repr=False)       # (vertex, type slot) -> var
    flow_index: dict = field(repr=False)    # (u, v) -> var
    supply_index: tuple = field(repr=False)
    demand_index: tuple = field(repr=False)

    @property
    def n_variables(self) -> int:
        return len(self.var_names)


def _directed_edges(layout: Layout):
    out = []
    for u in range(len(layout.tiles)):
        for v in layout.neighbors(u):
            out.append((u, v))
    out.sort()
    return out


def blocking_types(scenario: Scenario) -> tuple:
    """Types no flow may leave: shelves always; endpoints and home locations
    too when the repaired layout must keep terminal pairs linked through
    empty tiles only."""
    if scenario == Scenario.HOME:
        return (TileType.SHELF, TileType.HOME, TileType.ENDPOINT)
    return (TileType.SHELF,)


def pick_source(layout: Layout, scenario: Scenario) -> int | None:
    """First workstation (workstation scenario) or home location tile in
    row-major order; None when the layout has no such terminal."""
    kind = TileType.HOME if scenario == Scenario.HOME else TileType.WORKSTATION
    tiles = layout.tiles_of(kind)
    return tiles[0] if tiles else None


def build_model(unrepaired: Layout, scenario: Scenario, n_s: int,
                n_w: int | None = None, n_h: int | None = None) -> RepairModel:
    """Build the repair program for ``unrepaired``.

    ``n_w`` / ``n_h`` default to the input's own terminal counts, which is
    always consistent for layouts produced by the frame generators.  An
    unreachable ``n_s`` still builds; infeasibility surfaces at solve time.
    """
    lay = unrepaired
    n = len(lay.tiles)
    if n_w is None:
        n_w = lay.count(TileType.WORKSTATION)
    if n_h is None:
        n_h = lay.count(TileType.HOME)
    source = pick_source(lay, scenario)
    edges = _directed_edges(lay)
    storage = set(lay.storage_indices)
    blocked = blocking_types(scenario)
    zero_fixed = TileType.HOME if scenario == Scenario.WORKSTATION else TileType.WORKSTATION

    names, lower, upper, integrality, obj = [], [], [], [], []

    def add_var(name, lo, hi, integer, coef):
        names.append(name)
        lower.append(lo)
        upper.append(hi)
        integrality.append(1 if integer else 0)
        obj.append(coef)
        return len(names) - 1

    # tile-type binaries, vertex-major; the dummy source keeps its five
    # binaries (forced 0 through the uniqueness row) so variable counts are
    # uniform across vertices
    x_index = {}
    objective_const = 0.0
    for v in range(n):
        r, c = divmod(v, lay.width)
        orig = VAR_OF_TILE[lay.tiles[v]]
        for k, (letter, tile) in enumerate(TILE_VARS):
            lo, hi = 0.0, 1.0
            if tile == zero_fixed:
                hi = 0.0
            if v not in storage and v != source and k == orig:
                # non-storage tiles may not change
                lo = 1.0
            coef = 0.0 if v == source else (1.0 - 2.0 * (k == orig))
            x_index[(v, k)] = add_var(f"x_{letter}_{r}_{c}", lo, hi, True, coef)
        if v != source:
            objective_const += 1.0

    flow_index = {}
    for u, v in edges:
        r1, c1 = divmod(u, lay.width)
        r2, c2 = divmod(v, lay.width)
        flow_index[(u, v)] = add_var(f"f_{r1}_{c1}_{r2}_{c2}", 0.0, INF, False, 0.0)

    # supply capacity |V| at the source, zero elsewhere, encoded as bounds
    supply_index = tuple(
        add_var("fs_%d_%d" % divmod(v, lay.width), 0.0,
                float(n) if v == source else 0.0, False, 0.0)
        for v in range(n)
    )
    demand_index = tuple(
        add_var("ft_%d_%d" % divmod(v, lay.width), 0.0, INF, False, 0.0)
        for v in range(n)
    )

    rows = []

    def coords(v):
        return divmod(v, lay.width)

    for v in range(n):
        r, c = coords(v)
        terms = tuple((x_index[(v, k)], 1.0) for k in range(len(TILE_VARS)))
        rows.append(Constraint(f"uniq_{r}_{c}", terms,
                               "=", 0.0 if v == source else 1.0))

    for v in range(n):
        r, c = coords(v)
        shelf_terms = tuple((x_index[(u, VAR_OF_TILE[TileType.SHELF])], 1.0)
                            for u in lay.neighbors(v))
        rows.append(Constraint(
            f"adj_e_{r}_{c}",
            shelf_terms + ((x_index[(v, VAR_OF_TILE[TileType.ENDPOINT])], -1.0),),
            ">=", 0.0))
        end_terms = tuple((x_index[(u, VAR_OF_TILE[TileType.ENDPOINT])], 1.0)
                          for u in lay.neighbors(v))
        rows.append(Constraint(
            f"adj_s_{r}_{c}",
            end_terms + ((x_index[(v, VAR_OF_TILE[TileType.SHELF])], -2.0),),
            ">=", 0.0))

    # global counts; the source tile absorbs one terminal of its own type
    if scenario == Scenario.WORKSTATION:
        terms = tuple((x_index[(v, VAR_OF_TILE[TileType.WORKSTATION])], 1.0)
                      for v in range(n))
        rows.append(Constraint("count_w", terms, "=",
                               float(n_w - (source is not None))))
    else:
        terms = tuple((x_index[(v, VAR_OF_TILE[TileType.HOME])], 1.0)
                      for v in range(n))
        rows.append(Constraint("count_h", terms, "=",
                               float(n_h - (source is not None))))
    rows.append(Constraint(
        "count_s",
        tuple((x_index[(v, VAR_OF_TILE[TileType.SHELF])], 1.0) for v in range(n)),
        "=", float(n_s)))

    # every tile of a sink type (anything but shelf) demands one unit
    sink_slots = [k for k, (_, tile) in enumerate(TILE_VARS)
                  if tile != TileType.SHELF]
    for v in range(n):
        r, c = coords(v)
        terms = ((demand_index[v], 1.0),) + tuple(
            (x_index[(v, k)], -1.0) for k in sink_slots)
        rows.append(Constraint(f"dem_{r}_{c}", terms, "=", 0.0))

    in_edges = {v: [] for v in range(n)}
    out_edges = {v: [] for v in range(n)}
    for u, v in edges:
        out_edges[u].append((u, v))
        in_edges[v].append((u, v))
    for v in range(n):
        r, c = coords(v)
        terms = [(supply_index[v], 1.0), (demand_index[v], -1.0)]
        terms += [(flow_index[e], 1.0) for e in in_edges[v]]
        terms += [(flow_index[e], -1.0) for e in out_edges[v]]
        rows.append(Constraint(f"cons_{r}_{c}", tuple(terms), "=", 0.0))

    blocked_slots = [VAR_OF_TILE[t] for t in blocked]
    for u, v in edges:
        r1, c1 = coords(u)
        r2, c2 = coords(v)
        terms = ((flow_index[(u, v)], 1.0),) + tuple(
            (x_index[(u, k)], float(n)) for k in blocked_slots)
        rows.append(Constraint(f"blk_{r1}_{c1}_{r2}_{c2}", terms, "<=", float(n)))

    return RepairModel(
        layout=lay, scenario=scenario, n_s=n_s, n_w=n_w, n_h=n_h,
        source=source,
        var_names=tuple(names),
        objective=tuple(obj),
        objective_const=objective_const,
        integrality=tuple(integrality),
        lower=tuple(lower),
        upper=tuple(upper),
        constraints=tuple(rows),
        x_index=x_index,
        flow_index=flow_index,
        supply_index=supply_index,
        demand_index=demand_index,
    )
