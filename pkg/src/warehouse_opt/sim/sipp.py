"""Safe-interval path planning for a single agent.

States are (tile, safe interval) pairs; arrival times are integers, waits
are implicit in interval transitions.  Reservations beyond the caller's
horizon simply do not exist in the table, so search degenerates to plain
A* out there.
"""

from __future__ import annotations

from heapq import heappop, heappush

from warehouse_opt.sim.grid import GridIndex
from warehouse_opt.sim.reservations import INF, ReservationTable


def sipp_search(
    grid: GridIndex,
    table: ReservationTable,
    start: int,
    goal: int,
    depart: int,
    ignore: int = -1,
    require_open_goal: bool = False,
    node_budget: int = 100_000,
):
    """Time-minimal path ``start``..``goal`` departing at ``depart``.

    Returns a list of tiles, one per timestep from ``depart``, or None.
    ``require_open_goal`` additionally demands the arrival interval be
    unbounded so the agent can park on the goal forever.
    Ties break toward fewer waits, then lower tile index.
    """
    dist = grid.distances_to(goal)
    if dist[start] < 0:
        return None

    intervals_at = {}

    def intervals(tile):
        cached = intervals_at.get(tile)
        if cached is None:
            cached = table.safe_intervals(tile, depart, ignore)
            intervals_at[tile] = cached
        return cached

    start_iv = None
    for s, e in intervals(start):
        if s <= depart <= e:
            start_iv = (s, e)
            break
    if start_iv is None:
        return None

    if start == goal and (not require_open_goal or start_iv[1] == INF):
        return [start]

    # state key (tile, interval start) -> best arrival
    best = {(start, start_iv[0]): depart}
    parents = {}
    open_heap = [(depart + dist[start], 0, start, start_iv[0], start_iv[1], depart)]
    expanded = 0
    while open_heap:
        f, waits, tile, iv_s, iv_e, g = heappop(open_heap)
        if best.get((tile, iv_s), -1) != g:
            continue
        if tile == goal and (not require_open_goal or iv_e == INF):
            return _reconstruct(parents, (tile, iv_s), g, start, depart)
        expanded += 1
        if expanded > node_budget:
            return None
        for nbr in grid.neighbors[tile]:
            h = dist[nbr]
            if h < 0:
                continue
            for s, e in intervals(nbr):
                lo = g + 1 if g + 1 > s else s
                hi = iv_e + 1
                if e < hi:
                    hi = e
                if lo > hi:
                    continue
                a = lo
                while a <= hi and table.swap_blocked(tile, nbr, a - 1, ignore):
                    a += 1
                if a > hi:
                    continue
                key = (nbr, s)
                if best.get(key, INF) <= a:
                    continue
                best[key] = a
                parents[key] = ((tile, iv_s), g, a)
                heappush(open_heap, (a + h, waits + (a - g - 1), nbr, s, e, a))
    return None


def _reconstruct(parents, key, arrival, start, depart):
    path = []
    while True:
        entry = parents.get(key)
        if entry is None:
            path.extend([key[0]] * (arrival - depart + 1))
            break
        pkey, pg, a = entry
        path.append(key[0])
        path.extend([pkey[0]] * (a - 1 - pg))
        key, arrival = pkey, pg
    path.reverse()
    return path


def sipp_plan(layout, reservations: ReservationTable, start, goal, depart: int,
              node_budget: int = 100_000):
    """Coordinate-level wrapper: (row, col) in, list of (row, col) out.

    Returns None when the goal is unreachable under the reservations.
    """
    grid = layout if isinstance(layout, GridIndex) else GridIndex(layout)
    s = grid.width * start[0] + start[1]
    g = grid.width * goal[0] + goal[1]
    if not grid.traversable[s] or not grid.traversable[g]:
        return None
    path = sipp_search(grid, reservations, s, g, depart, node_budget=node_budget)
    if path is None:
        return None
    return [divmod(v, grid.width) for v in path]
