"""Space-time reservation table shared by the single-agent planners.

Tracks vertex occupancy per (tile, timestep), edge traversals for swap
detection, and open-ended holds for agents parked indefinitely.  All
timesteps are absolute.
"""

from __future__ import annotations

INF = float("inf")


class ReservationTable:
    __slots__ = ("n_tiles", "vertex", "edge", "eternal", "by_agent")

    def __init__(self, n_tiles: int):
        self.n_tiles = n_tiles
        self.vertex = [None] * n_tiles   # tile -> {t: agent}
        self.eternal = [None] * n_tiles  # tile -> (start_t, agent)
        self.edge = {}                   # u * n_tiles + v -> {t: agent}
        self.by_agent = {}               # agent -> list of undo records

    # -- queries ----------------------------------------------------------

    def vertex_blocked(self, tile: int, t: int, ignore: int = -1) -> bool:
        held = self.vertex[tile]
        if held is not None:
            a = held.get(t)
            if a is not None and a != ignore:
                return True
        et = self.eternal[tile]
        return et is not None and t >= et[0] and et[1] != ignore

    def swap_blocked(self, u: int, v: int, t: int, ignore: int = -1) -> bool:
        """True if some other agent departs v at t toward u."""
        held = self.edge.get(v * self.n_tiles + u)
        if held is None:
            return False
        a = held.get(t)
        return a is not None and a != ignore

    def safe_intervals(self, tile: int, from_t: int, ignore: int = -1) -> list:
        """Maximal conflict-free [start, end] windows at ``tile`` from
        ``from_t`` on; ``end`` is inclusive and may be infinite."""
        limit = INF
        et = self.eternal[tile]
        if et is not None and et[1] != ignore:
            limit = et[0] - 1
            if limit < from_t:
                return []
        held = self.vertex[tile]
        if held:
            blocked = sorted(
                t for t, a in held.items() if a != ignore and from_t <= t <= limit
            )
        else:
            blocked = []
        intervals = []
        lo = from_t
        for t in blocked:
            if t > lo:
                intervals.append((lo, t - 1))
            lo = t + 1
        if lo <= limit:
            intervals.append((lo, limit))
        return intervals

    def path_clear(self, path, t0: int, horizon=None, ignore: int = -1) -> bool:
        """Whether ``path`` starting at ``t0`` hits no reservation.

        Only timesteps <= ``horizon`` are checked when one is given.
        """
        prev = path[0]
        for k, tile in enumerate(path):
            t = t0 + k
            if horizon is not None and t > horizon:
                return True
            if self.vertex_blocked(tile, t, ignore):
                return False
            if tile != prev and self.swap_blocked(prev, tile, t - 1, ignore):
                return False
            prev = tile
        return True

    # -- registration -----------------------------------------------------

    def _undo_log(self, agent: int) -> list:
        log = self.by_agent.get(agent)
        if log is None:
            log = self.by_agent[agent] = []
        return log

    def reserve_vertex(self, agent: int, tile: int, t: int):
        held = self.vertex[tile]
        if held is None:
            held = self.vertex[tile] = {}
        held[t] = agent
        self._undo_log(agent).append((0, tile, t))

    def reserve_eternal(self, agent: int, tile: int, t: int):
        self.eternal[tile] = (t, agent)
        self._undo_log(agent).append((2, tile, 0))

    def reserve_path(self, agent: int, path, t0: int, horizon=None,
                     eternal_end: bool = False, hold_until=None):
        """Register a path departing at ``t0``.

        ``horizon`` caps which vertex/edge timesteps get recorded;
        ``hold_until`` extends the final tile's reservation after arrival;
        ``eternal_end`` parks the agent on the final tile forever.
        """
        log = self._undo_log(agent)
        prev = path[0]
        for k, tile in enumerate(path):
            t = t0 + k
            if horizon is not None and t > horizon:
                prev = tile
                continue
            held = self.vertex[tile]
            if held is None:
                held = self.vertex[tile] = {}
            held[t] = agent
            log.append((0, tile, t))
            if tile != prev:
                key = prev * self.n_tiles + tile
                eheld = self.edge.get(key)
                if eheld is None:
                    eheld = self.edge[key] = {}
                eheld[t - 1] = agent
                log.append((1, key, t - 1))
            prev = tile
        last = path[-1]
        arrival = t0 + len(path) - 1
        if eternal_end:
            self.eternal[last] = (arrival, agent)
            log.append((2, last, 0))
        elif hold_until is not None:
            for t in range(arrival + 1, hold_until + 1):
                if horizon is not None and t > horizon:
                    break
                held = self.vertex[last]
                if held is None:
                    held = self.vertex[last] = {}
                held[t] = agent
                log.append((0, last, t))

    def remove_agent(self, agent: int):
        log = self.by_agent.pop(agent, None)
        if not log:
            return
        for kind, a, b in log:
            if kind == 0:
                held = self.vertex[a]
                if held is not None and held.get(b) == agent:
                    del held[b]
            elif kind == 1:
                held = self.edge.get(a)
                if held is not None and held.get(b) == agent:
                    del held[b]
            else:
                et = self.eternal[a]
                if et is not None and et[1] == agent:
                    self.eternal[a] = None
