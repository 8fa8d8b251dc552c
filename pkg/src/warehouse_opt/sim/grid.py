"""Precomputed grid adjacency and distance tables for one layout.

Planners run hot loops over flat tile indices; this wraps a Layout with
tuple-based neighbor lists and a cache of BFS distance tables per goal.
"""

from __future__ import annotations

from warehouse_opt.layouts import Layout, TileType


class GridIndex:
    def __init__(self, layout: Layout):
        self.layout = layout
        self.height = layout.height
        self.width = layout.width
        self.n_tiles = layout.height * layout.width
        self.traversable = layout.traversable
        self.neighbors = tuple(
            tuple(u for u in layout.neighbors(i) if layout.traversable[u])
            if layout.traversable[i] else ()
            for i in range(self.n_tiles)
        )
        self._dist_cache: dict = {}

    def distances_to(self, goal: int) -> list:
        """BFS distance from every tile to ``goal``; -1 if unreachable."""
        table = self._dist_cache.get(goal)
        if table is None:
            table = [-1] * self.n_tiles
            if self.traversable[goal]:
                table[goal] = 0
                frontier = [goal]
                d = 0
                while frontier:
                    d += 1
                    nxt = []
                    for v in frontier:
                        for u in self.neighbors[v]:
                            if table[u] < 0:
                                table[u] = d
                                nxt.append(u)
                    frontier = nxt
            self._dist_cache[goal] = table
        return table

    def greedy_step(self, tile: int, dist: list) -> int:
        """Deterministic next tile along a shortest path (lowest index wins)."""
        d = dist[tile]
        for u in self.neighbors[tile]:
            if dist[u] == d - 1:
                return u
        return tile

    def greedy_path(self, start: int, goal: int) -> list:
        """One shortest path start..goal, or None if disconnected."""
        dist = self.distances_to(goal)
        if dist[start] < 0:
            return None
        path = [start]
        tile = start
        while tile != goal:
            tile = self.greedy_step(tile, dist)
            path.append(tile)
        return path
