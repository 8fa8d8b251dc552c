"""Idle-agent planning with dummy parking paths.

Every agent always owns a committed conflict-free path that ends resting
forever on a home location.  A newly idle agent replans from its current
position: a segment to its goal, then a segment to the nearest unclaimed
home where it can park indefinitely.  Replanning failure is benign; the
agent keeps following its old committed path and retries next timestep.
On a well-formed layout with enough homes this never deadlocks the fleet
into an error, which is the point of the scheme.
"""

from __future__ import annotations

from warehouse_opt.sim.grid import GridIndex
from warehouse_opt.sim.reservations import ReservationTable
from warehouse_opt.sim.sipp import sipp_search


class DppPlanner:
    def __init__(self, grid: GridIndex, home_tiles, node_budget: int = 100_000):
        self.grid = grid
        self.homes = tuple(sorted(home_tiles))
        self.node_budget = node_budget
        self.table = ReservationTable(grid.n_tiles)
        self.claimed = {}  # agent -> home tile it rests at or aims for

    def park_agent(self, aid: int, tile: int, t: int):
        """Initial placement: rest at ``tile`` from ``t`` on."""
        self.table.reserve_eternal(aid, tile, t)
        if tile in self.homes:
            self.claimed[aid] = tile

    def _free_homes_near(self, aid: int, goal: int):
        """Unclaimed homes ordered by distance from ``goal`` (ties by index)."""
        taken = {h for a, h in self.claimed.items() if a != aid}
        ranked = []
        for home in self.homes:
            if home in taken:
                continue
            d = self.grid.distances_to(home)[goal]
            if d >= 0:
                ranked.append((d, home))
        ranked.sort()
        return [home for _, home in ranked]

    def _segment(self, aid, start, goal, depart, open_goal):
        if start == goal and not open_goal:
            return [start]
        seg = self.grid.greedy_path(start, goal)
        if seg is not None and not open_goal \
                and self.table.path_clear(seg, depart, ignore=aid):
            return seg
        return sipp_search(self.grid, self.table, start, goal, depart,
                           ignore=aid, require_open_goal=open_goal,
                           node_budget=self.node_budget)

    def try_replan(self, aid: int, position: int, goal: int, t: int):
        """Commit position → goal → nearest free home, or return None.

        On success the agent's old reservations are replaced wholesale and
        its home claim moves; on failure nothing changes.
        """
        seg1 = self._segment(aid, position, goal, t, open_goal=False)
        if seg1 is None:
            return None
        arrival = t + len(seg1) - 1
        for home in self._free_homes_near(aid, goal):
            seg2 = self._segment(aid, goal, home, arrival, open_goal=True)
            if seg2 is not None:
                path = seg1 + seg2[1:]
                self.table.remove_agent(aid)
                self.table.reserve_path(aid, path, t, eternal_end=True)
                self.claimed[aid] = home
                return path
        return None
