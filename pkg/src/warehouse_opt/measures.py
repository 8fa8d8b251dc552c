"""Diversity measures used to bin layouts in the archive."""

from __future__ import annotations

from itertools import combinations

from warehouse_opt.layouts import (
    Layout,
    Scenario,
    TileType,
    _component_labels,
    bfs_distances,
)


class UnreachablePairError(ValueError):
    """A task pair has no shelf-free path; carries the offending pair."""

    def __init__(self, pair):
        (r1, c1), (r2, c2) = pair
        super().__init__(f"no path between ({r1}, {c1}) and ({r2}, {c2})")
        self.pair = pair


def connected_shelf_components(layout: Layout) -> int:
    """Number of 4-connected groups of shelf tiles."""
    shelf = [t == TileType.SHELF for t in layout.tiles]
    _, count = _component_labels(layout, shelf)
    return count


def task_pairs(layout: Layout, scenario: Scenario) -> list:
    """Flat-index pairs a task may connect under the given scenario.

    Workstation scenario: every (workstation, endpoint) pair.  Home
    scenario: every unordered pair of distinct endpoints.
    """
    endpoints = layout.tiles_of(TileType.ENDPOINT)
    if scenario is Scenario.WORKSTATION:
        stations = layout.tiles_of(TileType.WORKSTATION)
        return [(w, e) for w in stations for e in endpoints]
    return list(combinations(endpoints, 2))


def mean_task_length(
    layout: Layout, scenario: Scenario, metric: str = "shortest_path"
) -> float:
    """Average distance over all task pairs.

    ``metric`` is "shortest_path" (BFS over non-shelf tiles, the default)
    or "manhattan".  Raises UnreachablePairError if any pair is separated;
    returns 0.0 when the layout has no task pairs at all.
    """
    pairs = task_pairs(layout, scenario)
    if not pairs:
        return 0.0
    W = layout.width
    if metric == "manhattan":
        total = 0
        for a, b in pairs:
            r1, c1 = divmod(a, W)
            r2, c2 = divmod(b, W)
            total += abs(r1 - r2) + abs(c1 - c2)
        return total / len(pairs)
    if metric != "shortest_path":
        raise ValueError(f"unknown metric {metric!r}")

    sources = sorted({a for a, _ in pairs})
    dist_from = {s: bfs_distances(layout, s) for s in sources}
    total = 0
    for a, b in pairs:
        d = dist_from[a][b]
        if d < 0:
            raise UnreachablePairError((divmod(a, W), divmod(b, W)))
        total += d
    return total / len(pairs)


def measure_vector(layout: Layout, scenario: Scenario, metric: str = "shortest_path") -> tuple:
    """(connected shelf components, mean task length) for archive binning."""
    return (
        float(connected_shelf_components(layout)),
        mean_task_length(layout, scenario, metric=metric),
    )
