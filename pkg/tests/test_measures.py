"""Archive measures: shelf component count and mean task length."""

from __future__ import annotations

from itertools import combinations

import pytest
from hypothesis import given, settings

from conftest import layouts, make_layout
from test_layouts import oracle_components
from warehouse_opt.layouts import Layout, Scenario, StorageRect, TileType
from warehouse_opt.measures import (
    UnreachablePairError,
    connected_shelf_components,
    mean_task_length,
    measure_vector,
    task_pairs,
)


def oracle_bfs(layout, src):
    """Plain dict-based BFS over non-shelf cells."""
    W = layout.width
    dist = {src: 0}
    queue = [src]
    while queue:
        nxt = []
        for v in queue:
            r, c = divmod(v, W)
            for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= nr < layout.height and 0 <= nc < W:
                    u = nr * W + nc
                    if layout.tiles[u] != TileType.SHELF and u not in dist:
                        dist[u] = dist[v] + 1
                        nxt.append(u)
        queue = nxt
    return dist


def test_shelf_components_simple():
    layout = make_layout(
        [
            "@@.@.",
            ".....",
            "@..@@",
        ]
    )
    assert connected_shelf_components(layout) == 4


def test_shelf_components_no_shelves():
    assert connected_shelf_components(make_layout(["...", "..."])) == 0


@settings(max_examples=80, deadline=None)
@given(layouts(max_side=7))
def test_shelf_components_match_flood_fill(layout):
    shelf = [t == TileType.SHELF for t in layout.tiles]
    assert connected_shelf_components(layout) == len(oracle_components(layout, shelf))


def test_task_pairs_home_scenario():
    layout = make_layout([".ee.", ".@@.", ".ee."])
    pairs = task_pairs(layout, Scenario.HOME)
    assert len(pairs) == 6  # C(4, 2)


def test_task_pairs_workstation_scenario():
    layout = make_layout(
        ["w...w", ".ee..", ".@@..", ".ee.."],
        storage=(1, 0, 3, 5),
    )
    pairs = task_pairs(layout, Scenario.WORKSTATION)
    assert len(pairs) == 8  # 2 stations x 4 endpoints


def test_mean_task_length_two_endpoints():
    # e @ e around a shelf: the only pair detours over a corner, length 4
    layout = make_layout([".....", "e@e..", "....."])
    assert mean_task_length(layout, Scenario.HOME) == 4.0
    assert mean_task_length(layout, Scenario.HOME, metric="manhattan") == 2.0


def test_mean_task_length_matches_pairwise_bfs():
    layout = make_layout(
        [
            "w.....",
            ".ee.e.",
            ".@@.@.",
            ".ee.e.",
            "......",
        ],
        storage=(1, 0, 4, 6),
    )
    for scenario in (Scenario.HOME, Scenario.WORKSTATION):
        pairs = task_pairs(layout, scenario)
        expect = sum(oracle_bfs(layout, a)[b] for a, b in pairs) / len(pairs)
        assert mean_task_length(layout, scenario) == pytest.approx(expect)


def test_mean_task_length_no_pairs_is_zero():
    layout = make_layout(["...", "..."])
    assert mean_task_length(layout, Scenario.HOME) == 0.0
    assert mean_task_length(layout, Scenario.WORKSTATION) == 0.0


def test_unreachable_pair_raises_with_coordinates():
    # two endpoints sealed in by shelves in separate pockets
    layout = make_layout(
        [
            "e@.@e",
            "@@.@@",
        ]
    )
    with pytest.raises(UnreachablePairError) as err:
        mean_task_length(layout, Scenario.HOME)
    assert err.value.pair == ((0, 0), (0, 4))


def test_manhattan_metric_ignores_obstacles():
    layout = make_layout(["e@e"])
    assert mean_task_length(layout, Scenario.HOME, metric="manhattan") == 2.0
    with pytest.raises(UnreachablePairError):
        mean_task_length(layout, Scenario.HOME)  # BFS has no way around


def test_unknown_metric_rejected():
    with pytest.raises(ValueError, match="metric"):
        mean_task_length(make_layout(["ee"]), Scenario.HOME, metric="euclid")


def transpose(layout: Layout) -> Layout:
    tiles = tuple(
        layout.tiles[r * layout.width + c]
        for c in range(layout.width)
        for r in range(layout.height)
    )
    s = layout.storage
    return Layout(layout.width, layout.height, tiles,
                  StorageRect(s.col, s.row, s.width, s.height))


@settings(max_examples=60, deadline=None)
@given(layouts(max_side=6))
def test_measures_invariant_under_transposition(layout):
    flipped = transpose(layout)
    assert connected_shelf_components(layout) == connected_shelf_components(flipped)
    for scenario in (Scenario.HOME, Scenario.WORKSTATION):
        try:
            a = mean_task_length(layout, scenario)
        except UnreachablePairError:
            with pytest.raises(UnreachablePairError):
                mean_task_length(flipped, scenario)
            continue
        assert mean_task_length(flipped, scenario) == pytest.approx(a)


def test_measure_vector_shape():
    layout = make_layout([".ee.", ".@@.", ".ee."])
    comp, mtl = measure_vector(layout, Scenario.HOME)
    assert comp == 1.0
    assert mtl > 1.0
