"""Reservation table bookkeeping."""

from __future__ import annotations

from warehouse_opt.sim.reservations import INF, ReservationTable


def test_vertex_and_swap_blocking():
    table = ReservationTable(12)
    table.reserve_path(1, [0, 1, 2], 5)
    assert table.vertex_blocked(0, 5)
    assert table.vertex_blocked(1, 6)
    assert not table.vertex_blocked(1, 5)
    # agent 1 departs 1 at t=6 toward 2; opposing move 2->1 at t=6 swaps
    assert table.swap_blocked(2, 1, 6)
    assert not table.swap_blocked(2, 1, 5)
    assert table.swap_blocked(1, 0, 5)      # head-on against the 0->1 hop
    assert not table.swap_blocked(0, 1, 6)  # following along, not a swap


def test_ignore_own_reservations():
    table = ReservationTable(4)
    table.reserve_path(7, [0, 1], 0)
    assert table.vertex_blocked(1, 1)
    assert not table.vertex_blocked(1, 1, ignore=7)
    assert not table.swap_blocked(1, 0, 0, ignore=7)


def test_safe_intervals_split_by_reservations():
    table = ReservationTable(4)
    table.reserve_vertex(1, 2, 4)
    table.reserve_vertex(1, 2, 7)
    assert table.safe_intervals(2, 0) == [(0, 3), (5, 6), (8, INF)]
    assert table.safe_intervals(2, 5) == [(5, 6), (8, INF)]


def test_safe_intervals_with_eternal_hold():
    table = ReservationTable(4)
    table.reserve_eternal(1, 2, 10)
    assert table.safe_intervals(2, 0) == [(0, 9)]
    assert table.safe_intervals(2, 10) == []
    assert table.safe_intervals(2, 0, ignore=1) == [(0, INF)]


def test_hold_until_extends_final_tile():
    table = ReservationTable(9)
    table.reserve_path(3, [0, 1], 0, hold_until=5)
    for t in range(1, 6):
        assert table.vertex_blocked(1, t)
    assert not table.vertex_blocked(1, 6)


def test_horizon_caps_registration():
    table = ReservationTable(9)
    table.reserve_path(3, [0, 1, 2, 5, 8], 0, horizon=2)
    assert table.vertex_blocked(2, 2)
    assert not table.vertex_blocked(5, 3)
    assert not table.vertex_blocked(8, 4)


def test_remove_agent_restores_everything():
    table = ReservationTable(9)
    table.reserve_path(1, [0, 1, 2], 0, hold_until=4)
    table.reserve_eternal(1, 5, 3)
    table.reserve_path(2, [3, 4], 0)
    table.remove_agent(1)
    assert not table.vertex_blocked(0, 0)
    assert not table.vertex_blocked(2, 2)
    assert not table.vertex_blocked(5, 99)
    assert not table.swap_blocked(2, 1, 1)
    assert table.vertex_blocked(3, 0)  # other agent untouched


def test_path_clear_checks_vertices_and_swaps():
    table = ReservationTable(9)
    table.reserve_path(1, [4, 5], 2)
    assert not table.path_clear([5, 4], 2)  # head-on swap with agent 1
    assert not table.path_clear([3, 4], 1)  # lands on 4 at t=2
    assert table.path_clear([3, 4], 3)      # after agent 1 has left
    assert table.path_clear([5, 4], 2, ignore=1)
