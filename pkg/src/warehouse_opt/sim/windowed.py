"""Windowed multi-agent planning: prioritized planning and PBS.

Both planners chain single-agent segments through each agent's upcoming
goals until the path covers the window, so task handoffs inside the window
never stall.  Paths are conflict-free for the window only; everything
beyond is provisional and gets replanned.
"""

from __future__ import annotations

from warehouse_opt.sim.grid import GridIndex
from warehouse_opt.sim.reservations import ReservationTable
from warehouse_opt.sim.sipp import sipp_search
from warehouse_opt.sim.types import AgentState, MapfSolver, SolverFailure


def plan_chain(grid, table, position, goals, draw_goal, t0, w_end,
               ignore=-1, node_budget=100_000):
    """One agent's chained path from ``t0`` until arrival reaches ``w_end``.

    ``goals`` is the agent's persistent upcoming-goal list; ``draw_goal``
    appends to it when the chain outruns the queue (return None to stop).
    Returns (path, milestones) where milestones is [(arrival_t, goal)],
    or None when some segment has no conflict-free path.
    """
    path = [position]
    milestones = []
    cur = position
    t = t0
    qi = 0
    while t < w_end:
        if qi == len(goals):
            g = draw_goal()
            if g is None:
                break
            goals.append(g)
        g = goals[qi]
        if g == cur:
            # zero-length task: finishes on the next timestep in place
            path.append(cur)
            t += 1
            milestones.append((t, g))
            qi += 1
            continue
        seg = grid.greedy_path(cur, g)
        if seg is None:
            return None
        if not table.path_clear(seg, t, ignore=ignore):
            seg = sipp_search(grid, table, cur, g, t,
                              ignore=ignore, node_budget=node_budget)
            if seg is None:
                return None
        path.extend(seg[1:])
        t += len(seg) - 1
        cur = g
        milestones.append((t, g))
        qi += 1
    return path, milestones


def _position_at(path, t0, t):
    idx = t - t0
    return path[idx] if idx < len(path) else path[-1]


def _paths_collide(path_a, path_b, t0, w_end):
    pa = path_a
    pb = path_b
    prev_a = pa[0]
    prev_b = pb[0]
    for t in range(t0 + 1, w_end + 1):
        a = _position_at(pa, t0, t)
        b = _position_at(pb, t0, t)
        if a == b:
            return True
        if a == prev_b and b == prev_a:
            return True
        prev_a, prev_b = a, b
    return False


def _first_collision(plans, agent_ids, t0, w_end):
    """Earliest (vertex before swap) colliding agent pair in the window."""
    paths = {aid: plans[aid][0] for aid in agent_ids}
    prev = {aid: paths[aid][0] for aid in agent_ids}
    for t in range(t0 + 1, w_end + 1):
        occupied = {}
        moves = {}
        swap_pair = None
        for aid in agent_ids:
            pos = _position_at(paths[aid], t0, t)
            if pos in occupied:
                return (occupied[pos], aid)
            occupied[pos] = aid
            if pos != prev[aid]:
                other = moves.get((pos, prev[aid]))
                if other is not None and swap_pair is None:
                    swap_pair = (other, aid)
                moves[(prev[aid], pos)] = aid
            prev[aid] = pos
        if swap_pair is not None:
            return swap_pair
    return None


def _hold_in_place(table, position, t0, w_end, ignore=-1):
    """Wait-out-the-window plan, legal only if nobody crosses the tile."""
    for t in range(t0, w_end + 1):
        if table.vertex_blocked(position, t, ignore):
            return None
    return [position], []


def _pp_attempt(grid, order, positions, goals, draws, t0, w_end, node_budget):
    table = ReservationTable(grid.n_tiles)
    plans = {}
    for aid in order:
        res = plan_chain(grid, table, positions[aid], goals[aid], draws[aid],
                         t0, w_end, node_budget=node_budget)
        if res is None:
            res = _hold_in_place(table, positions[aid], t0, w_end)
        if res is None:
            return None, aid
        path, _ = res
        plans[aid] = res
        arrival = t0 + len(path) - 1
        table.reserve_path(aid, path, t0, horizon=w_end,
                           hold_until=w_end if arrival < w_end else None)
    return plans, -1


def plan_window_pp(grid, order, positions, goals, draws, t0, w,
                   node_budget=100_000, max_retries=8):
    """Prioritized planning: agents plan in ``order``, each avoiding all
    earlier paths.  An agent that cannot reach its goal this window holds
    its tile instead.  When an agent is stuck anyway, the attempt restarts
    with that agent promoted to the front of the order; SolverFailure only
    after the retry budget runs out."""
    order = list(order)
    stuck = -1
    for _ in range(max_retries + 1):
        plans, stuck = _pp_attempt(grid, order, positions, goals, draws,
                                   t0, t0 + w, node_budget)
        if plans is not None:
            return plans
        order.remove(stuck)
        order.insert(0, stuck)
    raise SolverFailure(f"prioritized planning stuck on agent {stuck}")


def _ancestors(aid, orders):
    """All agents with priority over ``aid`` (transitively)."""
    out = set()
    frontier = [aid]
    while frontier:
        k = frontier.pop()
        for hi, lo in orders:
            if lo == k and hi not in out:
                out.add(hi)
                frontier.append(hi)
    return out


def _topo_below(root, orders, agent_ids):
    """Agents at or transitively below ``root``, in priority-respecting order."""
    below = {root}
    changed = True
    while changed:
        changed = False
        for hi, lo in orders:
            if hi in below and lo not in below:
                below.add(lo)
                changed = True
    # Kahn's algorithm restricted to the set, ties by agent id
    pairs = [(hi, lo) for hi, lo in orders if hi in below and lo in below]
    indeg = {k: 0 for k in below}
    for _, lo in pairs:
        indeg[lo] += 1
    ready = sorted(k for k, d in indeg.items() if d == 0)
    out = []
    while ready:
        k = ready.pop(0)
        out.append(k)
        for hi, lo in pairs:
            if hi == k:
                indeg[lo] -= 1
                if indeg[lo] == 0:
                    ready.append(lo)
        ready.sort()
    return out


def plan_window_pbs(grid, agent_ids, positions, goals, draws, t0, w,
                    node_budget=10_000, sipp_budget=100_000):
    """Priority-based search: resolve collisions by branching on pairwise
    priority orderings.  Deterministic; raises SolverFailure when the
    node budget runs out or a branch has no plan."""
    w_end = t0 + w

    def replan(aid, plans, orders):
        table = ReservationTable(grid.n_tiles)
        for other in _ancestors(aid, orders):
            path = plans[other][0]
            arrival = t0 + len(path) - 1
            table.reserve_path(other, path, t0, horizon=w_end,
                               hold_until=w_end if arrival < w_end else None)
        res = plan_chain(grid, table, positions[aid], goals[aid], draws[aid],
                         t0, w_end, node_budget=sipp_budget)
        if res is None:
            res = _hold_in_place(table, positions[aid], t0, w_end)
        return res

    root = {}
    for aid in agent_ids:
        res = replan(aid, root, frozenset())
        if res is None:
            raise SolverFailure(f"agent {aid} has no unconstrained path")
        root[aid] = res

    stack = [(frozenset(), root)]
    expansions = 0
    while stack:
        orders, plans = stack.pop()
        collision = _first_collision(plans, agent_ids, t0, w_end)
        if collision is None:
            return plans
        expansions += 1
        if expansions > node_budget:
            raise SolverFailure(f"PBS node budget {node_budget} exhausted")
        a, b = collision
        children = []
        for hi, lo in ((a, b), (b, a)):
            if lo in _ancestors(hi, orders):
                continue  # would create a priority cycle
            child_orders = orders | {(hi, lo)}
            child = dict(plans)
            feasible = True
            for k in _topo_below(lo, child_orders, agent_ids):
                anc = _ancestors(k, child_orders)
                dirty = k == lo or any(
                    _paths_collide(child[k][0], child[j][0], t0, w_end)
                    for j in anc
                )
                if not dirty:
                    continue
                res = replan(k, child, child_orders)
                if res is None:
                    feasible = False
                    break
                child[k] = res
            if feasible:
                cost = sum(len(p) for p, _ in child.values())
                children.append((cost, child_orders, child))
        # lower-cost child explored first
        children.sort(key=lambda c: c[0], reverse=True)
        for _, child_orders, child in children:
            stack.append((child_orders, child))
    raise SolverFailure("PBS exhausted its search tree without a plan")


def plan_window(layout, agents, solver: MapfSolver, w: int, seed: int = 0,
                node_budget: int = 10_000):
    """Plan each agent toward its single goal, conflict-free for ``w`` steps.

    ``agents`` are AgentStates with coordinate locations/goals.  Returns
    {agent id: [(row, col), ...]}.  Raises SolverFailure as the planners do.
    """
    import numpy as np

    grid = layout if isinstance(layout, GridIndex) else GridIndex(layout)
    ids = [a.id for a in agents]
    positions = {}
    goals = {}
    draws = {}
    for a in agents:
        positions[a.id] = grid.width * a.location[0] + a.location[1]
        goals[a.id] = (
            [grid.width * a.goal[0] + a.goal[1]] if a.goal is not None else []
        )
        draws[a.id] = lambda: None
    if solver is MapfSolver.PRIORITIZED:
        rng = np.random.default_rng(seed)
        order = [ids[i] for i in rng.permutation(len(ids))]
        plans = plan_window_pp(grid, order, positions, goals, draws, 0, w)
    else:
        plans = plan_window_pbs(grid, ids, positions, goals, draws, 0, w,
                                node_budget=node_budget)
    return {aid: [divmod(v, grid.width) for v in plans[aid][0]] for aid in ids}
