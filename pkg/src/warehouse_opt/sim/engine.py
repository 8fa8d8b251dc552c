"""Lifelong simulation: task assignment, execution, accounting.

Agents forever alternate between goals drawn uniformly from the layout's
task tiles; reaching the active goal finishes a task and yields the next
draw.  Movement comes from one of two planner stacks: windowed replanning
of the whole fleet (RHCR) or per-timestep planning of newly idle agents
with parking paths (DPP).
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from warehouse_opt.layouts import Layout, Scenario, TileType, validate
from warehouse_opt.measures import measure_vector
from warehouse_opt.sim.dpp import DppPlanner
from warehouse_opt.sim.grid import GridIndex
from warehouse_opt.sim.types import (
    EvalResult,
    MapfSolver,
    Planner,
    SimConfig,
    SimPreconditionError,
    SimResult,
    SolverFailure,
    detect_congestion,
)
from warehouse_opt.sim.windowed import plan_window_pbs, plan_window_pp


class _Agent:
    __slots__ = ("id", "pos", "goals", "rng", "next_endpoint", "tasks",
                 "pending", "zero_at", "committed_t0", "committed_path")

    def __init__(self, aid, pos, rng):
        self.id = aid
        self.pos = pos
        self.goals = []
        self.rng = rng
        self.next_endpoint = True  # workstation scenario alternation state
        self.tasks = 0
        self.pending = True
        self.zero_at = None
        self.committed_t0 = 0
        self.committed_path = [pos]


class Simulation:
    def __init__(self, layout: Layout, config: SimConfig):
        self.layout = layout
        self.config = config
        scenario = config.scenario
        if config.validate_layout:
            report = validate(layout, scenario, config.n_agents)
            if not report.ok_for(scenario):
                raise SimPreconditionError(
                    f"layout fails {scenario.label} precondition: "
                    f"{sorted(report.rules())}"
                )
        self.grid = GridIndex(layout)
        self._endpoints = layout.tiles_of(TileType.ENDPOINT)
        self._stations = layout.tiles_of(TileType.WORKSTATION)
        self._homes = layout.tiles_of(TileType.HOME)
        self._ep_index = {tile: i for i, tile in enumerate(self._endpoints)}
        self._st_index = {tile: i for i, tile in enumerate(self._stations)}
        if scenario is Scenario.HOME:
            self._has_tasks = len(self._endpoints) >= 1
        else:
            self._has_tasks = bool(self._endpoints) and bool(self._stations)

        n = config.n_agents
        ss = np.random.SeedSequence(config.seed)
        children = ss.spawn(2 + n)
        self._order_rng = np.random.default_rng(children[1])

        starts = self._starting_positions(np.random.default_rng(children[0]))
        self.agents = [
            _Agent(i, starts[i], np.random.default_rng(children[2 + i]))
            for i in range(n)
        ]
        if config.first_goals is not None:
            if len(config.first_goals) != n:
                raise SimPreconditionError("first_goals must cover every agent")
            for agent, (r, c) in zip(self.agents, config.first_goals):
                g = layout.index(r, c)
                if not self.grid.traversable[g]:
                    raise SimPreconditionError(f"first goal ({r}, {c}) not traversable")
                agent.goals = [g]
                if scenario is Scenario.WORKSTATION:
                    agent.next_endpoint = layout.tiles[g] == TileType.WORKSTATION

        self._dpp: Optional[DppPlanner] = None
        if config.planner is Planner.DPP:
            self._dpp = DppPlanner(self.grid, self._homes,
                                   node_budget=config.sipp_node_budget)
            for agent in self.agents:
                self._dpp.park_agent(agent.id, agent.pos, 0)

    def _starting_positions(self, rng):
        cfg = self.config
        n = cfg.n_agents
        if cfg.start_locations is not None:
            if len(cfg.start_locations) != n:
                raise SimPreconditionError("start_locations must cover every agent")
            starts = [self.layout.index(r, c) for r, c in cfg.start_locations]
            if len(set(starts)) != n:
                raise SimPreconditionError("start locations must be distinct")
            for s in starts:
                if not self.grid.traversable[s]:
                    raise SimPreconditionError("start location on a shelf")
            return starts
        if cfg.scenario is Scenario.HOME:
            pool = self._homes
        else:
            pool = tuple(i for i, ok in enumerate(self.grid.traversable) if ok)
        if len(pool) < n:
            raise SimPreconditionError(
                f"{n} agents but only {len(pool)} usable start tiles"
            )
        picks = rng.choice(len(pool), size=n, replace=False)
        return [pool[int(i)] for i in picks]

    # -- task assignment --------------------------------------------------

    def _draw_goal(self, agent: _Agent):
        """Next goal tile, uniform over the scenario pool minus the tile the
        agent will depart from; that exact tile comes back only when it is
        the entire pool (a zero-length task)."""
        if self.config.scenario is Scenario.HOME:
            pool, index = self._endpoints, self._ep_index
        elif agent.next_endpoint:
            pool, index = self._endpoints, self._ep_index
        else:
            pool, index = self._stations, self._st_index
        if not pool:
            return None
        exclude = agent.goals[-1] if agent.goals else agent.pos
        ex = index.get(exclude)
        available = len(pool) - (1 if ex is not None else 0)
        if available <= 0:
            g = exclude
        else:
            k = int(agent.rng.integers(available))
            if ex is not None and k >= ex:
                k += 1
            g = pool[k]
        if self.config.scenario is Scenario.WORKSTATION:
            agent.next_endpoint = not agent.next_endpoint
        return g

    # -- planning ---------------------------------------------------------

    def _replan_window(self, t: int):
        cfg = self.config
        agents = self.agents
        positions = [a.pos for a in agents]
        goals = [a.goals for a in agents]
        draws = [lambda a=a: self._draw_goal(a) for a in agents]
        try:
            if cfg.mapf_solver is MapfSolver.PRIORITIZED:
                order = [int(i) for i in self._order_rng.permutation(len(agents))]
                return plan_window_pp(self.grid, order, positions, goals, draws,
                                      t, cfg.rhcr_window,
                                      node_budget=cfg.sipp_node_budget)
            return plan_window_pbs(self.grid, list(range(len(agents))),
                                   positions, goals, draws, t, cfg.rhcr_window,
                                   node_budget=cfg.pbs_node_budget,
                                   sipp_budget=cfg.sipp_node_budget)
        except SolverFailure:
            return None  # the whole fleet waits out this window

    def _dpp_plan_pending(self, t: int):
        for agent in self.agents:
            if not agent.goals:
                g = self._draw_goal(agent)
                if g is None:
                    continue
                agent.goals.append(g)
                if g == agent.pos:
                    agent.zero_at = t + 1
            if agent.pending and agent.goals and agent.zero_at is None:
                path = self._dpp.try_replan(agent.id, agent.pos, agent.goals[0], t)
                if path is not None:
                    agent.committed_t0 = t
                    agent.committed_path = path
                    agent.pending = False

    # -- execution --------------------------------------------------------

    def run(self, trace=None) -> SimResult:
        cfg = self.config
        T = cfg.horizon
        agents = self.agents
        grid = self.grid
        usage = [0] * grid.n_tiles
        finished_series = []
        congested = False
        congestion_t = None
        plans = None
        window_t0 = 0
        rhcr = cfg.planner is Planner.RHCR

        if trace is not None:
            trace.append(tuple(a.pos for a in agents))

        t = 0
        while t < T:
            if rhcr:
                if t % cfg.rhcr_period == 0:
                    window_t0 = t
                    plans = self._replan_window(t)
            else:
                self._dpp_plan_pending(t)

            finished = 0
            waits = []
            for agent in agents:
                old = agent.pos
                if rhcr:
                    if plans is None:
                        new = old
                    else:
                        path = plans[agent.id][0]
                        idx = t + 1 - window_t0
                        new = path[idx] if idx < len(path) else path[-1]
                else:
                    path = agent.committed_path
                    idx = t + 1 - agent.committed_t0
                    new = path[idx] if idx < len(path) else path[-1]
                agent.pos = new
                usage[new] += 1
                waits.append(new == old and self._has_tasks)
                if agent.goals and (new == agent.goals[0] or agent.zero_at == t + 1):
                    agent.zero_at = None
                    agent.goals.pop(0)
                    agent.tasks += 1
                    finished += 1
                    if not rhcr:
                        agent.pending = True
                        g = self._draw_goal(agent)
                        if g is not None:
                            agent.goals.append(g)
                            if g == agent.pos:
                                agent.zero_at = t + 2
            t += 1
            finished_series.append(finished)
            if trace is not None:
                trace.append(tuple(a.pos for a in agents))
            if cfg.early_stop_on_congestion and detect_congestion(waits):
                congested = True
                congestion_t = t
                break

        total = sum(finished_series)
        throughput = total / t if t else 0.0
        return SimResult(
            throughput=throughput,
            finished_per_timestep=tuple(finished_series),
            tile_usage=tuple(usage),
            congested=congested,
            congestion_timestep=congestion_t,
            elapsed_steps=t,
            height=self.layout.height,
            width=self.layout.width,
            n_agents=cfg.n_agents,
        )


def run_simulation(layout: Layout, config: SimConfig, trace=None) -> SimResult:
    """Execute one lifelong run; ``trace`` (a list, if given) collects the
    joint position tuple at every timestep including the start."""
    return Simulation(layout, config).run(trace)


def derive_run_seed(seed: int, run_index: int) -> int:
    """Stable per-run seed from the master seed and run number."""
    return int(np.random.SeedSequence((seed, run_index)).generate_state(1)[0])


def evaluate(layout: Layout, config: SimConfig, n_runs: int) -> EvalResult:
    """Repeat the simulation ``n_runs`` times with derived seeds.

    Congested runs contribute their truncated throughput, which is the
    congestion penalty.  Measures are layout-only and computed once.
    """
    if n_runs < 1:
        raise SimPreconditionError("n_runs must be at least 1")
    runs = []
    for k in range(n_runs):
        run_cfg = config.replaced(seed=derive_run_seed(config.seed, k))
        runs.append(run_simulation(layout, run_cfg))
    mean = sum(r.throughput for r in runs) / n_runs
    measures = measure_vector(layout, config.scenario)
    total_usage = [0] * (layout.height * layout.width)
    for r in runs:
        for i, v in enumerate(r.tile_usage):
            total_usage[i] += v
    grand = sum(total_usage)
    if grand > 0:
        normalized = tuple(v / grand for v in total_usage)
    else:
        normalized = tuple(0.0 for _ in total_usage)
    return EvalResult(
        mean_throughput=mean,
        measures=measures,
        tile_usage_normalized=normalized,
        runs=tuple(runs),
        height=layout.height,
        width=layout.width,
    )
