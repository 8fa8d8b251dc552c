"""Experiment configuration, drivers, and artifact persistence.

A single declarative config file (JSON) describes a whole run.  Named
setups resolve to the benchmark presets (frame geometry, agent counts,
archive shape); any explicit key overrides the preset.  Drivers write
every artifact under one output directory and record a manifest of
versions and content hashes, so a run is reproducible from (config,
master seed) alone.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import platform
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from .dsage import (
    DsageConfig,
    HttpSurrogateClient,
    MapElitesConfig,
    run_dsage,
    run_mapelites,
)
from .layouts import (
    Layout,
    Scenario,
    ValidationReport,
    layout_from_json,
    layout_to_json,
    parse_layout,
    serialize_layout,
    validate,
)
from .qd import (
    SETUP_ARCHIVES,
    Archive,
    ArchiveConfig,
    ArchiveKind,
    load_archive,
    save_archive,
    save_heatmap,
)
from .repair import DEFAULT_TIME_LIMIT, repair
from .repair.solvers import CommandLineAdapter, solver_from_env
from .sim.engine import (
    MapfSolver,
    Planner,
    SimConfig,
    derive_run_seed,
    run_simulation,
)
from .templates import SETUP_SHELF_COUNTS, desk_frame, home_frame, \
    human_style_layout, setup_frame, workstation_frame

logger = logging.getLogger(__name__)

# desk-scale preset: small enough for laptop runs, big enough that layout
# quality separates from noise (see templates.desk_frame for the geometry).
# The archive is coarser than the benchmark setups and batches are small:
# at a 500-evaluation budget the loop needs many selection rounds over a
# modest elite pool to out-search an equal-budget random baseline.
DESK_STORAGE = (9, 7)
DESK_ARCHIVE = ArchiveConfig(dims=(6, 10), component_range=(0.0, 12.0),
                             task_length_range=(2.0, 14.0),
                             downsample_dims=(3, 5))


class ConfigError(ValueError):
    """Invalid experiment configuration; ``path`` names the bad field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class EvaluationPreconditionError(ValueError):
    """Layout rejected before simulation; carries the ValidationReport."""

    def __init__(self, report: ValidationReport):
        self.report = report
        rules = sorted(report.rules()) or ["invalid"]
        super().__init__("layout failed validation: " + ", ".join(rules))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs: geometry, simulator, optimizer, outputs."""

    scenario: Scenario
    frame: Layout
    n_s: int
    n_agents: int
    archive: ArchiveConfig
    name: str = "experiment"
    planner: Planner = Planner.RHCR
    mapf_solver: MapfSolver = MapfSolver.PBS
    rhcr_window: int = 10
    rhcr_period: int = 5
    horizon: int = 1000
    n_sims: int = 5
    eval_horizon: int = 5000
    eval_runs: int = 10
    batch: int = 50
    eval_budget: int = 10_000
    algorithm: str = "mapelites"
    n_rand: int = 500
    inner_iterations: int = 10_000
    seed: int = 0
    repair_time_limit: float = DEFAULT_TIME_LIMIT
    solver_path: Optional[str] = None
    surrogate_url: Optional[str] = None
    output_dir: Optional[str] = None

    def replaced(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# named presets: frame geometry plus the knobs that differ between rows
_SETUP_PRESETS = {
    1: {"scenario": "home", "n_agents": 88, "inner_iterations": 10_000},
    2: {"scenario": "workstation", "n_agents": 60,
        "inner_iterations": 10_000},
    3: {"scenario": "workstation", "n_agents": 90,
        "inner_iterations": 50_000},
    4: {"scenario": "workstation", "n_agents": 200,
        "inner_iterations": 50_000},
}

_DESK_PRESET = {
    "scenario": "workstation",
    "n_agents": 20,
    "horizon": 500,
    "n_sims": 3,
    "eval_horizon": 500,
    "eval_budget": 500,
    "batch": 10,
    "mapf_solver": "prioritized",
}

_INT_FIELDS = ("n_s", "n_agents", "rhcr_window", "rhcr_period", "horizon",
               "n_sims", "eval_horizon", "eval_runs", "batch", "eval_budget",
               "n_rand", "inner_iterations", "seed")


def _expect(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise ConfigError(path, message)


def _parse_enum(value, parser, path, label):
    try:
        return parser(value)
    except (ValueError, KeyError):
        raise ConfigError(path, f"unknown {label} {value!r}") from None


def _archive_from_dict(data: dict, path: str) -> ArchiveConfig:
    _expect(isinstance(data, dict), path, "must be an object")
    for key in ("dims", "component_range", "task_length_range",
                "downsample_dims"):
        _expect(key in data, f"{path}.{key}", "is required")
        _expect(isinstance(data[key], (list, tuple)) and len(data[key]) == 2,
                f"{path}.{key}", "must be a pair")
    try:
        return ArchiveConfig(dims=tuple(data["dims"]),
                             component_range=tuple(data["component_range"]),
                             task_length_range=tuple(data["task_length_range"]),
                             downsample_dims=tuple(data["downsample_dims"]))
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _frame_from_dict(data: dict, path: str = "frame") -> Layout:
    _expect(isinstance(data, dict), path, "must be an object")
    if "file" in data:
        return parse_layout(Path(data["file"]).read_text())
    _expect("kind" in data, f"{path}.kind", "is required")
    kind = data["kind"]
    _expect("storage" in data and len(data["storage"]) == 2,
            f"{path}.storage", "must be [height, width]")
    h, w = data["storage"]
    terminals = data.get("terminals")
    _expect(isinstance(terminals, int) and terminals > 0,
            f"{path}.terminals", "must be a positive integer")
    try:
        if kind == "workstation":
            return workstation_frame(h, w, terminals)
        if kind == "desk":
            return desk_frame(h, w, terminals,
                              side_margin=data.get("side_margin", 1),
                              top_margin=data.get("top_margin", 2))
        if kind == "home":
            return home_frame(h, w, terminals, margin=data.get("margin", 4))
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.kind", f"unknown frame kind {kind!r}")


def config_from_dict(data: dict) -> ExperimentConfig:
    """Resolve a declarative config: named-setup defaults first, explicit
    keys on top.  Raises ConfigError with a field path on bad input."""
    _expect(isinstance(data, dict), "config", "must be an object")
    known = set(ExperimentConfig.__dataclass_fields__) | {"setup", "frame"}
    for key in data:
        _expect(key in known, key, "unknown field")

    merged: dict = {}
    frame = None
    setup = data.get("setup")
    if setup is not None:
        if setup == "desk":
            merged.update(_DESK_PRESET)
            frame = desk_frame(*DESK_STORAGE, n_w=4, side_margin=1,
                               top_margin=2)
            merged.setdefault("archive", DESK_ARCHIVE)
            merged.setdefault("n_s", 12)
        elif setup in _SETUP_PRESETS:
            merged.update(_SETUP_PRESETS[setup])
            frame = setup_frame(setup)
            merged.setdefault("archive", SETUP_ARCHIVES[setup])
            merged.setdefault("n_s", SETUP_SHELF_COUNTS[setup])
        else:
            raise ConfigError("setup", f"unknown setup {setup!r}; expected "
                                       "1-4 or 'desk'")
        merged.setdefault("name", f"setup-{setup}")
    merged.update({k: v for k, v in data.items()
                   if k not in ("setup", "frame", "archive")})

    if "frame" in data:
        frame = _frame_from_dict(data["frame"])
    _expect(frame is not None, "frame",
            "is required when no setup is named")
    if "archive" in data:
        merged["archive"] = _archive_from_dict(data["archive"], "archive")
    _expect("archive" in merged, "archive",
            "is required when no setup is named")

    for key in ("scenario", "n_s", "n_agents"):
        _expect(key in merged, key, "is required when no setup is named")
    if isinstance(merged.get("scenario"), str):
        merged["scenario"] = _parse_enum(merged["scenario"], Scenario.parse,
                                         "scenario", "scenario")
    if isinstance(merged.get("planner"), str):
        merged["planner"] = _parse_enum(merged["planner"], Planner,
                                        "planner", "planner")
    if isinstance(merged.get("mapf_solver"), str):
        merged["mapf_solver"] = _parse_enum(merged["mapf_solver"], MapfSolver,
                                            "mapf_solver", "MAPF solver")
    for key in _INT_FIELDS:
        if key in merged:
            _expect(isinstance(merged[key], int) and not
                    isinstance(merged[key], bool) and merged[key] >= 0,
                    key, "must be a non-negative integer")
    if "algorithm" in merged:
        _expect(merged["algorithm"] in ("mapelites", "dsage"), "algorithm",
                "must be 'mapelites' or 'dsage'")
    n_storage = frame.storage.height * frame.storage.width
    _expect(merged["n_s"] <= n_storage, "n_s",
            f"exceeds the {n_storage}-tile storage area")
    return ExperimentConfig(frame=frame, **merged)


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"not valid JSON: {exc}") from None
    return config_from_dict(data)


def config_to_json(config: ExperimentConfig) -> dict:
    """Resolved-config snapshot; round-trips through config_from_dict."""
    out = {
        "name": config.name,
        "scenario": config.scenario.label,
        "frame": layout_to_json(config.frame),
        "n_s": config.n_s,
        "n_agents": config.n_agents,
        "planner": config.planner.value,
        "mapf_solver": config.mapf_solver.value,
        "rhcr_window": config.rhcr_window,
        "rhcr_period": config.rhcr_period,
        "horizon": config.horizon,
        "n_sims": config.n_sims,
        "eval_horizon": config.eval_horizon,
        "eval_runs": config.eval_runs,
        "archive": {
            "dims": list(config.archive.dims),
            "component_range": list(config.archive.component_range),
            "task_length_range": list(config.archive.task_length_range),
            "downsample_dims": list(config.archive.downsample_dims),
        },
        "batch": config.batch,
        "eval_budget": config.eval_budget,
        "algorithm": config.algorithm,
        "n_rand": config.n_rand,
        "inner_iterations": config.inner_iterations,
        "seed": config.seed,
        "repair_time_limit": config.repair_time_limit,
        "solver_path": config.solver_path,
        "surrogate_url": config.surrogate_url,
        "output_dir": config.output_dir,
    }
    return out


def config_from_json(data: dict) -> ExperimentConfig:
    merged = dict(data)
    frame = layout_from_json(merged.pop("frame"))
    merged["scenario"] = Scenario.parse(merged["scenario"])
    merged["planner"] = Planner(merged["planner"])
    merged["mapf_solver"] = MapfSolver(merged["mapf_solver"])
    merged["archive"] = _archive_from_dict(merged["archive"], "archive")
    return ExperimentConfig(frame=frame, **merged)


def make_sim_config(config: ExperimentConfig, horizon: int = None,
                    n_agents: int = None, seed: int = None) -> SimConfig:
    return SimConfig(
        scenario=config.scenario,
        n_agents=config.n_agents if n_agents is None else n_agents,
        horizon=config.horizon if horizon is None else horizon,
        planner=config.planner,
        rhcr_window=config.rhcr_window,
        rhcr_period=config.rhcr_period,
        mapf_solver=config.mapf_solver,
        seed=config.seed if seed is None else seed,
    )


def resolve_solver(config: ExperimentConfig):
    if config.solver_path:
        return CommandLineAdapter(config.solver_path)
    return solver_from_env()


def mapelites_config(config: ExperimentConfig) -> MapElitesConfig:
    return MapElitesConfig(
        frame=config.frame, scenario=config.scenario, n_s=config.n_s,
        archive=config.archive, sim=make_sim_config(config),
        n_sims=config.n_sims, batch=config.batch, seed=config.seed,
        solver=resolve_solver(config),
        repair_time_limit=config.repair_time_limit,
    )


# ---------------------------------------------------------------------------
# optimize driver


@dataclass
class OptimizeResult:
    archive: Archive
    stats_rows: list
    output_dir: Path
    best: Optional[Layout]
    dataset_size: int = 0
    model_ref: object = None


def _best_elite(archive: Archive):
    if not archive.cells:
        return None
    return max(archive.cells.values(), key=lambda e: e.objective)


def _dataset_record_json(record) -> dict:
    return {
        "unrepaired": layout_to_json(record.unrepaired),
        "repaired": layout_to_json(record.repaired),
        "tile_usage_normalized": list(record.tile_usage_normalized),
        "objective": record.objective,
        "measures": list(record.measures),
    }


def _dataset_record_from_json(data):
    from .dsage import DatasetRecord

    return DatasetRecord(
        unrepaired=layout_from_json(data["unrepaired"]),
        repaired=layout_from_json(data["repaired"]),
        tile_usage_normalized=tuple(data["tile_usage_normalized"]),
        objective=data["objective"],
        measures=tuple(data["measures"]),
    )


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out_dir: Path, config: ExperimentConfig) -> dict:
    """Versions plus a content hash of every artifact in the run dir."""
    config_bytes = json.dumps(config_to_json(config),
                              sort_keys=True).encode()
    files = {}
    for p in sorted(out_dir.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            files[p.relative_to(out_dir).as_posix()] = _sha256(p)
    manifest = {
        "package": "warehouse-opt",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "config_sha256": hashlib.sha256(config_bytes).hexdigest(),
        "files": files,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest


class _Checkpointer:
    """Writes the resumable state at every iteration/phase boundary and
    mirrors stats rows into stats.jsonl."""

    def __init__(self, out_dir: Path, loop: str, archive: Archive,
                 dataset: Optional[list], keep_rows: list):
        self.out_dir = out_dir
        self.loop = loop
        self.archive = archive
        self.dataset = dataset
        self.rows = keep_rows
        self.stats_path = out_dir / "stats.jsonl"
        with self.stats_path.open("w") as fh:
            for row in keep_rows:
                fh.write(json.dumps(row) + "\n")

    def __call__(self, stats) -> None:
        row = stats.to_json()
        self.rows.append(row)
        with self.stats_path.open("a") as fh:
            fh.write(json.dumps(row) + "\n")
        ckpt = self.out_dir / "checkpoint"
        ckpt.mkdir(exist_ok=True)
        save_archive(self.archive, ckpt / "archive")
        if self.dataset is not None:
            with (ckpt / "dataset.jsonl").open("w") as fh:
                for record in self.dataset:
                    fh.write(json.dumps(_dataset_record_json(record)) + "\n")
        state = {"loop": self.loop, "iteration": stats.iteration,
                 "evaluations": stats.evaluations}
        (ckpt / "state.json").write_text(json.dumps(state))


def _load_checkpoint(out_dir: Path):
    state_path = out_dir / "checkpoint" / "state.json"
    if not state_path.exists():
        return None
    state = json.loads(state_path.read_text())
    archive = load_archive(out_dir / "checkpoint" / "archive")
    dataset = []
    dataset_path = out_dir / "checkpoint" / "dataset.jsonl"
    if dataset_path.exists():
        with dataset_path.open() as fh:
            dataset = [_dataset_record_from_json(json.loads(line))
                       for line in fh if line.strip()]
    rows = []
    stats_path = out_dir / "stats.jsonl"
    if stats_path.exists():
        with stats_path.open() as fh:
            rows = [json.loads(line) for line in fh if line.strip()]
        rows = [r for r in rows if r["iteration"] <= state["iteration"]]
    return state, archive, dataset, rows


def cmd_optimize(config: ExperimentConfig, resume: bool = False
                 ) -> OptimizeResult:
    """Run the configured optimization loop and persist its artifacts:
    resolved config, per-iteration stats log, resumable checkpoint, final
    archive table + elite layouts + heatmap, best layout, manifest."""
    if not config.output_dir:
        raise ConfigError("output_dir", "is required for optimize runs")
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.json").write_text(
        json.dumps(config_to_json(config), indent=2))

    loop = config.algorithm
    client = None
    if loop == "dsage":
        if config.surrogate_url:
            archive = config.archive
            client = HttpSurrogateClient(
                config.surrogate_url,
                measure_ranges=(archive.component_range,
                                archive.task_length_range))
        else:
            logger.warning("no surrogate service configured; running the "
                           "plain quality-diversity loop instead")
            loop = "mapelites"

    checkpoint = _load_checkpoint(out_dir) if resume else None
    evals_used = 0
    start = 0
    keep_rows: list = []
    dataset: Optional[list] = [] if loop == "dsage" else None
    if checkpoint is not None:
        state, archive, saved_dataset, keep_rows = checkpoint
        loop = state["loop"]
        if loop == "dsage" and client is None:
            raise ConfigError(
                "surrogate_url", "checkpoint came from a surrogate-assisted "
                "run; configure the surrogate service to resume it")
        evals_used = state["evaluations"]
        start = state["iteration"]
        dataset = saved_dataset if loop == "dsage" else None
        logger.info("resuming %s from iteration %d (%d evaluations spent)",
                    loop, start, evals_used)
    else:
        archive = Archive(config.archive, ArchiveKind.GROUND_TRUTH)

    base = mapelites_config(config)
    hook = _Checkpointer(out_dir, loop, archive, dataset, keep_rows)
    model_ref = None
    if loop == "dsage":
        result = run_dsage(
            DsageConfig(base=base, eval_budget=config.eval_budget,
                        n_rand=config.n_rand,
                        inner_iterations=config.inner_iterations),
            client, archive=archive, dataset=dataset,
            evals_used=evals_used, start_phase=start,
            resume=checkpoint is not None, on_phase=hook)
        archive = result.archive
        model_ref = result.model_ref
    else:
        archive = run_mapelites(base, config.eval_budget, archive=archive,
                                evals_used=evals_used, start_iteration=start,
                                on_iteration=hook)

    save_archive(archive, out_dir / "archive")
    save_heatmap(archive, out_dir / "archive" / "heatmap.csv")
    best = _best_elite(archive)
    if best is not None:
        (out_dir / "best.map").write_text(serialize_layout(best.repaired))
    write_manifest(out_dir, config)
    return OptimizeResult(archive=archive, stats_rows=hook.rows,
                          output_dir=out_dir,
                          best=best.repaired if best else None,
                          dataset_size=len(dataset) if dataset else 0,
                          model_ref=model_ref)


# ---------------------------------------------------------------------------
# evaluate driver


@dataclass(frozen=True)
class RunRecord:
    run: int
    seed: int
    throughput: float
    finished: int
    congested: bool
    congestion_timestep: Optional[int]
    elapsed_steps: int

    def to_json(self) -> dict:
        return {
            "run": self.run, "seed": self.seed,
            "throughput": self.throughput, "finished": self.finished,
            "congested": self.congested,
            "congestion_timestep": self.congestion_timestep,
            "elapsed_steps": self.elapsed_steps,
        }


@dataclass
class EvalReport:
    """Simulation summary over the evaluation repeats.  Throughput mean
    and sd cover only runs that finished without congestion."""

    scenario: Scenario
    n_agents: int
    horizon: int
    runs: list = field(default_factory=list)
    sweep: list = field(default_factory=list)

    @property
    def success_rate(self) -> float:
        if not self.runs:
            return 0.0
        return sum(1 for r in self.runs if not r.congested) / len(self.runs)

    @property
    def throughput_mean(self) -> Optional[float]:
        good = [r.throughput for r in self.runs if not r.congested]
        return statistics.fmean(good) if good else None

    @property
    def throughput_sd(self) -> Optional[float]:
        good = [r.throughput for r in self.runs if not r.congested]
        if len(good) < 2:
            return 0.0 if good else None
        return statistics.stdev(good)

    def to_json(self) -> dict:
        payload = {
            "scenario": self.scenario.label,
            "n_agents": self.n_agents,
            "horizon": self.horizon,
            "success_rate": self.success_rate,
            "throughput_mean": self.throughput_mean,
            "throughput_sd": self.throughput_sd,
            "runs": [r.to_json() for r in self.runs],
        }
        if self.sweep:
            payload["agents_sweep"] = [s.to_json() for s in self.sweep]
        return payload


def _run_series(layout: Layout, config: ExperimentConfig, n_agents: int):
    """One evaluation block: eval_runs sims with logged per-run seeds."""
    sim = make_sim_config(config, horizon=config.eval_horizon,
                          n_agents=n_agents)
    report = EvalReport(scenario=config.scenario, n_agents=n_agents,
                        horizon=config.eval_horizon)
    results = []
    for i in range(config.eval_runs):
        seed = derive_run_seed(config.seed, i)
        result = run_simulation(layout, sim.replaced(seed=seed))
        results.append(result)
        report.runs.append(RunRecord(
            run=i, seed=seed, throughput=result.throughput,
            finished=sum(result.finished_per_timestep),
            congested=result.congested,
            congestion_timestep=result.congestion_timestep,
            elapsed_steps=result.elapsed_steps))
    return report, results


def _write_series_csv(path: Path, results) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestep"] +
                        [f"run_{i}" for i in range(len(results))])
        longest = max(len(r.finished_per_timestep) for r in results)
        for t in range(longest):
            row = [t + 1]
            for r in results:
                series = r.finished_per_timestep
                row.append(series[t] if t < len(series) else "")
            writer.writerow(row)


def _write_usage_csv(path: Path, results, height: int, width: int) -> None:
    total = [0] * (height * width)
    for r in results:
        for i, v in enumerate(r.tile_usage):
            total[i] += v
    grand = sum(total) or 1
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        for row in range(height):
            writer.writerow([total[row * width + c] / grand
                             for c in range(width)])


def cmd_evaluate(layout: Layout, config: ExperimentConfig,
                 output_dir=None, agent_counts=None) -> EvalReport:
    """Evaluate ``layout`` with the configured simulator: eval_runs
    repeats at the evaluation horizon, plus an optional throughput-vs-
    agent-count sweep.  Writes report.json and plot-ready CSVs when an
    output directory is given."""
    check = validate(layout, config.scenario, n_agents=config.n_agents)
    if not check.ok_for(config.scenario):
        raise EvaluationPreconditionError(check)

    report, results = _run_series(layout, config, config.n_agents)
    sweep = []
    for count in agent_counts or ():
        check = validate(layout, config.scenario, n_agents=count)
        if not check.ok_for(config.scenario):
            raise EvaluationPreconditionError(check)
        sweep.append(_run_series(layout, config, count)[0])

    report.sweep = sweep
    if output_dir is not None:
        out_dir = Path(output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(
            json.dumps(report.to_json(), indent=2))
        _write_series_csv(out_dir / "finished_per_timestep.csv", results)
        _write_usage_csv(out_dir / "tile_usage.csv", results,
                         layout.height, layout.width)
        if sweep:
            with (out_dir / "throughput_vs_agents.csv").open(
                    "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["n_agents", "success_rate",
                                 "throughput_mean", "throughput_sd"])
                for s in sweep:
                    writer.writerow([
                        s.n_agents, s.success_rate,
                        "" if s.throughput_mean is None else s.throughput_mean,
                        "" if s.throughput_sd is None else s.throughput_sd])
    return report


# ---------------------------------------------------------------------------
# small verbs


def cmd_repair(layout: Layout, scenario: Scenario, n_s: int,
               solver=None, time_limit: float = DEFAULT_TIME_LIMIT):
    return repair(layout, scenario, n_s, solver=solver,
                  time_limit=time_limit)


def cmd_gen_human_layout(setup=None, storage=None, terminals=None,
                         scenario=Scenario.WORKSTATION, n_s=None,
                         run: int = 10) -> Layout:
    """Row-pattern baseline layout for a named setup or explicit frame."""
    if setup is not None:
        frame = desk_frame(*DESK_STORAGE, n_w=4, side_margin=1,
                           top_margin=2) if setup == "desk" \
            else setup_frame(setup)
        if n_s is None:
            n_s = 12 if setup == "desk" else SETUP_SHELF_COUNTS[setup]
    else:
        if storage is None or terminals is None:
            raise ConfigError("storage",
                              "explicit frames need storage and terminals")
        h, w = storage
        frame = home_frame(h, w, terminals) if scenario is Scenario.HOME \
            else workstation_frame(h, w, terminals)
        if n_s is None:
            raise ConfigError("n_s", "is required for explicit frames")
    try:
        return human_style_layout(frame, n_s, run=run)
    except ValueError as exc:
        raise ConfigError("n_s", str(exc)) from exc


def cmd_stats(archive_dir) -> dict:
    archive = load_archive(archive_dir)
    stats = archive.stats()
    payload = stats.to_json()
    payload["kind"] = archive.kind.value
    payload["dims"] = list(archive.config.dims)
    best = _best_elite(archive)
    payload["best_objective"] = best.objective if best else None
    return payload


def cmd_export_heatmap(archive_dir, csv_path, image_path=None) -> None:
    """Objective heatmap as CSV, optionally rendered to a static image."""
    archive = load_archive(archive_dir)
    save_heatmap(archive, csv_path)
    if image_path is None:
        return
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    dims = archive.config.dims
    grid = np.full(dims, np.nan)
    for (i, j), elite in archive.cells.items():
        grid[i, j] = elite.objective
    fig, ax = plt.subplots(figsize=(6, 4.5))
    lo, hi = archive.config.task_length_range
    clo, chi = archive.config.component_range
    img = ax.imshow(grid, origin="lower", aspect="auto",
                    extent=(lo, hi, clo, chi))
    ax.set_xlabel("mean task length")
    ax.set_ylabel("shelf components")
    fig.colorbar(img, ax=ax, label="throughput")
    fig.tight_layout()
    fig.savefig(image_path, dpi=150)
    plt.close(fig)
