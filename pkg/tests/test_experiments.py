"""Tests for experiment configs, the optimize/evaluate drivers, and
artifact persistence."""

from __future__ import annotations

import hashlib
import json
import math

import pytest

from warehouse_opt.experiments import (
    ConfigError,
    EvalReport,
    EvaluationPreconditionError,
    ExperimentConfig,
    RunRecord,
    cmd_evaluate,
    cmd_export_heatmap,
    cmd_gen_human_layout,
    cmd_optimize,
    cmd_repair,
    cmd_stats,
    config_from_dict,
    config_from_json,
    config_to_json,
    load_config,
)
from warehouse_opt.layouts import Scenario, TileType, parse_layout, validate
from warehouse_opt.qd import load_archive
from warehouse_opt.repair import RepairStatus
from warehouse_opt.sim.engine import MapfSolver, Planner, derive_run_seed
from warehouse_opt.templates import embed_storage


def tiny_dict(**overrides):
    """Smallest config that exercises the full optimize pipeline."""
    data = {
        "frame": {"kind": "desk", "storage": [4, 4], "terminals": 2,
                  "side_margin": 1, "top_margin": 1},
        "scenario": "workstation",
        "n_s": 2,
        "n_agents": 2,
        "archive": {"dims": [6, 8], "component_range": [0.0, 8.0],
                    "task_length_range": [1.0, 9.0],
                    "downsample_dims": [3, 4]},
        "mapf_solver": "prioritized",
        "horizon": 60,
        "n_sims": 1,
        "batch": 10,
        "eval_budget": 20,
        "eval_horizon": 60,
        "eval_runs": 3,
        "seed": 5,
    }
    data.update(overrides)
    return data


def tiny_config(tmp_path=None, **overrides):
    if tmp_path is not None:
        overrides.setdefault("output_dir", str(tmp_path / "run"))
    return config_from_dict(tiny_dict(**overrides))


# ---------------------------------------------------------------------------
# config resolution


def test_desk_preset():
    config = config_from_dict({"setup": "desk"})
    assert config.name == "setup-desk"
    assert config.scenario is Scenario.WORKSTATION
    assert (config.frame.height, config.frame.width) == (13, 9)
    assert (config.frame.storage.row, config.frame.storage.col) == (2, 1)
    assert config.n_s == 12
    assert config.n_agents == 20
    assert config.horizon == 500
    assert config.n_sims == 3
    assert config.eval_budget == 500
    assert config.batch == 10
    assert config.archive.dims == (6, 10)
    assert config.archive.downsample_dims == (3, 5)
    assert config.mapf_solver is MapfSolver.PRIORITIZED
    assert config.planner is Planner.RHCR


@pytest.mark.parametrize("setup,n_agents,n_s,full,dims,inner", [
    (1, 88, 20, (17, 20), (15, 100), 10_000),
    (2, 60, 20, (9, 16), (30, 100), 10_000),
    (3, 90, 40, (17, 16), (100, 100), 50_000),
    (4, 200, 240, (33, 36), (15, 100), 50_000),
])
def test_named_setups(setup, n_agents, n_s, full, dims, inner):
    config = config_from_dict({"setup": setup})
    assert config.n_agents == n_agents
    assert config.n_s == n_s
    assert (config.frame.height, config.frame.width) == full
    assert config.archive.dims == dims
    assert config.inner_iterations == inner
    assert config.batch == 50
    assert config.eval_budget == 10_000
    assert config.horizon == 1000
    assert config.n_sims == 5
    assert config.eval_horizon == 5000
    assert config.eval_runs == 10
    assert config.scenario is (Scenario.HOME if setup == 1
                               else Scenario.WORKSTATION)


def test_overrides_beat_preset():
    config = config_from_dict({"setup": "desk", "n_agents": 5,
                               "horizon": 120, "seed": 9})
    assert config.n_agents == 5
    assert config.horizon == 120
    assert config.seed == 9
    assert config.eval_budget == 500   # untouched preset value


@pytest.mark.parametrize("data,path", [
    ({}, "frame"),
    ({"frame": {"kind": "desk", "storage": [4, 4], "terminals": 2}},
     "archive"),
    ({"setup": 9}, "setup"),
    ({"setup": "desk", "bogus": 1}, "bogus"),
    ({"setup": "desk", "n_agents": -1}, "n_agents"),
    ({"setup": "desk", "n_agents": True}, "n_agents"),
    ({"setup": "desk", "algorithm": "anneal"}, "algorithm"),
    ({"setup": "desk", "scenario": "lunar"}, "scenario"),
    ({"setup": "desk", "mapf_solver": "cbs"}, "mapf_solver"),
    ({"setup": "desk", "n_s": 64}, "n_s"),
    ({"setup": "desk", "archive": {"dims": [4, 4]}},
     "archive.component_range"),
])
def test_config_errors_carry_field_paths(data, path):
    with pytest.raises(ConfigError) as err:
        config_from_dict(data)
    assert err.value.path == path


def test_explicit_frame_kinds():
    ws = config_from_dict(tiny_dict(
        frame={"kind": "workstation", "storage": [5, 6], "terminals": 2}))
    assert (ws.frame.height, ws.frame.width) == (5, 10)
    home = config_from_dict(tiny_dict(
        frame={"kind": "home", "storage": [4, 4], "terminals": 8,
               "margin": 4},
        scenario="home", planner="dpp"))
    assert (home.frame.height, home.frame.width) == (12, 12)
    assert home.frame.count(TileType.HOME) == 8
    assert home.planner is Planner.DPP


def test_frame_from_file(tmp_path):
    frame = config_from_dict({"setup": "desk"}).frame
    path = tmp_path / "frame.map"
    path.write_text(__import__("warehouse_opt.layouts", fromlist=["x"])
                    .serialize_layout(frame))
    config = config_from_dict(tiny_dict(frame={"file": str(path)}))
    assert config.frame == frame


def test_load_config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(tiny_dict()))
    config = load_config(path)
    assert config.batch == 10
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(bad)


def test_resolved_snapshot_roundtrip():
    config = tiny_config()
    data = json.loads(json.dumps(config_to_json(config)))
    assert config_from_json(data) == config


# ---------------------------------------------------------------------------
# optimize driver


def test_optimize_writes_all_artifacts(tmp_path):
    config = tiny_config(tmp_path)
    result = cmd_optimize(config)
    out = result.output_dir
    assert len(result.stats_rows) == 2          # ceil(20 / 10)
    assert result.stats_rows[-1]["evaluations"] == 20

    assert json.loads((out / "config.json").read_text())["batch"] == 10
    lines = (out / "stats.jsonl").read_text().splitlines()
    assert [json.loads(x)["iteration"] for x in lines] == [1, 2]
    state = json.loads((out / "checkpoint" / "state.json").read_text())
    assert state == {"loop": "mapelites", "iteration": 2, "evaluations": 20}
    assert (out / "archive" / "elites.csv").exists()
    assert (out / "archive" / "archive.json").exists()
    assert (out / "archive" / "heatmap.csv").exists()
    best = parse_layout((out / "best.map").read_text())
    assert validate(best, config.scenario).is_valid

    reloaded = load_archive(out / "archive")
    assert set(reloaded.cells) == set(result.archive.cells)

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["package"] == "warehouse-opt"
    assert "config.json" in manifest["files"]
    digest = hashlib.sha256((out / "config.json").read_bytes()).hexdigest()
    assert manifest["files"]["config.json"] == digest


def test_stats_log_row_count(tmp_path):
    config = tiny_config(tmp_path, eval_budget=35)
    result = cmd_optimize(config)
    assert len(result.stats_rows) == math.ceil(35 / config.batch)
    assert result.stats_rows[-1]["evaluations"] == 35


def test_rerun_same_seed_identical_archive_table(tmp_path):
    a = cmd_optimize(tiny_config(output_dir=str(tmp_path / "a")))
    b = cmd_optimize(tiny_config(output_dir=str(tmp_path / "b")))
    csv_a = (a.output_dir / "archive" / "elites.csv").read_bytes()
    csv_b = (b.output_dir / "archive" / "elites.csv").read_bytes()
    assert csv_a == csv_b
    assert (a.output_dir / "best.map").read_bytes() == \
        (b.output_dir / "best.map").read_bytes()


def test_interrupt_and_resume_matches_uninterrupted(tmp_path):
    full = cmd_optimize(tiny_config(output_dir=str(tmp_path / "full"),
                                    eval_budget=30))
    # an interrupted run leaves a checkpoint behind; resuming with the
    # full budget must land on the same archive
    cmd_optimize(tiny_config(output_dir=str(tmp_path / "part"),
                             eval_budget=20))
    resumed = cmd_optimize(tiny_config(output_dir=str(tmp_path / "part"),
                                       eval_budget=30), resume=True)
    assert len(resumed.stats_rows) == 3
    csv_full = (full.output_dir / "archive" / "elites.csv").read_bytes()
    csv_part = (resumed.output_dir / "archive" / "elites.csv").read_bytes()
    assert csv_full == csv_part


def test_resume_without_checkpoint_runs_fresh(tmp_path):
    result = cmd_optimize(tiny_config(tmp_path), resume=True)
    assert result.stats_rows[-1]["evaluations"] == 20


def test_optimize_requires_output_dir():
    with pytest.raises(ConfigError) as err:
        cmd_optimize(tiny_config())
    assert err.value.path == "output_dir"


def test_dsage_without_service_degrades(tmp_path, caplog):
    import logging

    config = tiny_config(tmp_path, algorithm="dsage")
    with caplog.at_level(logging.WARNING):
        result = cmd_optimize(config)
    assert any("plain quality-diversity" in r.message for r in caplog.records)
    state = json.loads((result.output_dir / "checkpoint" / "state.json")
                       .read_text())
    assert state["loop"] == "mapelites"
    plain = cmd_optimize(tiny_config(output_dir=str(tmp_path / "plain")))
    assert (result.output_dir / "archive" / "elites.csv").read_bytes() == \
        (plain.output_dir / "archive" / "elites.csv").read_bytes()


def test_resume_dsage_checkpoint_needs_service(tmp_path):
    config = tiny_config(tmp_path)
    result = cmd_optimize(config)
    state_path = result.output_dir / "checkpoint" / "state.json"
    state = json.loads(state_path.read_text())
    state["loop"] = "dsage"
    state_path.write_text(json.dumps(state))
    with pytest.raises(ConfigError) as err:
        cmd_optimize(config.replaced(algorithm="dsage"), resume=True)
    assert err.value.path == "surrogate_url"


# ---------------------------------------------------------------------------
# evaluate driver


def human_toy(config):
    return cmd_gen_human_layout(storage=(4, 4), terminals=2,
                                scenario=config.scenario, n_s=2)


def desk_toy_layout(config):
    """Frame with a simple two-shelf storage fill, valid by construction."""
    tiles = {TileType.SHELF: "@", TileType.ENDPOINT: "e"}
    fill = [
        "e.e.",
        "@.@.",
        "e.e.",
        "....",
    ]
    storage = []
    for row in fill:
        for ch in row:
            storage.append({"@": TileType.SHELF, "e": TileType.ENDPOINT,
                            ".": TileType.EMPTY}[ch])
    return embed_storage(config.frame, storage)


def test_evaluate_report_and_files(tmp_path):
    config = tiny_config()
    layout = desk_toy_layout(config)
    out = tmp_path / "eval"
    report = cmd_evaluate(layout, config, output_dir=out)
    assert len(report.runs) == 3
    assert [r.seed for r in report.runs] == \
        [derive_run_seed(config.seed, i) for i in range(3)]
    assert report.success_rate == 1.0
    assert report.throughput_mean is not None
    payload = json.loads((out / "report.json").read_text())
    assert payload["success_rate"] == 1.0
    assert len(payload["runs"]) == 3

    series = (out / "finished_per_timestep.csv").read_text().splitlines()
    assert series[0] == "timestep,run_0,run_1,run_2"
    assert len(series) == 1 + config.eval_horizon

    usage = [[float(v) for v in line.split(",")]
             for line in (out / "tile_usage.csv").read_text().splitlines()]
    assert len(usage) == layout.height
    assert len(usage[0]) == layout.width
    assert sum(sum(row) for row in usage) == pytest.approx(1.0, abs=1e-9)


def test_evaluate_is_reproducible():
    config = tiny_config()
    layout = desk_toy_layout(config)
    a = cmd_evaluate(layout, config)
    b = cmd_evaluate(layout, config)
    assert [r.throughput for r in a.runs] == [r.throughput for r in b.runs]


def test_evaluate_rejects_invalid_layout():
    config = tiny_config()
    bad = embed_storage(config.frame, [TileType.SHELF] * 16)
    with pytest.raises(EvaluationPreconditionError) as err:
        cmd_evaluate(bad, config)
    assert not err.value.report.is_valid
    assert err.value.report.violations


def test_agent_sweep(tmp_path):
    config = tiny_config(eval_runs=2)
    layout = desk_toy_layout(config)
    out = tmp_path / "sweep"
    report = cmd_evaluate(layout, config, output_dir=out,
                          agent_counts=[1, 2])
    assert [s.n_agents for s in report.sweep] == [1, 2]
    lines = (out / "throughput_vs_agents.csv").read_text().splitlines()
    assert lines[0] == "n_agents,success_rate,throughput_mean,throughput_sd"
    assert len(lines) == 3
    payload = json.loads((out / "report.json").read_text())
    assert len(payload["agents_sweep"]) == 2


def test_report_with_no_successful_runs():
    report = EvalReport(scenario=Scenario.WORKSTATION, n_agents=4,
                        horizon=100)
    report.runs.append(RunRecord(run=0, seed=1, throughput=0.2, finished=20,
                                 congested=True, congestion_timestep=17,
                                 elapsed_steps=17))
    assert report.success_rate == 0.0
    assert report.throughput_mean is None
    assert report.throughput_sd is None
    payload = report.to_json()
    assert payload["throughput_mean"] is None


# ---------------------------------------------------------------------------
# small verbs


def test_gen_human_layout_named_setups():
    large = cmd_gen_human_layout(setup=4)
    assert large.count(TileType.SHELF) == 240
    desk = cmd_gen_human_layout(setup="desk")
    assert desk.count(TileType.SHELF) == 12
    assert validate(desk, Scenario.WORKSTATION).is_valid


def test_gen_human_layout_explicit():
    layout = cmd_gen_human_layout(storage=(6, 6), terminals=2,
                                  scenario=Scenario.WORKSTATION, n_s=4)
    assert layout.count(TileType.SHELF) == 4
    with pytest.raises(ConfigError):
        cmd_gen_human_layout(storage=(6, 6), terminals=2)


def test_cmd_repair_passthrough():
    config = tiny_config()
    layout = embed_storage(config.frame, [TileType.EMPTY] * 16)
    outcome = cmd_repair(layout, config.scenario, config.n_s)
    assert outcome.status in (RepairStatus.OPTIMAL, RepairStatus.FEASIBLE)
    assert outcome.repaired.count(TileType.SHELF) == 2


def test_stats_and_heatmap_export(tmp_path):
    result = cmd_optimize(tiny_config(tmp_path))
    stats = cmd_stats(result.output_dir / "archive")
    assert stats["num_elites"] == len(result.archive.cells)
    assert stats["kind"] == "ground_truth"
    assert stats["dims"] == [6, 8]
    assert stats["best_objective"] >= 0

    csv_path = tmp_path / "heat.csv"
    png_path = tmp_path / "heat.png"
    cmd_export_heatmap(result.output_dir / "archive", csv_path,
                       image_path=png_path)
    assert csv_path.exists()
    assert png_path.stat().st_size > 0
