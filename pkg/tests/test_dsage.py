"""Tests for the optimization loops: budget accounting, checkpoint replay,
surrogate phase discipline, and the one-hot exchange encoding."""

from __future__ import annotations

import dataclasses
import logging

import numpy as np
import pytest
from hypothesis import given, settings

from warehouse_opt.dsage import (
    DsageConfig,
    HttpSurrogateClient,
    MapElitesConfig,
    OracleSurrogateClient,
    STREAM_EXPLOIT,
    SurrogatePrediction,
    _stream_rng,
    predict_request,
    run_dsage,
    run_mapelites,
    train_request,
)
from warehouse_opt.encoding import ONE_HOT_TYPES, from_one_hot, one_hot
from warehouse_opt.layouts import LayoutError, Scenario, TileType
from warehouse_opt.qd import Archive, ArchiveConfig, ArchiveKind
from warehouse_opt.sim.engine import MapfSolver, SimConfig
from warehouse_opt.templates import desk_frame, random_storage_fill

from conftest import layouts, make_layout

TOY_ARCHIVE = ArchiveConfig(dims=(6, 8), component_range=(0.0, 8.0),
                            task_length_range=(1.0, 9.0),
                            downsample_dims=(3, 4))


def toy_config(seed=0, batch=10, n_s=2):
    frame = desk_frame(4, 4, n_w=2, side_margin=1, top_margin=1)
    sim = SimConfig(scenario=Scenario.WORKSTATION, n_agents=2, horizon=60,
                    mapf_solver=MapfSolver.PRIORITIZED)
    return MapElitesConfig(frame=frame, scenario=Scenario.WORKSTATION,
                           n_s=n_s, archive=TOY_ARCHIVE, sim=sim,
                           n_sims=1, batch=batch, seed=seed)


def snapshot(archive):
    return Archive(archive.config, archive.kind, dict(archive.cells),
                   archive.out_of_range)


def same_cells(a, b):
    if set(a.cells) != set(b.cells):
        return False
    for cell, elite in a.cells.items():
        other = b.cells[cell]
        if elite.objective != other.objective:
            return False
        if elite.genome.tiles != other.genome.tiles:
            return False
        if elite.repaired.tiles != other.repaired.tiles:
            return False
    return True


# ---------------------------------------------------------------------------
# plain loop


def test_budget_of_one_batch_is_one_iteration():
    rows = []
    archive = run_mapelites(toy_config(seed=1), 10, on_iteration=rows.append)
    assert len(rows) == 1
    assert rows[0].evaluations == 10
    assert rows[0].iteration == 1
    assert 0 < len(archive.cells) <= 10


def test_budget_stops_mid_batch():
    rows = []
    run_mapelites(toy_config(seed=2), 15, on_iteration=rows.append)
    assert [r.evaluations for r in rows] == [10, 15]


def test_qd_score_monotone_across_iterations():
    rows = []
    run_mapelites(toy_config(seed=3), 40, on_iteration=rows.append)
    scores = [r.qd_score for r in rows]
    assert all(b >= a - 1e-12 for a, b in zip(scores, scores[1:]))
    assert rows[-1].qd_score >= rows[0].qd_score
    coverages = [r.coverage for r in rows]
    assert all(b >= a for a, b in zip(coverages, coverages[1:]))


def test_checkpoint_resume_matches_uninterrupted_run():
    config = toy_config(seed=4)
    live = Archive(config.archive, ArchiveKind.GROUND_TRUTH)
    checkpoints = []

    def capture(stats):
        checkpoints.append((stats.iteration, stats.evaluations,
                            snapshot(live)))

    full = run_mapelites(config, 30, archive=live, on_iteration=capture)
    assert len(checkpoints) >= 2
    iteration, evaluations, saved = checkpoints[0]
    resumed = run_mapelites(config, 30, archive=saved,
                            evals_used=evaluations,
                            start_iteration=iteration)
    assert same_cells(full, resumed)
    assert full.out_of_range == resumed.out_of_range


def test_same_seed_replays_identically():
    a = run_mapelites(toy_config(seed=5), 20)
    b = run_mapelites(toy_config(seed=5), 20)
    assert same_cells(a, b)


def test_all_infeasible_raises_after_stall():
    # 16 shelves fill the 4x4 storage completely: no endpoints possible
    config = dataclasses.replace(toy_config(seed=6, n_s=16),
                                 max_stall_iterations=2)
    with pytest.raises(RuntimeError, match="no repairable candidates"):
        run_mapelites(config, 5)


def test_dataset_collects_one_record_per_evaluation():
    records = []
    run_mapelites(toy_config(seed=7), 12, dataset=records)
    assert len(records) == 12
    for r in records:
        assert sum(r.tile_usage_normalized) == pytest.approx(1.0, abs=1e-9)
        assert r.objective >= 0


# ---------------------------------------------------------------------------
# surrogate-assisted loop


def oracle_for(config):
    return OracleSurrogateClient(scenario=config.scenario, n_s=config.n_s,
                                 sim=config.sim, n_sims=1)


def test_dsage_budget_exhausted_during_seeding():
    base = toy_config(seed=8, batch=5)
    config = DsageConfig(base=base, eval_budget=10, n_rand=10,
                         inner_iterations=2)
    result = run_dsage(config, oracle_for(base))
    assert len(result.dataset) == 10
    assert len(result.archive.cells) <= 10
    assert result.model_ref is not None


def test_dsage_accounting_and_phase_purity():
    base = toy_config(seed=9, batch=4)
    config = DsageConfig(base=base, eval_budget=18, n_rand=6,
                         inner_iterations=2)
    result = run_dsage(config, oracle_for(base))
    assert len(result.dataset) == 18
    objectives = {}
    for r in result.dataset:
        objectives.setdefault(r.repaired.tiles, set()).add(r.objective)
    for elite in result.archive.cells.values():
        # no surrogate prediction ever lands in the ground-truth archive
        assert elite.eval_meta is not None
        assert elite.objective == elite.eval_meta.mean_throughput
        assert elite.objective in objectives[elite.repaired.tiles]


def test_dsage_without_client_degrades_to_mapelites(caplog):
    base = toy_config(seed=10)
    config = DsageConfig(base=base, eval_budget=15, n_rand=5,
                         inner_iterations=2)
    with caplog.at_level(logging.WARNING):
        result = run_dsage(config, None)
    assert any("degrading" in r.message for r in caplog.records)
    assert result.dataset == []
    assert result.model_ref is None
    plain = run_mapelites(base, 15)
    assert same_cells(result.archive, plain)


class RecordingClient:
    """Deterministic fake surrogate: logs every batch, scores genomes by a
    cheap hash, and never trains anything."""

    def __init__(self, frame):
        self.frame = frame
        self.predict_batches = []
        self.train_calls = 0

    def predict(self, genomes):
        self.predict_batches.append([g.tiles for g in genomes])
        out = []
        for g in genomes:
            shelves = g.count(TileType.SHELF)
            out.append(SurrogatePrediction(
                repaired=g, tile_usage=None,
                objective=float(shelves % 5),
                measures=(float(shelves % 8), 1.0 + shelves % 7)))
        return out

    def train(self, records):
        self.train_calls += 1
        return {"model_ref": f"fake-{self.train_calls}"}


def test_exploitation_uses_fresh_archive_and_batched_queries():
    base = toy_config(seed=11, batch=4)
    inner = 3
    config = DsageConfig(base=base, eval_budget=30, n_rand=4,
                         inner_iterations=inner)
    client = RecordingClient(base.frame)
    result = run_dsage(config, client)
    phases = client.train_calls - 1   # first train happens after seeding
    assert phases >= 2
    assert len(client.predict_batches) == phases * inner
    assert all(len(batch) == 4 for batch in client.predict_batches)
    # phase 2 starts from an empty surrogate archive: its first batch must
    # be the random fills drawn from that phase's own stream
    rng = _stream_rng(base.seed, STREAM_EXPLOIT, 2)
    expected = [random_storage_fill(base.frame, rng).tiles for _ in range(4)]
    assert client.predict_batches[inner] == expected
    assert len(result.dataset) == 30


def test_dsage_checkpoint_resume_matches():
    base = toy_config(seed=15, batch=4)
    config = DsageConfig(base=base, eval_budget=18, n_rand=6,
                         inner_iterations=2)
    live = Archive(base.archive, ArchiveKind.GROUND_TRUTH)
    dataset = []
    checkpoints = []

    def capture(stats):
        checkpoints.append((stats.iteration, stats.evaluations,
                            snapshot(live), list(dataset)))

    full = run_dsage(config, oracle_for(base), archive=live, dataset=dataset,
                     on_phase=capture)
    assert checkpoints[0][0] == 0    # seeding reports as phase 0
    assert len(checkpoints) >= 2
    phase, evals, saved_archive, saved_dataset = checkpoints[1]
    resumed = run_dsage(config, oracle_for(base), archive=saved_archive,
                        dataset=saved_dataset, evals_used=evals,
                        start_phase=phase, resume=True)
    assert same_cells(full.archive, resumed.archive)
    assert len(resumed.dataset) == len(full.dataset)


def test_oracle_client_returns_none_for_infeasible():
    base = toy_config(n_s=16)
    client = oracle_for(base)
    genome = random_storage_fill(base.frame, np.random.default_rng(0))
    assert client.predict([genome]) == [None]


def test_oracle_client_is_deterministic():
    base = toy_config(seed=12)
    genome = random_storage_fill(base.frame, np.random.default_rng(1))
    a = oracle_for(base).predict([genome])[0]
    b = oracle_for(base).predict([genome])[0]
    assert a.objective == b.objective
    assert a.measures == b.measures
    assert a.repaired.tiles == b.repaired.tiles


# ---------------------------------------------------------------------------
# one-hot exchange encoding


def test_one_hot_channel_order_and_shape():
    layout = make_layout(["w.", "@e"], storage=(1, 0, 1, 2))
    arr = one_hot(layout)
    assert arr.shape == (2, 2, 5)
    assert arr.dtype == np.float32
    assert ONE_HOT_TYPES.index(TileType.SHELF) == 0
    assert arr[1, 0].tolist() == [1, 0, 0, 0, 0]      # shelf
    assert arr[1, 1].tolist() == [0, 1, 0, 0, 0]      # endpoint
    assert arr[0, 0].tolist() == [0, 0, 1, 0, 0]      # workstation
    assert arr[0, 1].tolist() == [0, 0, 0, 0, 1]      # empty
    assert arr.sum() == 4


@settings(max_examples=60, deadline=None)
@given(layouts(max_side=6))
def test_one_hot_round_trips(layout):
    back = from_one_hot(one_hot(layout), like=layout)
    assert back.tiles == layout.tiles
    assert back.storage == layout.storage


def test_from_one_hot_takes_argmax_of_scores():
    layout = make_layout(["..", ".."])
    scores = np.full((2, 2, 5), 0.1)
    scores[0, 0, 0] = 0.9      # shelf wins
    scores[1, 1, 1] = 0.7      # endpoint wins
    scores[0, 1, 4] = 0.8
    scores[1, 0, 4] = 0.8
    back = from_one_hot(scores, like=layout)
    assert back.tiles[0] == TileType.SHELF
    assert back.tiles[3] == TileType.ENDPOINT


def test_from_one_hot_rejects_bad_shape():
    layout = make_layout(["..", ".."])
    with pytest.raises(ValueError, match="expected shape"):
        from_one_hot(np.zeros((2, 2, 4)), like=layout)


def test_from_one_hot_rejects_terminal_in_storage():
    layout = make_layout(["..", ".."])
    scores = one_hot(layout)
    scores[0, 0] = [0, 0, 1, 0, 0]    # workstation inside storage
    with pytest.raises(LayoutError):
        from_one_hot(scores, like=layout)


def test_predict_request_shape():
    frame = desk_frame(4, 4, n_w=2, side_margin=1, top_margin=1)
    genomes = [random_storage_fill(frame, np.random.default_rng(s))
               for s in range(3)]
    payload = predict_request(genomes)
    assert payload["version"] == 1
    assert payload["mode"] == "predict"
    assert payload["height"] == frame.height
    assert payload["width"] == frame.width
    assert len(payload["layouts"]) == 3
    arr = np.array(payload["layouts"][0])
    assert arr.shape == (frame.height, frame.width, 5)
    assert arr.sum() == frame.height * frame.width


def test_train_request_shape():
    records = []
    run_mapelites(toy_config(seed=13), 3, dataset=records)
    payload = train_request(records)
    assert payload["mode"] == "train"
    assert "measure_ranges" not in payload
    assert len(payload["records"]) == 3
    first = payload["records"][0]
    frame_tiles = records[0].repaired.height * records[0].repaired.width
    assert len(first["tile_usage"]) == frame_tiles
    assert sum(first["tile_usage"]) == pytest.approx(1.0, abs=1e-9)
    assert len(first["measures"]) == 2


def test_train_request_carries_measure_ranges():
    records = []
    run_mapelites(toy_config(seed=13), 2, dataset=records)
    payload = train_request(records, measure_ranges=((0.0, 8.0), (1.0, 9.0)))
    assert payload["measure_ranges"] == [[0.0, 8.0], [1.0, 9.0]]


# ---------------------------------------------------------------------------
# http client


class FakeResponse:
    def __init__(self, payload):
        self._payload = payload

    def raise_for_status(self):
        pass

    def json(self):
        return self._payload


class FakeHttp:
    def __init__(self, responses):
        self.responses = responses
        self.calls = []

    def post(self, url, json=None):
        self.calls.append((url, json))
        return FakeResponse(self.responses[url])


def test_http_predict_decodes_and_falls_back():
    frame = desk_frame(4, 4, n_w=2, side_margin=1, top_margin=1)
    genome = random_storage_fill(frame, np.random.default_rng(3))
    good = one_hot(genome).tolist()
    bad = one_hot(genome)
    r, c = frame.storage.row, frame.storage.col
    bad[r, c] = [0, 0, 1, 0, 0]   # workstation inside storage: undecodable
    usage = [0.0] * (frame.height * frame.width)
    usage[0] = 1.0
    http = FakeHttp({
        "http://model/predict": {
            "version": 1,
            "predictions": [
                {"repaired": good, "tile_usage": usage,
                 "objective": 2.5, "measures": [1.0, 4.0]},
                {"repaired": bad.tolist(), "tile_usage": usage,
                 "objective": 0.5, "measures": [2.0, 5.0]},
            ],
        },
    })
    client = HttpSurrogateClient("http://model/", client=http)
    preds = client.predict([genome, genome])
    url, payload = http.calls[0]
    assert url == "http://model/predict"
    assert payload["version"] == 1
    assert len(payload["layouts"]) == 2
    assert preds[0].repaired.tiles == genome.tiles
    assert preds[0].objective == 2.5
    assert preds[1].repaired.tiles == genome.tiles   # fallback to the genome
    assert preds[1].measures == (2.0, 5.0)


def test_http_train_posts_dataset():
    records = []
    run_mapelites(toy_config(seed=14), 2, dataset=records)
    http = FakeHttp({
        "http://model/train": {"model_ref": "ckpt-1",
                               "losses": {"objective": 0.1}},
    })
    client = HttpSurrogateClient("http://model", client=http)
    out = client.train(records)
    assert out["model_ref"] == "ckpt-1"
    url, payload = http.calls[0]
    assert url == "http://model/train"
    assert payload["mode"] == "train"
    assert len(payload["records"]) == 2
