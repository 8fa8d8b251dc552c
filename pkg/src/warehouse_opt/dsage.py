"""Quality-diversity optimization loops over the repair + simulate pipeline.

Two drivers share one evaluation path (mutate, repair, simulate, archive):

* :func:`run_mapelites` -- the plain loop; every candidate is repaired and
  simulated.
* :func:`run_dsage` -- the surrogate-assisted loop: exploitation builds a
  fresh surrogate archive from predicted scores on unrepaired genomes,
  agent simulation repairs and evaluates a downsampled selection, and model
  improvement retrains the surrogate on the accumulated dataset.

Budget counts simulator evaluations only: failed repairs and every
surrogate query are free.  All randomness is derived per (seed, stream,
iteration), so an interrupted run resumed from a checkpoint replays the
remaining iterations exactly.
"""

from __future__ import annotations

import logging
import zlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np

from .layouts import Layout, LayoutError, Scenario
from .qd import (
    Archive,
    ArchiveConfig,
    ArchiveKind,
    Elite,
    downsample,
    mutate,
    select_batch,
)
from .templates import random_storage_fill
from .repair import DEFAULT_TIME_LIMIT, repair
from .sim.engine import EvalResult, SimConfig, evaluate
from .encoding import from_one_hot, one_hot

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1

# rng stream namespaces; each iteration draws from an independent stream
# keyed by (seed, stream, index) so resume-from-checkpoint replays exactly
STREAM_MAPELITES = 0
STREAM_SEEDING = 1
STREAM_EXPLOIT = 2
STREAM_SIMULATE = 3


def _stream_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, stream, index)))


def _genome_seed(base: int, layout: Layout) -> int:
    # stable per-genome seed so oracle predictions are reproducible
    crc = zlib.crc32(bytes(int(t) for t in layout.tiles))
    return int(np.random.SeedSequence((base, crc)).generate_state(1)[0])


@dataclass(frozen=True)
class DatasetRecord:
    """One simulator evaluation, kept for surrogate training."""

    unrepaired: Layout
    repaired: Layout
    tile_usage_normalized: tuple
    objective: float
    measures: tuple


@dataclass(frozen=True)
class SurrogatePrediction:
    """Per-genome answer from a surrogate: predicted repaired layout,
    predicted tile usage, objective and measures."""

    repaired: Layout
    tile_usage: Optional[tuple]
    objective: float
    measures: tuple


class SurrogateClient(Protocol):
    """Batch exchange with a surrogate model.

    ``predict`` answers one entry per genome, in order; a None entry marks
    a candidate the surrogate cannot score (it is skipped).  ``train``
    consumes the full dataset and returns a summary dict (losses, model
    reference)."""

    def predict(self, genomes: list) -> list: ...

    def train(self, records: list) -> dict: ...


@dataclass(frozen=True)
class MapElitesConfig:
    """Shared context for both loops: where candidates live, how they are
    repaired, and how they are scored."""

    frame: Layout
    scenario: Scenario
    n_s: int
    archive: ArchiveConfig
    sim: SimConfig
    n_sims: int = 5
    batch: int = 50
    seed: int = 0
    solver: object = None
    repair_time_limit: float = DEFAULT_TIME_LIMIT
    # consecutive iterations allowed to finish zero evaluations before the
    # loop gives up (all-infeasible batches would otherwise spin forever)
    max_stall_iterations: int = 25


@dataclass(frozen=True)
class DsageConfig:
    base: MapElitesConfig
    eval_budget: int
    n_rand: int = 500
    inner_iterations: int = 10_000


@dataclass(frozen=True)
class IterationStats:
    """One row of the optimization log."""

    iteration: int
    evaluations: int
    qd_score: float
    coverage: float
    num_elites: int
    best_objective: Optional[float]
    failed_repairs: int
    out_of_range: int

    def to_json(self) -> dict:
        return {
            "iteration": self.iteration,
            "evaluations": self.evaluations,
            "qd_score": self.qd_score,
            "coverage": self.coverage,
            "num_elites": self.num_elites,
            "best_objective": self.best_objective,
            "failed_repairs": self.failed_repairs,
            "out_of_range": self.out_of_range,
        }


@dataclass
class DsageResult:
    archive: Archive
    dataset: list
    model_ref: object


def _best_objective(archive: Archive):
    if not archive.cells:
        return None
    return max(e.objective for e in archive.cells.values())


def _evaluate_into(archive: Archive, candidate: Layout, repaired: Layout,
                   sim_config: SimConfig, n_sims: int, sim_seed: int,
                   dataset) -> EvalResult:
    result = evaluate(repaired, sim_config.replaced(seed=sim_seed), n_sims)
    elite = Elite(genome=candidate, repaired=repaired,
                  objective=result.mean_throughput,
                  measures=tuple(result.measures), eval_meta=result)
    archive.add(elite)
    if dataset is not None:
        dataset.append(DatasetRecord(
            unrepaired=candidate, repaired=repaired,
            tile_usage_normalized=tuple(result.tile_usage_normalized),
            objective=result.mean_throughput,
            measures=tuple(result.measures)))
    return result


def _repair_candidate(candidate: Layout, config: MapElitesConfig):
    outcome = repair(candidate, config.scenario, config.n_s,
                     solver=config.solver,
                     time_limit=config.repair_time_limit)
    return outcome.repaired


def run_mapelites(config: MapElitesConfig, eval_budget: int, *,
                  archive: Archive = None, evals_used: int = 0,
                  start_iteration: int = 0, on_iteration=None,
                  dataset=None) -> Archive:
    """Select, mutate, repair, simulate, insert, until ``eval_budget``
    simulator evaluations have been spent.

    The first iteration of an empty archive evaluates a batch of random
    storage fills instead of mutants.  Repairs that come back infeasible
    or timed out are logged and cost nothing.  ``archive`` /
    ``evals_used`` / ``start_iteration`` restart the loop mid-run from a
    checkpoint; ``on_iteration`` receives an IterationStats per batch."""
    if archive is None:
        archive = Archive(config.archive, ArchiveKind.GROUND_TRUTH)
    evals = evals_used
    iteration = start_iteration
    stall = 0
    while evals < eval_budget:
        rng = _stream_rng(config.seed, STREAM_MAPELITES, iteration)
        if archive.cells:
            parents = select_batch(archive, config.frame, config.batch, rng)
            candidates = [mutate(p, rng) for p in parents]
        else:
            candidates = select_batch(archive, config.frame, config.batch, rng)
        sim_seeds = rng.integers(0, 2 ** 31 - 1, size=len(candidates))
        failed = 0
        progressed = False
        for candidate, sim_seed in zip(candidates, sim_seeds):
            if evals >= eval_budget:
                break
            repaired = _repair_candidate(candidate, config)
            if repaired is None:
                failed += 1
                continue
            _evaluate_into(archive, candidate, repaired, config.sim,
                           config.n_sims, int(sim_seed), dataset)
            evals += 1
            progressed = True
        iteration += 1
        if on_iteration is not None:
            s = archive.stats()
            on_iteration(IterationStats(
                iteration=iteration, evaluations=evals,
                qd_score=s.qd_score, coverage=s.coverage,
                num_elites=s.num_elites,
                best_objective=_best_objective(archive),
                failed_repairs=failed, out_of_range=s.out_of_range))
        stall = 0 if progressed else stall + 1
        if stall > config.max_stall_iterations:
            raise RuntimeError(
                f"no repairable candidates in {stall} consecutive batches")
    return archive


def _exploit_surrogate(config: MapElitesConfig, client, inner_iterations: int,
                       rng) -> Archive:
    """Fresh surrogate archive built from predicted scores on unrepaired
    genomes; one batched predict call per inner iteration."""
    surrogate = Archive(config.archive, ArchiveKind.SURROGATE)
    for _ in range(inner_iterations):
        if surrogate.cells:
            parents = select_batch(surrogate, config.frame, config.batch, rng)
            candidates = [mutate(p, rng) for p in parents]
        else:
            candidates = select_batch(surrogate, config.frame, config.batch,
                                      rng)
        for candidate, pred in zip(candidates, client.predict(candidates)):
            if pred is None:
                continue
            surrogate.add(Elite(genome=candidate, repaired=pred.repaired,
                                objective=pred.objective,
                                measures=tuple(pred.measures),
                                eval_meta=None))
    return surrogate


def _phase_stats(phase: int, evals: int, archive: Archive,
                 failed: int) -> IterationStats:
    s = archive.stats()
    return IterationStats(iteration=phase, evaluations=evals,
                          qd_score=s.qd_score, coverage=s.coverage,
                          num_elites=s.num_elites,
                          best_objective=_best_objective(archive),
                          failed_repairs=failed, out_of_range=s.out_of_range)


def run_dsage(config: DsageConfig, client=None, *, archive: Archive = None,
              dataset: list = None, evals_used: int = 0,
              start_phase: int = 0, resume: bool = False,
              on_phase=None) -> DsageResult:
    """Surrogate-assisted loop; with no surrogate client it degrades to
    :func:`run_mapelites` with a warning.

    Phases per cycle: exploitation (surrogate archive from predictions),
    agent simulation (downsample, repair, evaluate into the ground-truth
    archive and dataset), model improvement (retrain on the full dataset,
    warm from current weights).  With ``resume`` set, ``archive`` /
    ``dataset`` / ``evals_used`` / ``start_phase`` restart from a
    phase-boundary checkpoint (phase 0 is the random-seeding stage): the
    seeding stage is skipped and the model is retrained from the
    checkpointed dataset before the first exploitation.  ``on_phase``
    receives an IterationStats per completed phase."""
    base = config.base
    if client is None:
        logger.warning("surrogate component unavailable; degrading to the "
                       "plain quality-diversity loop")
        archive = run_mapelites(base, config.eval_budget, archive=archive,
                                evals_used=evals_used,
                                start_iteration=start_phase,
                                on_iteration=on_phase, dataset=dataset)
        return DsageResult(archive=archive,
                           dataset=dataset if dataset is not None else [],
                           model_ref=None)

    if archive is None:
        archive = Archive(base.archive, ArchiveKind.GROUND_TRUTH)
    if dataset is None:
        dataset = []
    evals = evals_used

    if resume:
        model_ref = client.train(dataset) if dataset else None
    else:
        rng = _stream_rng(base.seed, STREAM_SEEDING, 0)
        seeds = [random_storage_fill(base.frame, rng)
                 for _ in range(config.n_rand)]
        sim_seeds = rng.integers(0, 2 ** 31 - 1, size=len(seeds))
        failed = 0
        for candidate, sim_seed in zip(seeds, sim_seeds):
            if evals >= config.eval_budget:
                break
            repaired = _repair_candidate(candidate, base)
            if repaired is None:
                failed += 1
                continue
            _evaluate_into(archive, candidate, repaired, base.sim,
                           base.n_sims, int(sim_seed), dataset)
            evals += 1
        model_ref = client.train(dataset) if dataset else None
        if on_phase is not None:
            on_phase(_phase_stats(0, evals, archive, failed))

    phase = start_phase
    stall = 0
    while evals < config.eval_budget:
        phase += 1
        srng = _stream_rng(base.seed, STREAM_EXPLOIT, phase)
        surrogate = _exploit_surrogate(base, client, config.inner_iterations,
                                       srng)
        drng = _stream_rng(base.seed, STREAM_SIMULATE, phase)
        picks = downsample(surrogate, drng)
        pick_seeds = drng.integers(0, 2 ** 31 - 1, size=max(len(picks), 1))
        progressed = False
        failed = 0
        for elite, sim_seed in zip(picks, pick_seeds):
            if evals >= config.eval_budget:
                break
            repaired = _repair_candidate(elite.genome, base)
            if repaired is None:
                failed += 1
                continue
            _evaluate_into(archive, elite.genome, repaired, base.sim,
                           base.n_sims, int(sim_seed), dataset)
            evals += 1
            progressed = True
        if on_phase is not None:
            on_phase(_phase_stats(phase, evals, archive, failed))
        if progressed:
            model_ref = client.train(dataset)
            stall = 0
        else:
            stall += 1
            if stall > base.max_stall_iterations:
                logger.warning(
                    "stopping after %d phases without a usable candidate; "
                    "%d of %d evaluations spent", stall, evals,
                    config.eval_budget)
                break
    return DsageResult(archive=archive, dataset=dataset, model_ref=model_ref)


# ---------------------------------------------------------------------------
# surrogate clients


@dataclass
class OracleSurrogateClient:
    """Control-experiment surrogate that answers with ground truth: repair
    plus simulate, outside the budget.  Training is a no-op."""

    scenario: Scenario
    n_s: int
    sim: SimConfig
    n_sims: int = 1
    solver: object = None
    repair_time_limit: float = DEFAULT_TIME_LIMIT
    predictions: int = field(default=0, init=False)

    def predict(self, genomes: list) -> list:
        out = []
        for genome in genomes:
            outcome = repair(genome, self.scenario, self.n_s,
                             solver=self.solver,
                             time_limit=self.repair_time_limit)
            if outcome.repaired is None:
                out.append(None)
                continue
            seed = _genome_seed(self.sim.seed, genome)
            result = evaluate(outcome.repaired, self.sim.replaced(seed=seed),
                              self.n_sims)
            out.append(SurrogatePrediction(
                repaired=outcome.repaired,
                tile_usage=tuple(result.tile_usage_normalized),
                objective=result.mean_throughput,
                measures=tuple(result.measures)))
            self.predictions += 1
        return out

    def train(self, records: list) -> dict:
        return {"model_ref": "oracle", "records": len(records)}


def predict_request(genomes: list) -> dict:
    """Wire form of a predict call: one-hot layout tensors as nested
    lists."""
    first = genomes[0]
    return {
        "version": PROTOCOL_VERSION,
        "mode": "predict",
        "height": first.height,
        "width": first.width,
        "layouts": [one_hot(g).tolist() for g in genomes],
    }


def train_request(records: list, measure_ranges=None) -> dict:
    # measure_ranges lets the trainer scale its regression targets to the
    # archive's measure span instead of whatever the batch happens to cover
    first = records[0].repaired
    payload = {
        "version": PROTOCOL_VERSION,
        "mode": "train",
        "height": first.height,
        "width": first.width,
        "records": [
            {
                "unrepaired": one_hot(r.unrepaired).tolist(),
                "repaired": one_hot(r.repaired).tolist(),
                "tile_usage": list(r.tile_usage_normalized),
                "objective": r.objective,
                "measures": list(r.measures),
            }
            for r in records
        ],
    }
    if measure_ranges is not None:
        payload["measure_ranges"] = [list(pair) for pair in measure_ranges]
    return payload


class HttpSurrogateClient:
    """Talks to a surrogate service over the versioned JSON exchange.

    The service answers POST /predict and POST /train; see
    :func:`predict_request` / :func:`train_request` for payloads.  A
    predicted repaired layout that decodes to an illegal tile placement
    falls back to the unrepaired genome."""

    def __init__(self, base_url: str, timeout: float = 300.0, client=None,
                 measure_ranges=None):
        import httpx

        self.base_url = base_url.rstrip("/")
        self._http = client or httpx.Client(timeout=timeout)
        self.measure_ranges = measure_ranges

    def predict(self, genomes: list) -> list:
        resp = self._http.post(self.base_url + "/predict",
                               json=predict_request(genomes))
        resp.raise_for_status()
        payload = resp.json()
        out = []
        for genome, item in zip(genomes, payload["predictions"]):
            try:
                repaired = from_one_hot(np.array(item["repaired"]), genome)
            except (LayoutError, ValueError):
                repaired = genome
            out.append(SurrogatePrediction(
                repaired=repaired,
                tile_usage=tuple(item["tile_usage"]),
                objective=float(item["objective"]),
                measures=tuple(item["measures"])))
        return out

    def train(self, records: list) -> dict:
        resp = self._http.post(
            self.base_url + "/train",
            json=train_request(records, self.measure_ranges))
        resp.raise_for_status()
        return resp.json()
