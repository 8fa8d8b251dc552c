"""Command line: file-mode exchange and the HTTP server.

``train`` and ``predict`` consume request files in the same JSON shapes
the service accepts (gzipped when the path ends in .gz) and write the
response JSON.  Exit codes: 2 for bad requests or configuration, 4 for
a missing model, 1 for anything else.
"""

from __future__ import annotations

import dataclasses
import gzip
import json
import sys

import click
import torch

from . import __version__
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .protocol import ProtocolError, decode_predict, decode_train, \
    predict_response, train_response
from .training import TrainConfig, train

EXIT_CONFIG = 2
EXIT_PRECONDITION = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _read_json(path):
    opener = gzip.open if str(path).endswith(".gz") else open
    try:
        with opener(path, "rt", encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        _fail(EXIT_CONFIG, f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_CONFIG, f"{path} is not JSON: {exc}")


def _write_json(path, payload):
    if path == "-":
        json.dump(payload, sys.stdout)
        click.echo()
        return
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle)


@click.group()
@click.version_option(__version__)
def main():
    """Layout surrogate: train, predict, serve."""


@main.command("train")
@click.argument("request_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--checkpoint", "checkpoint_path", required=True,
              type=click.Path(dir_okay=False, writable=True),
              help="Where the trained weights are written.")
@click.option("--warm-from", type=click.Path(exists=True, dir_okay=False),
              help="Continue from an existing checkpoint.")
@click.option("--summary", "summary_path", default="-",
              help="Response JSON destination (default stdout).")
@click.option("--epochs", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--seed", type=int, default=None)
def train_cmd(request_path, checkpoint_path, warm_from, summary_path,
              epochs, batch_size, seed):
    """Train from a train-request file and write a checkpoint."""
    payload = _read_json(request_path)
    try:
        data = decode_train(payload)
    except ProtocolError as exc:
        _fail(EXIT_CONFIG, str(exc))
    overrides = {k: v for k, v in (("epochs", epochs),
                                   ("batch_size", batch_size),
                                   ("seed", seed)) if v is not None}
    try:
        config = dataclasses.replace(TrainConfig(), **overrides)
    except ValueError as exc:
        _fail(EXIT_CONFIG, f"bad training config: {exc}")
    warm = None
    if warm_from:
        try:
            warm, _ = load_checkpoint(warm_from)
        except CheckpointError as exc:
            _fail(EXIT_CONFIG, str(exc))
    try:
        model, curves = train(data, config, model=warm)
    except ValueError as exc:
        _fail(EXIT_CONFIG, str(exc))
    ref = save_checkpoint(checkpoint_path, model, data.measure_ranges, curves)
    _write_json(summary_path, train_response(curves, len(data), ref))
    for name, curve in curves.items():
        click.echo(f"{name}: first {curve[0]:.4f} last {curve[-1]:.4f}",
                   err=True)


@main.command("predict")
@click.argument("request_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--checkpoint", "checkpoint_path", required=True,
              type=click.Path(dir_okay=False),
              help="Trained weights to predict with.")
@click.option("-o", "--output", default="-",
              help="Response JSON destination (default stdout).")
def predict_cmd(request_path, checkpoint_path, output):
    """Answer a predict-request file."""
    try:
        model, ranges = load_checkpoint(checkpoint_path)
    except CheckpointError as exc:
        _fail(EXIT_PRECONDITION, str(exc))
    payload = _read_json(request_path)
    try:
        grids = decode_predict(payload)
    except ProtocolError as exc:
        _fail(EXIT_CONFIG, str(exc))
    spec = model.spec
    if grids.shape[1:] != (spec.channels, spec.height, spec.width):
        _fail(EXIT_CONFIG,
              f"layouts are {grids.shape[2]}x{grids.shape[3]} but the model "
              f"expects {spec.height}x{spec.width}")
    with torch.no_grad():
        repaired, usage, scores = model(torch.from_numpy(grids))
    _write_json(output, predict_response(repaired.numpy(), usage.numpy(),
                                         scores.numpy(), ranges))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8901, show_default=True, type=int)
@click.option("--checkpoint", "checkpoint_path",
              type=click.Path(dir_okay=False),
              help="Load these weights at startup; training rewrites them.")
def serve(host, port, checkpoint_path):  # pragma: no cover - wraps uvicorn
    """Serve the exchange over HTTP."""
    from .service import serve as run_server

    run_server(host=host, port=port, checkpoint=checkpoint_path)


if __name__ == "__main__":
    main()
