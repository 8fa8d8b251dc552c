"""Command-line client for the warehouse layout toolkit.

Every networked verb talks to the HTTP service; by default an in-process
instance is used, ``--server`` points at a running one instead.  Exit
codes: 2 config error, 3 solver adapter error, 4 simulation precondition
failure, 1 anything else.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import httpx

EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_PRECONDITION = 4

_EXIT_BY_CATEGORY = {
    "config": EXIT_CONFIG,
    "solver": EXIT_SOLVER,
    "precondition": EXIT_PRECONDITION,
}


def _make_client(server):
    if server:
        return httpx.Client(base_url=server, timeout=None)
    # default: drive the service in process over its ASGI interface
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service.app import app
    return TestClient(app)


def _fail(category, message):
    click.echo(f"error ({category}): {message}", err=True)
    sys.exit(_EXIT_BY_CATEGORY.get(category, 1))


def _check(resp: httpx.Response) -> dict:
    if resp.status_code < 400:
        return resp.json()
    detail = resp.json().get("detail")
    if isinstance(detail, dict):
        _fail(detail.get("category", "config"),
              detail.get("message", json.dumps(detail)))
    # request-body validation errors arrive as a list of field problems
    _fail("config", json.dumps(detail))


def _post(ctx, path, payload) -> dict:
    return _check(ctx.obj["client"].post(path, json=payload))


def _get(ctx, path) -> dict:
    return _check(ctx.obj["client"].get(path))


def _load_json_file(path, what="config"):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        _fail("config", f"{path} is not valid JSON for the {what}: {exc}")


def _read_layout_body(ctx, path) -> dict:
    """Accept either the text layout format or its JSON mirror."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return _load_json_file(path, what="layout")
    return _post(ctx, "/layouts/parse", {"text": text})["layout"]


def _apply_overrides(config: dict, sets) -> dict:
    for item in sets:
        if "=" not in item:
            _fail("config", f"--set expects KEY=VALUE, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            config[key] = json.loads(raw)
        except json.JSONDecodeError:
            config[key] = raw
    return config


@click.group()
@click.option("--server", envvar="WAREHOUSE_OPT_SERVER", default=None,
              metavar="URL",
              help="Base URL of a running service; default runs in process.")
@click.pass_context
def main(ctx, server):
    """Warehouse layout optimization toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["client"] = _make_client(server)
    ctx.call_on_close(ctx.obj["client"].close)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service.app import app
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--output-dir", type=click.Path(file_okay=False), default=None,
              help="Override the configured output directory.")
@click.option("--resume", is_flag=True,
              help="Continue from the checkpoint in the output directory.")
@click.option("--set", "sets", multiple=True, metavar="KEY=VALUE",
              help="Override any configuration field; values parse as JSON.")
@click.option("--poll-interval", default=0.5, show_default=True,
              help="Seconds between job status checks.")
@click.pass_context
def optimize(ctx, config_path, output_dir, resume, sets, poll_interval):
    """Run the quality-diversity loop described by a configuration file."""
    config = _apply_overrides(_load_json_file(config_path), sets)
    if output_dir:
        config["output_dir"] = output_dir
    job = _post(ctx, "/optimize", {"config": config, "resume": resume})
    job_id = job["job_id"]
    click.echo(f"job {job_id} queued")
    while True:
        status = _get(ctx, f"/jobs/{job_id}")
        if status["status"] in ("done", "failed"):
            break
        time.sleep(poll_interval)
    if status["status"] == "failed":
        _fail(status.get("category") or "internal", status["detail"])
    result = status["result"]
    for key in ("output_dir", "evaluations", "num_elites", "coverage",
                "qd_score", "best_objective", "dataset_size"):
        click.echo(f"{key}: {result[key]}")


@main.command()
@click.argument("layout_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--output-dir", type=click.Path(file_okay=False), default=None,
              help="Also write report.json and the CSV artifacts here.")
@click.option("--agents", "agent_counts", multiple=True, type=int,
              help="Additionally sweep these agent counts (repeatable).")
@click.option("--set", "sets", multiple=True, metavar="KEY=VALUE",
              help="Override any configuration field; values parse as JSON.")
@click.pass_context
def evaluate(ctx, layout_path, config_path, output_dir, agent_counts, sets):
    """Evaluate a layout file under an experiment configuration."""
    payload = {
        "layout": _read_layout_body(ctx, layout_path),
        "config": _apply_overrides(_load_json_file(config_path), sets),
        "agent_counts": list(agent_counts) or None,
        "output_dir": output_dir,
    }
    report = _post(ctx, "/evaluate-report", payload)
    for key in ("scenario", "n_agents", "horizon", "success_rate",
                "throughput_mean", "throughput_sd"):
        click.echo(f"{key}: {report[key]}")
    for row in report.get("agents_sweep", []):
        click.echo(f"agents {row['n_agents']}: "
                   f"success_rate {row['success_rate']} "
                   f"throughput_mean {row['throughput_mean']}")


@main.command()
@click.argument("layout_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--scenario", default="workstation", show_default=True)
@click.option("--n-s", "n_s", required=True, type=int,
              help="Exact shelf count for the repaired layout.")
@click.option("--time-limit", default=120.0, show_default=True,
              help="Solver time limit in seconds.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
              help="Write the repaired layout here instead of stdout.")
@click.pass_context
def repair(ctx, layout_path, scenario, n_s, time_limit, output):
    """Minimally edit a layout until it satisfies the scenario rules."""
    outcome = _post(ctx, "/repair", {
        "layout": _read_layout_body(ctx, layout_path),
        "scenario": scenario, "n_s": n_s, "time_limit": time_limit,
    })
    click.echo(f"status: {outcome['status']}")
    click.echo(f"hamming_distance: {outcome['hamming_distance']}")
    click.echo(f"solve_time: {outcome['solve_time']:.3f}s")
    if outcome["repaired"] is None:
        sys.exit(1)
    text = _post(ctx, "/layouts/render",
                 {"layout": outcome["repaired"]})["text"]
    if output:
        Path(output).write_text(text)
        click.echo(f"wrote {output}")
    else:
        click.echo(text, nl=False)


def _run_local(fn):
    """Shared error-to-exit-code mapping for verbs that skip the service."""
    from .experiments import ConfigError, EvaluationPreconditionError
    from .repair import SolverAdapterError
    from .sim.engine import SimPreconditionError
    try:
        return fn()
    except ConfigError as exc:
        _fail("config", str(exc))
    except SolverAdapterError as exc:
        _fail("solver", str(exc))
    except (SimPreconditionError, EvaluationPreconditionError) as exc:
        _fail("precondition", str(exc))


@main.command("gen-human-layout")
@click.option("--setup", default=None,
              help="Named preset: 1-4 or 'desk'.")
@click.option("--storage", nargs=2, type=int, default=None,
              metavar="H W", help="Storage height and width.")
@click.option("--terminals", type=int, default=None,
              help="Workstation or home-location count for explicit frames.")
@click.option("--scenario", default="workstation", show_default=True)
@click.option("--n-s", "n_s", type=int, default=None,
              help="Shelf count; presets supply their own default.")
@click.option("--run", default=10, show_default=True,
              help="Shelves per row segment.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
def gen_human_layout(setup, storage, terminals, scenario, n_s, run, output):
    """Write the row-pattern baseline layout used for comparisons."""
    from .experiments import cmd_gen_human_layout
    from .layouts import Scenario, serialize_layout

    if setup is not None and setup.isdigit():
        setup = int(setup)

    def build():
        return cmd_gen_human_layout(
            setup=setup, storage=storage or None, terminals=terminals,
            scenario=Scenario.parse(scenario), n_s=n_s, run=run)

    layout = _run_local(build)
    text = serialize_layout(layout)
    if output:
        Path(output).write_text(text)
        click.echo(f"wrote {output}")
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("archive_dir",
                type=click.Path(exists=True, file_okay=False))
def stats(archive_dir):
    """Print summary statistics for a saved archive directory."""
    from .experiments import cmd_stats
    payload = _run_local(lambda: cmd_stats(archive_dir))
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


@main.command("export-heatmap")
@click.argument("archive_dir",
                type=click.Path(exists=True, file_okay=False))
@click.argument("csv_path", type=click.Path(dir_okay=False))
@click.option("--image", "image_path", type=click.Path(dir_okay=False),
              default=None, help="Also render the grid to this image file.")
def export_heatmap(archive_dir, csv_path, image_path):
    """Write the archive objective grid as CSV, optionally as an image."""
    from .experiments import cmd_export_heatmap
    _run_local(lambda: cmd_export_heatmap(archive_dir, csv_path, image_path))
    click.echo(f"wrote {csv_path}")
    if image_path:
        click.echo(f"wrote {image_path}")


if __name__ == "__main__":
    main()
