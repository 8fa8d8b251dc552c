#!/usr/bin/env python3
"""Record a desk-scale optimization run as a surrogate training request.

Runs the desk preset for a fixed evaluation budget, captures every
simulator evaluation (unrepaired genome, repaired layout, tile usage,
throughput, measures), and writes the batch in the versioned training
wire format, gzipped.  The surrogate package replays this file in its
training smoke test:

    python3 scripts/export_desk_dataset.py surrogate/tests/data/desk_records.json.gz
"""

import argparse
import gzip
import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from warehouse_opt.dsage import run_mapelites, train_request
from warehouse_opt.experiments import config_from_dict, mapelites_config


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out", type=pathlib.Path, help="output path (.json.gz)")
    parser.add_argument("--budget", type=int, default=500,
                        help="evaluations to record (default 500)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    loop = mapelites_config(config_from_dict({"setup": "desk",
                                              "seed": args.seed}))
    dataset = []
    run_mapelites(loop, args.budget, dataset=dataset)
    payload = train_request(
        dataset,
        measure_ranges=(loop.archive.component_range,
                        loop.archive.task_length_range),
    )
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with gzip.open(args.out, "wb") as fh:
        fh.write(json.dumps(payload).encode())
    print(f"wrote {len(dataset)} records to {args.out}")


if __name__ == "__main__":
    main()
