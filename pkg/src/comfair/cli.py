"""Command-line client for the pipeline service.

Subcommands mirror the service endpoints; by default requests are served by
an in-process app instance, or by a remote server when --server is given.
Prints a one-line JSON summary on success; on failure prints an error JSON
to stderr and exits 2 (config error), 3 (data error) or 4 (internal error).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from .pipeline import STAGES

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4

# (flag, config path, type) triples; config path is "section.key" or "key"
STAGE_FLAGS = {
    "synth": [],
    "embed": [
        ("--dim", "embed.dim", int),
        ("--walks-per-node", "embed.walks_per_node", int),
        ("--walk-length", "embed.walk_length", int),
        ("--p", "embed.p", float),
        ("--q", "embed.q", float),
        ("--epochs", "embed.epochs", int),
    ],
    "cluster": [("--k", "cluster.k", int)],
    "homophily": [],
    "coreset": [
        ("--k-total", "coreset.k_total", int),
        ("--strategy", "coreset.strategy", str),
        ("--per-community", "coreset.per_community", int),
    ],
    "train": [
        ("--epochs", "train.epochs", int),
        ("--lr", "train.lr", float),
        ("--lam", "train.lambda", float),
        ("--weight-decay", "train.weight_decay", float),
    ],
    "audit": [
        ("--margin", "audit.margin", float),
        ("--predictions", "audit.predictions", str),
        ("--model", "audit.model", str),
    ],
    "sweep": [],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="comfair")
    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in STAGES:
        sp = sub.add_parser(stage, help=f"run the {stage} stage")
        sp.add_argument("--config", help="pipeline config JSON file")
        sp.add_argument("--seed", type=int, help="global seed (overrides config)")
        sp.add_argument("--out", help="artifact directory (overrides config)")
        sp.add_argument("--graph", help="graph bundle directory (overrides config)")
        sp.add_argument("--server", help="base URL of a running service; "
                                         "defaults to an in-process app")
        for flag, dest, typ in STAGE_FLAGS[stage]:
            sp.add_argument(flag, dest=dest.replace(".", "__"), type=typ, default=None)
    return parser


def _set_path(config: dict, dotted: str, value):
    keys = dotted.split(".")
    node = config
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def assemble_config(args: argparse.Namespace) -> dict:
    config = {}
    if args.config:
        config = json.loads(Path(args.config).read_text())
    for name in ("seed", "out", "graph"):
        value = getattr(args, name, None)
        if value is not None:
            config[name] = value
    for flag, dest, _ in STAGE_FLAGS[args.stage]:
        value = getattr(args, dest.replace(".", "__"), None)
        if value is not None:
            _set_path(config, dest, value)
    return config


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    from fastapi.testclient import TestClient

    from .service.app import create_app
    return TestClient(create_app(), raise_server_exceptions=False)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = assemble_config(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": {"type": "ConfigError", "message": str(exc)}}),
              file=sys.stderr)
        return EXIT_CONFIG
    with _client(args.server) as client:
        try:
            resp = client.post(f"/{args.stage}", json={"config": config})
        except httpx.HTTPError as exc:
            print(json.dumps({"error": {"type": "InternalError", "message": str(exc)}}),
                  file=sys.stderr)
            return EXIT_INTERNAL
    if resp.status_code == 200:
        print(json.dumps(resp.json(), sort_keys=True))
        return 0
    try:
        body = resp.json()
    except ValueError:
        body = {"error": {"type": "InternalError", "message": resp.text}}
    print(json.dumps(body, sort_keys=True), file=sys.stderr)
    if resp.status_code == 400:
        return EXIT_CONFIG
    if resp.status_code == 422:
        return EXIT_DATA
    return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
