"""Command-line entry point.

Subcommands run single pipeline stages (ingest, cluster, label, cascades,
netinf, analyze, bias), the whole pipeline, or the synthetic generators.
Configuration comes from one TOML file; flags override it.  The log level is
taken from the NARRATIVE_FLOW_LOG environment variable (error, warn, info,
debug).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import write_embeddings
from .pipeline import load_config, main_stage
from .synth import SynthSpec, gen_blobs, gen_cascades, write_true_edges

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}

# `analyze` is the user-facing name of the analytics stage
SUBCOMMAND_TO_STAGE = {
    "ingest": "ingest", "cluster": "cluster", "label": "label",
    "cascades": "cascades", "netinf": "netinf", "analyze": "analytics",
    "bias": "bias", "pipeline": "pipeline",
}


def _setup_logging():
    raw = os.environ.get("NARRATIVE_FLOW_LOG", "warn").lower()
    level = LOG_LEVELS.get(raw)
    if level is None:
        print(f"warning: unknown NARRATIVE_FLOW_LOG={raw!r}, using warn", file=sys.stderr)
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, required=True, help="TOML run configuration")
    common.add_argument("--outdir", type=Path, help="override output directory")
    common.add_argument("--seed", type=int, help="override master seed")
    common.add_argument("--threads", type=int, help="cap the worker pool")
    common.add_argument("--force", action="store_true", help="ignore resume state and rerun")

    parser = argparse.ArgumentParser(prog="narrativeflow",
                                     description="news story tracking pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("ingest", "cluster", "label", "cascades", "netinf", "analyze", "bias"):
        sub.add_parser(name, parents=[common], help=f"run the {name} stage")
    p_pipe = sub.add_parser("pipeline", parents=[common], help="run every stage in order")
    p_pipe.add_argument("--stage", choices=list(SUBCOMMAND_TO_STAGE)[:-1],
                        help="run a single stage by name")
    p_sim = sub.add_parser("simulate", help="generate synthetic fixtures")
    p_sim.add_argument("--kind", choices=("blobs", "cascades"), required=True)
    p_sim.add_argument("--outdir", type=Path, required=True)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--n-sites", type=int, default=50)
    p_sim.add_argument("--n-clusters", type=int, default=5)
    p_sim.add_argument("--dim", type=int, default=32)
    p_sim.add_argument("--points-per-cluster", type=int, default=200)
    p_sim.add_argument("--cascades", type=int, default=500)
    p_sim.add_argument("--density", type=float, default=0.06)
    p_sim.add_argument("--beta", type=float, default=0.5)
    p_sim.add_argument("--alpha-t", type=float, default=1.0)
    return parser


def _run_simulate(args) -> int:
    spec = SynthSpec(seed=args.seed, n_sites=args.n_sites, n_clusters=args.n_clusters,
                     dim=args.dim, points_per_cluster=args.points_per_cluster,
                     cascades_per_run=args.cascades, edge_density=args.density,
                     beta=args.beta, alpha_t=args.alpha_t)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.kind == "blobs":
        matrix, labels = gen_blobs(spec)
        write_embeddings(outdir / "blobs.emb", matrix)
        np.savetxt(outdir / "blob_labels.csv", labels, fmt="%d", header="label", comments="")
        print(f"wrote {matrix.n} x {matrix.dim} embeddings and labels to {outdir}")
    else:
        edges, cascades = gen_cascades(spec)
        write_true_edges(outdir / "true_edges.tsv", edges)
        import json

        with open(outdir / "cascades.jsonl", "w", encoding="utf-8") as fh:
            for c in cascades:
                obj = {"cluster_id": c.cluster_id,
                       "events": [[f"node{s}", t] for s, t in c.events]}
                fh.write(json.dumps(obj) + "\n")
        print(f"wrote {len(edges)} true edges and {len(cascades)} cascades to {outdir}")
    return 0


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.command == "simulate":
        return _run_simulate(args)
    overrides = {}
    if args.outdir is not None:
        overrides["outdir"] = args.outdir
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    try:
        cfg = load_config(args.config, overrides)
    except (OSError, KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    stage = SUBCOMMAND_TO_STAGE[args.command]
    if args.command == "pipeline" and getattr(args, "stage", None):
        stage = SUBCOMMAND_TO_STAGE[args.stage]
    return main_stage(cfg, stage, force=args.force)


if __name__ == "__main__":
    sys.exit(main())
