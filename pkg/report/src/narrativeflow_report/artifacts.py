"""Readers for the artifact files the figures consume.

Formats follow the pipeline's published schemas; every reader returns plain
dicts/lists so the figure code stays decoupled from the producer.
"""
from __future__ import annotations

import csv
from pathlib import Path

ECOSYSTEMS = ("reliable", "mixed", "unreliable")


def read_sites(path) -> dict[str, str]:
    """domain -> ecosystem from the site registry CSV."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[row["domain"]] = row["reliability"]
    return out


def read_copy_matrix(path):
    """(share, delay, delta) 3x3 row-major lists in ecosystem order."""
    share = [[0.0] * 3 for _ in range(3)]
    delay = [[0.0] * 3 for _ in range(3)]
    delta = [[0.0] * 3 for _ in range(3)]
    idx = {eco: i for i, eco in enumerate(ECOSYSTEMS)}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            r, c = idx[row["dst_ecosystem"]], idx[row["src_ecosystem"]]
            share[r][c] = float(row["copy_share"])
            delay[r][c] = float(row["mean_delay_days"])
            delta[r][c] = float(row["delay_delta_days"])
    return share, delay, delta


def read_influence_graph(path):
    """List of edge dicts from the influence graph TSV."""
    edges = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            row = dict(zip(header, parts))
            edges.append({
                "src": row["src"],
                "dst": row["dst"],
                "copies": int(row["copies"]),
                "marginal_gain": float(row["marginal_gain"]),
                "mean_delay_days": float(row["mean_delay_days"]),
            })
    return edges


def read_centrality(path) -> dict[str, dict[str, float]]:
    """domain -> {eigenvector, hub, authority, weighted_in_degree}."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[row["domain"]] = {k: float(v) for k, v in row.items() if k != "domain"}
    return out


def read_bias_latent(path):
    """List of (domain, target, z_score, is_seed) records."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append((row["domain"], row["target"], float(row["z_score"]),
                        row["is_seed"] == "true"))
    return out


def read_coefficients(path):
    """target -> ordered [(direction, feature_target, coef, std)] rows."""
    out: dict[str, list] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["target"], []).append(
                (row["direction"], row["feature_target"],
                 float(row["coef"]), float(row["std"])))
    return out


def resolve(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p
