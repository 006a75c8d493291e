"""The four figure types rendered from artifact files.

Rendering is read-only and deterministic: fixed layout seed, fixed SVG hash
salt, constant metadata, so a rerun reproduces the same bytes.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "narrativeflow-report"

import matplotlib.pyplot as plt
import numpy as np

from .artifacts import (ECOSYSTEMS, read_bias_latent, read_centrality,
                        read_coefficients, read_copy_matrix, read_influence_graph,
                        read_sites, resolve)

log = logging.getLogger(__name__)

FIGURES = ("copy_matrix", "bias_distribution", "influence_graph", "coefficient_table")

ECO_COLORS = {"reliable": "#3465a4", "mixed": "#888a85", "unreliable": "#cc2222"}

CAPTIONS = {
    "copy_matrix": "Share of each destination ecosystem's copied stories by source "
                   "ecosystem (rows sum to 1) and the copy-delay deltas in days.",
    "bias_distribution": "Distribution of bias-latent z-scores per ecosystem and target.",
    "influence_graph": "Inferred influence network; node size is proportional to hub "
                       "centrality, color marks the ecosystem.",
    "coefficient_table": "Stances most associated with each bias latent "
                         "(regression coefficients with posterior stds).",
}


@dataclass
class ReportSpec:
    artifacts: dict[str, str]
    outdir: Path
    figures: list[str] = field(default_factory=lambda: list(FIGURES))
    image_format: str = "png"
    dpi: int = 120

    def __post_init__(self):
        self.outdir = Path(self.outdir)
        if self.image_format not in ("png", "svg"):
            raise ValueError("image format must be png or svg")
        unknown = [f for f in self.figures if f not in FIGURES]
        if unknown:
            raise ValueError(f"unknown figures {unknown}; expected from {FIGURES}")

    @classmethod
    def load(cls, path) -> "ReportSpec":
        base = Path(path).resolve().parent
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        artifacts = {k: str(resolve(base, v)) for k, v in raw["artifacts"].items()}
        outdir = resolve(base, raw.get("outdir", "figures"))
        return cls(artifacts=artifacts, outdir=outdir,
                   figures=list(raw.get("figures", FIGURES)),
                   image_format=raw.get("format", "png"),
                   dpi=int(raw.get("dpi", 120)))


def _save(fig, path: Path, dpi: int):
    if path.suffix == ".svg":
        fig.savefig(path, format="svg", metadata={"Date": None})
    else:
        fig.savefig(path, format="png", dpi=dpi,
                    metadata={"Software": "narrativeflow-report"})
    plt.close(fig)


def node_sizes(hub_scores: np.ndarray, floor: float = 30.0, span: float = 970.0) -> np.ndarray:
    """Marker areas proportional to hub centrality (strictly monotone)."""
    hub = np.asarray(hub_scores, dtype=np.float64)
    top = hub.max() if hub.size else 0.0
    if top <= 0:
        return np.full(hub.shape, floor)
    return floor + span * hub / top


def spring_layout(nodes: list[str], edges, seed: int = 0, iterations: int = 120):
    """Deterministic Fruchterman-Reingold layout."""
    n = len(nodes)
    index = {d: i for i, d in enumerate(nodes)}
    rng = np.random.default_rng(seed)
    pos = rng.standard_normal((n, 2))
    if n <= 1:
        return {d: pos[i] for d, i in index.items()}
    pairs = [(index[e["src"]], index[e["dst"]]) for e in edges]
    k = 1.0 / np.sqrt(n)
    temp = 0.1
    for step in range(iterations):
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.linalg.norm(delta, axis=2)
        np.fill_diagonal(dist, 1.0)
        # repulsion between every pair, attraction along edges
        force = (k * k / dist ** 2)[:, :, None] * delta
        disp = force.sum(axis=1)
        for i, j in pairs:
            d = pos[i] - pos[j]
            norm = max(np.linalg.norm(d), 1e-9)
            pull = (norm / k) * d / norm
            disp[i] -= pull
            disp[j] += pull
        lengths = np.maximum(np.linalg.norm(disp, axis=1), 1e-9)
        pos += disp / lengths[:, None] * min(temp, temp * (1.0 - step / iterations) + 0.01)
    return {d: pos[index[d]] for d in nodes}


# ---------------------------------------------------------------------------
# figure renderers: each returns the written path or None when skipped

def render_copy_matrix(spec: ReportSpec) -> Path | None:
    path = spec.artifacts.get("copy_matrix")
    if not path or not Path(path).is_file():
        log.warning("copy_matrix artifact missing; skipping figure")
        return None
    share, _delay, delta = read_copy_matrix(path)
    share = np.asarray(share)
    delta = np.asarray(delta)
    if not share.any():
        log.warning("copy matrix is empty (no copies); skipping figure")
        return None
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    labels = [e.capitalize() for e in ECOSYSTEMS]
    for ax, data, title, fmt in ((axes[0], share, "Copy shares", "{:.2f}"),
                                 (axes[1], delta, "Delay delta (days)", "{:+.2f}")):
        im = ax.imshow(data, cmap="Blues" if title.startswith("Copy") else "RdBu_r")
        ax.set_xticks(range(3), labels, rotation=20)
        ax.set_yticks(range(3), labels)
        ax.set_xlabel("source ecosystem")
        ax.set_ylabel("destination ecosystem")
        ax.set_title(title)
        for r in range(3):
            for c in range(3):
                if np.isfinite(data[r, c]):
                    ax.text(c, r, fmt.format(data[r, c]), ha="center", va="center",
                            fontsize=9)
        fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    out = spec.outdir / f"copy_matrix.{spec.image_format}"
    _save(fig, out, spec.dpi)
    return out


def render_bias_distribution(spec: ReportSpec) -> Path | None:
    latent_path = spec.artifacts.get("bias_latent")
    sites_path = spec.artifacts.get("sites")
    if not latent_path or not Path(latent_path).is_file() or \
            not sites_path or not Path(sites_path).is_file():
        log.warning("bias_latent or sites artifact missing; skipping figure")
        return None
    eco_of = read_sites(sites_path)
    records = read_bias_latent(latent_path)
    targets = sorted({t for _d, t, _z, _s in records})
    if not targets:
        log.warning("bias latent file has no records; skipping figure")
        return None
    fig, axes = plt.subplots(1, len(targets), figsize=(4.5 * len(targets), 3.6),
                             squeeze=False)
    bins = np.linspace(-3, 3, 25)
    for ax, target in zip(axes[0], targets):
        for eco in ECOSYSTEMS:
            zs = [z for d, t, z, _s in records if t == target and eco_of.get(d) == eco]
            if zs:
                ax.hist(zs, bins=bins, alpha=0.55, label=eco, color=ECO_COLORS[eco])
        ax.set_title(f"{target} bias")
        ax.set_xlabel("z-score")
        ax.set_ylabel("websites")
        ax.legend(fontsize=8)
    fig.tight_layout()
    out = spec.outdir / f"bias_distribution.{spec.image_format}"
    _save(fig, out, spec.dpi)
    return out


def render_influence_graph(spec: ReportSpec) -> Path | None:
    graph_path = spec.artifacts.get("influence_graph")
    cent_path = spec.artifacts.get("centrality")
    sites_path = spec.artifacts.get("sites")
    if not all(p and Path(p).is_file() for p in (graph_path, cent_path, sites_path)):
        log.warning("influence_graph, centrality, or sites artifact missing; skipping figure")
        return None
    edges = read_influence_graph(graph_path)
    if not edges:
        log.warning("influence graph has no edges; skipping figure")
        return None
    centrality = read_centrality(cent_path)
    eco_of = read_sites(sites_path)
    nodes = sorted({e["src"] for e in edges} | {e["dst"] for e in edges})
    pos = spring_layout(nodes, edges)
    hub = np.array([centrality.get(d, {}).get("hub", 0.0) for d in nodes])
    sizes = node_sizes(hub)

    fig, ax = plt.subplots(figsize=(7.5, 6.5))
    max_copies = max(e["copies"] for e in edges) or 1
    for e in edges:
        a, b = pos[e["src"]], pos[e["dst"]]
        ax.annotate("", xy=b, xytext=a,
                    arrowprops=dict(arrowstyle="-|>", lw=0.4 + 1.6 * e["copies"] / max_copies,
                                    color="0.6", alpha=0.5, shrinkA=6, shrinkB=6))
    xy = np.array([pos[d] for d in nodes])
    colors = [ECO_COLORS.get(eco_of.get(d, "mixed"), "#888a85") for d in nodes]
    ax.scatter(xy[:, 0], xy[:, 1], s=sizes, c=colors, zorder=3,
               edgecolors="white", linewidths=0.6)
    top = np.argsort(-hub)[:8]
    for i in top:
        ax.annotate(nodes[i], xy[i], fontsize=7, ha="center", va="bottom",
                    xytext=(0, 5), textcoords="offset points")
    handles = [plt.Line2D([], [], marker="o", linestyle="", color=ECO_COLORS[e], label=e)
               for e in ECOSYSTEMS]
    ax.legend(handles=handles, fontsize=8, loc="lower left")
    ax.set_axis_off()
    ax.set_title("Influence network (node size = hub centrality)")
    fig.tight_layout()
    out = spec.outdir / f"influence_graph.{spec.image_format}"
    _save(fig, out, spec.dpi)
    return out


def render_coefficient_table(spec: ReportSpec, top_n: int = 6) -> Path | None:
    path = spec.artifacts.get("bias_coefficients")
    if not path or not Path(path).is_file():
        log.warning("bias_coefficients artifact missing; skipping figure")
        return None
    coefs = read_coefficients(path)
    if not coefs:
        log.warning("coefficient file has no rows; skipping figure")
        return None
    targets = sorted(coefs)
    fig, axes = plt.subplots(len(targets), 1, figsize=(5.4, 0.42 * top_n * len(targets) + 1),
                             squeeze=False)
    for ax, target in zip(axes[:, 0], targets):
        rows = coefs[target][:top_n]
        cells = [[f"{direction} {feature}", f"{coef:+.3f}", f"{std:.3f}"]
                 for direction, feature, coef, std in rows]
        ax.table(cellText=cells, colLabels=[f"{target} stances", "Coeff.", "Std."],
                 loc="center", cellLoc="left", colWidths=[0.55, 0.22, 0.22])
        ax.set_axis_off()
    fig.tight_layout()
    out = spec.outdir / f"coefficient_table.{spec.image_format}"
    _save(fig, out, spec.dpi)
    return out


RENDERERS = {
    "copy_matrix": render_copy_matrix,
    "bias_distribution": render_bias_distribution,
    "influence_graph": render_influence_graph,
    "coefficient_table": render_coefficient_table,
}


def render_all(spec: ReportSpec) -> dict[str, Path]:
    """Render every requested figure; returns name -> written path.

    Missing artifacts skip their figure with a warning; an index page listing
    the rendered figures with captions is always written.
    """
    spec.outdir.mkdir(parents=True, exist_ok=True)
    rendered: dict[str, Path] = {}
    for name in spec.figures:
        out = RENDERERS[name](spec)
        if out is not None:
            rendered[name] = out
    _write_index(spec, rendered)
    return rendered


def _write_index(spec: ReportSpec, rendered: dict[str, Path]):
    lines = [
        "<!DOCTYPE html>",
        "<html><head><meta charset='utf-8'><title>narrativeflow report</title>",
        "<style>body{font-family:sans-serif;max-width:60em;margin:2em auto}"
        "figure{margin:2em 0}img{max-width:100%}figcaption{color:#555}</style>",
        "</head><body>",
        "<h1>narrativeflow report</h1>",
    ]
    for name in spec.figures:
        if name in rendered:
            lines.append("<figure>")
            lines.append(f"<img src='{rendered[name].name}' alt='{name}'>")
            lines.append(f"<figcaption>{CAPTIONS[name]}</figcaption>")
            lines.append("</figure>")
        else:
            lines.append(f"<p><em>{name}: skipped (artifact missing or empty).</em></p>")
    lines.append("</body></html>")
    (spec.outdir / "index.html").write_text("\n".join(lines) + "\n", encoding="utf-8")
