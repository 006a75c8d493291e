"""Pipeline orchestration: ingest -> cluster -> label -> cascades -> netinf ->
analytics -> bias, each stage writing its artifacts under one output
directory and recorded in a JSON run manifest.

Stages are resumable: a stage is skipped when its input content hashes match
the previous run's manifest and its outputs are present and unmodified.
Hashes are content hashes, never mtimes, so a touch does not invalidate.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:       # Python < 3.11
    import tomli as tomllib

from . import __version__
from .analytics import (centrality_report, louvain, reliability_feature_matrix)
from .cascades import (CascadeFilter, Predominance, build_cascades, filter_cascades,
                       load_cascades, write_cascades)
from .clustering import (ClusterParams, StoryCluster, clusters_from_assignment, dp_means,
                         load_assignments, prune_single_site, write_assignments,
                         write_clusters_jsonl)
from .corpus import Corpus, CorpusError, RELIABILITIES, load_corpus, load_stances
from .keywords import pmi_keywords, pmi_stance_associations, target_scope
from .netinf import (TransmissionModel, ecosystem_copy_matrix, load_influence_graph,
                     netinf_greedy, write_influence_graph)
from .stance import (aggregate_stances, fit_bias_latent, stance_tag_article_counts)

log = logging.getLogger(__name__)

STAGE_EXIT_CODES = {
    "ingest": 10, "cluster": 20, "label": 30, "cascades": 40,
    "netinf": 50, "analytics": 60, "bias": 70,
}
STAGE_ORDER = list(STAGE_EXIT_CODES)


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage
        self.exit_code = STAGE_EXIT_CODES[stage]


@dataclass
class RunConfig:
    passages: Path
    embeddings: Path
    sites: Path
    outdir: Path
    stances: Optional[Path] = None
    seed: int = 0
    threads: int = 1
    cluster: ClusterParams = field(default_factory=ClusterParams)
    prune_threshold: float = 0.5
    label_top_k: int = 10
    label_alpha: float = 1.0
    cascade_min_sites: int = 2
    cascade_predominance: str = "none"
    netinf_model: TransmissionModel = field(default_factory=TransmissionModel)
    netinf_k_max: int = 200
    netinf_cut_fraction: float = 0.9
    bias_targets: list[str] = field(default_factory=list)
    bias_min_articles: int = 250
    bias_prior_precision: float = 1.0
    assoc_min_articles: int = 500
    features_top_narratives: int = 1000

    def validate(self):
        for name in ("passages", "embeddings", "sites"):
            p = getattr(self, name)
            if not Path(p).is_file():
                raise FileNotFoundError(f"config path {name} = {p} does not exist")
        if self.stances is not None and not Path(self.stances).is_file():
            raise FileNotFoundError(f"config path stances = {self.stances} does not exist")
        self.outdir = Path(self.outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        Predominance(self.cascade_predominance)   # raises on unknown value


def load_config(path, overrides: Optional[dict] = None) -> RunConfig:
    """Read the TOML run configuration; ``overrides`` (from CLI flags) win."""
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    overrides = overrides or {}
    base = Path(path).parent

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    paths = raw.get("paths", {})
    cluster_raw = dict(raw.get("cluster", {}))
    cluster_raw.pop("seed", None)   # the clustering seed always follows the run seed
    netinf_raw = dict(raw.get("netinf", {}))
    k_max = int(netinf_raw.pop("k_max", 200))
    cut = float(netinf_raw.pop("cut_fraction", 0.9))
    label_raw = raw.get("label", {})
    cascade_raw = raw.get("cascades", {})
    bias_raw = raw.get("bias", {})
    cfg = RunConfig(
        passages=resolve(paths["passages"]),
        embeddings=resolve(paths["embeddings"]),
        sites=resolve(paths["sites"]),
        stances=resolve(paths["stances"]) if "stances" in paths else None,
        outdir=Path(overrides.get("outdir") or resolve(raw.get("outdir", "out"))),
        seed=int(overrides.get("seed", raw.get("seed", 0))),
        threads=int(overrides.get("threads", raw.get("threads", 1))),
        cluster=ClusterParams(seed=int(overrides.get("seed", raw.get("seed", 0))),
                              **cluster_raw),
        prune_threshold=float(raw.get("prune", {}).get("threshold", 0.5)),
        label_top_k=int(label_raw.get("top_k", 10)),
        label_alpha=float(label_raw.get("alpha", 1.0)),
        cascade_min_sites=int(cascade_raw.get("min_sites", 2)),
        cascade_predominance=str(cascade_raw.get("predominance", "none")),
        netinf_model=TransmissionModel(**netinf_raw),
        netinf_k_max=k_max,
        netinf_cut_fraction=cut,
        bias_targets=list(bias_raw.get("targets", [])),
        bias_min_articles=int(bias_raw.get("min_articles", 250)),
        bias_prior_precision=float(bias_raw.get("prior_precision", 1.0)),
        assoc_min_articles=int(raw.get("associations", {}).get("min_articles", 500)),
        features_top_narratives=int(raw.get("features", {}).get("top_narratives", 1000)),
    )
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# manifest and hashing

def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _params_hash(params: dict) -> str:
    return hashlib.sha256(json.dumps(params, sort_keys=True).encode()).hexdigest()


def _stage_input_hash(files: list[Path], params: dict) -> str:
    payload = {
        "files": {str(Path(f).name): file_sha256(f) for f in files},
        "params": _params_hash(params),
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


# ---------------------------------------------------------------------------
# stage bodies: each returns the list of artifact paths it wrote

def _corpus_inputs(cfg: RunConfig) -> list[Path]:
    return [cfg.passages, cfg.embeddings, cfg.sites]


def _load(cfg: RunConfig) -> Corpus:
    return load_corpus(cfg.passages, cfg.embeddings, cfg.sites)


def stage_ingest(cfg: RunConfig) -> list[Path]:
    corpus = _load(cfg)
    if cfg.stances is not None:
        load_stances(cfg.stances, corpus)    # validation only
    out = cfg.outdir / "corpus_report.json"
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(corpus.counts_report(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return [out]


def stage_cluster(cfg: RunConfig) -> list[Path]:
    corpus = _load(cfg)
    result = dp_means(corpus.embeddings, cfg.cluster, threads=cfg.threads)
    clusters = prune_single_site(clusters_from_assignment(corpus, result.assignment),
                                 cfg.prune_threshold)
    p_clusters = cfg.outdir / "clusters.jsonl"
    p_assign = cfg.outdir / "assignments.bin"
    write_clusters_jsonl(p_clusters, clusters)
    write_assignments(p_assign, result.assignment)
    log.info("clustered %d passages into %d clusters (%d pruned) in %d iterations",
             corpus.n_passages, len(clusters), sum(c.pruned for c in clusters),
             result.n_iters)
    return [p_clusters, p_assign]


def _clusters_and_assignment(cfg: RunConfig, corpus: Corpus):
    assignment = load_assignments(cfg.outdir / "assignments.bin")
    if assignment.size != corpus.n_passages:
        raise CorpusError("assignment vector length does not match corpus")
    clusters = prune_single_site(clusters_from_assignment(corpus, assignment),
                                 cfg.prune_threshold)
    return clusters, assignment


def stage_label(cfg: RunConfig) -> list[Path]:
    corpus = _load(cfg)
    clusters, assignment = _clusters_and_assignment(cfg, corpus)
    keywords = pmi_keywords(clusters, corpus, assignment,
                            top_k=cfg.label_top_k, alpha=cfg.label_alpha)
    out = cfg.outdir / "keywords.csv"
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster_id", "rank", "keyword", "pmi"])
        for cid in sorted(keywords):
            for rank, (word, score) in enumerate(keywords[cid], start=1):
                writer.writerow([cid, rank, word, _fmt(score)])
    return [out]


def stage_cascades(cfg: RunConfig) -> list[Path]:
    corpus = _load(cfg)
    clusters, _assignment = _clusters_and_assignment(cfg, corpus)
    cascades = build_cascades(clusters, corpus, min_sites=cfg.cascade_min_sites)
    predominance = Predominance(cfg.cascade_predominance)
    if predominance is not Predominance.NONE:
        flt = CascadeFilter(predominance=predominance, min_sites=cfg.cascade_min_sites)
        cascades = filter_cascades(cascades, flt, {c.cluster_id: c for c in clusters}, corpus)
    out = cfg.outdir / "cascades.jsonl"
    write_cascades(out, cascades, corpus)
    log.info("built %d cascades", len(cascades))
    return [out]


def stage_netinf(cfg: RunConfig) -> list[Path]:
    corpus = _load(cfg)
    cascades = load_cascades(cfg.outdir / "cascades.jsonl", corpus.site_index)
    if not cascades:
        raise StageError("netinf", "no cascades to infer from")
    graph = netinf_greedy(cascades, cfg.netinf_model, k_max=cfg.netinf_k_max,
                          cut_fraction=cfg.netinf_cut_fraction,
                          node_names=[s.domain for s in corpus.sites])
    out = cfg.outdir / "influence_graph.tsv"
    write_influence_graph(out, graph)
    log.info("inferred %d influence edges (total gain %.3f)", len(graph.edges), graph.total_gain)
    return [out]


def stage_analytics(cfg: RunConfig) -> list[Path]:
    corpus = _load(cfg)
    graph = load_influence_graph(cfg.outdir / "influence_graph.tsv",
                                 node_names=[s.domain for s in corpus.sites])
    A = graph.weighted_adjacency("copies")
    report = centrality_report(A, graph.nodes)
    p_centrality = cfg.outdir / "centrality.csv"
    with open(p_centrality, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["domain", "eigenvector", "hub", "authority", "weighted_in_degree"])
        for i, d in enumerate(report.domains):
            writer.writerow([d, _fmt(report.eigenvector[i]), _fmt(report.hub[i]),
                             _fmt(report.authority[i]), _fmt(report.weighted_in_degree[i])])

    communities, q, _trace = louvain(A)
    p_comm = cfg.outdir / "communities.csv"
    with open(p_comm, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["domain", "community_id"])
        for i, d in enumerate(graph.nodes):
            writer.writerow([d, int(communities[i])])
    log.info("louvain modularity %.4f over %d communities", q,
             len(set(communities.tolist())) if communities.size else 0)

    share, delay, delta, _zero = ecosystem_copy_matrix(graph, corpus.sites)
    p_copy = cfg.outdir / "copy_matrix.csv"
    with open(p_copy, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dst_ecosystem", "src_ecosystem", "copy_share",
                         "mean_delay_days", "delay_delta_days"])
        for r, dst in enumerate(RELIABILITIES):
            for c, src in enumerate(RELIABILITIES):
                writer.writerow([dst, src, _fmt(share[r, c]), _fmt(delay[r, c]),
                                 _fmt(delta[r, c])])
    return [p_centrality, p_comm, p_copy]


def _load_keyword_scope(cfg: RunConfig, targets, scope_top: int = 10):
    keywords: dict[int, list[tuple[str, float]]] = {}
    with open(cfg.outdir / "keywords.csv", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            keywords.setdefault(int(row["cluster_id"]), []).append(
                (row["keyword"], float(row["pmi"])))
    return target_scope(keywords, targets, scope_top=scope_top)


def stage_bias(cfg: RunConfig) -> list[Path]:
    if cfg.stances is None:
        raise StageError("bias", "no stance label file configured")
    if not cfg.bias_targets:
        raise StageError("bias", "no bias targets configured")
    corpus = _load(cfg)
    stances = load_stances(cfg.stances, corpus)
    assignment = load_assignments(cfg.outdir / "assignments.bin")
    all_targets = sorted({r.target for r in stances})
    scope = _load_keyword_scope(cfg, all_targets)
    aggregates = aggregate_stances(stances, corpus, scope, assignment)

    p_agg = cfg.outdir / "stance_aggregates.csv"
    with open(p_agg, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["domain", "target", "pro_pct", "against_pct", "neutral_pct",
                         "article_count"])
        for a in aggregates:
            writer.writerow([corpus.sites[a.site_ref].domain, a.target, _fmt(a.pro_pct),
                             _fmt(a.against_pct), _fmt(a.neutral_pct), a.article_count])

    tag_counts = stance_tag_article_counts(stances, corpus, scope, assignment)
    associations = pmi_stance_associations(tag_counts, list(RELIABILITIES),
                                           min_articles=cfg.assoc_min_articles)
    p_assoc = cfg.outdir / "stance_associations.csv"
    with open(p_assoc, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ecosystem", "rank", "direction", "target", "pmi"])
        for eco in RELIABILITIES:
            for rank, (direction, tgt, score) in enumerate(associations.get(eco, []), start=1):
                writer.writerow([eco, rank, direction, tgt, _fmt(score)])

    p_latent = cfg.outdir / "bias_latent.csv"
    p_coef = cfg.outdir / "bias_coefficients.csv"
    with open(p_latent, "w", newline="", encoding="utf-8") as lfh, \
            open(p_coef, "w", newline="", encoding="utf-8") as cfh:
        lwriter = csv.writer(lfh)
        lwriter.writerow(["domain", "target", "z_score", "is_seed"])
        cwriter = csv.writer(cfh)
        cwriter.writerow(["target", "direction", "feature_target", "coef", "std"])
        for tgt in cfg.bias_targets:
            try:
                latent = fit_bias_latent(tgt, aggregates,
                                         min_articles=cfg.bias_min_articles,
                                         prior_precision=cfg.bias_prior_precision)
            except ValueError as exc:
                raise StageError("bias", f"target {tgt!r}: {exc}") from exc
            seeds = set(latent.seed_sites)
            for site in sorted(latent.z_scores):
                lwriter.writerow([corpus.sites[site].domain, tgt,
                                  _fmt(latent.z_scores[site]),
                                  "true" if site in seeds else "false"])
            ranked = sorted(latent.coefficients.items(),
                            key=lambda kv: (-abs(kv[1][0]), kv[0]))
            for (direction, feat), (coef, std) in ranked:
                cwriter.writerow([tgt, direction, feat, _fmt(coef), _fmt(std)])

    domains, columns, matrix, _coverage, labels = reliability_feature_matrix(
        aggregates, corpus.sites, top_narratives=cfg.features_top_narratives)
    p_feat = cfg.outdir / "feature_matrix.csv"
    with open(p_feat, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["domain"] + columns + ["reliability"])
        for i, d in enumerate(domains):
            writer.writerow([d] + [_fmt(v) for v in matrix[i]] + [labels[i]])

    return [p_agg, p_assoc, p_latent, p_coef, p_feat]


# ---------------------------------------------------------------------------
# orchestration

def _stage_spec(cfg: RunConfig) -> dict[str, tuple[list[Path], dict, Callable]]:
    """Per stage: (hashed input files, hashed params, body).

    Thread count is intentionally excluded from every params dict: outputs
    are identical for any thread count, so it must not invalidate a resume.
    """
    corpus_files = _corpus_inputs(cfg)
    stance_files = [cfg.stances] if cfg.stances is not None else []
    out = cfg.outdir
    cluster_params = {"cluster": asdict(cfg.cluster), "prune": cfg.prune_threshold}
    return {
        "ingest": (corpus_files + stance_files, {}, stage_ingest),
        "cluster": (corpus_files, cluster_params, stage_cluster),
        "label": (corpus_files + [out / "assignments.bin"],
                  {**cluster_params, "top_k": cfg.label_top_k, "alpha": cfg.label_alpha},
                  stage_label),
        "cascades": (corpus_files + [out / "assignments.bin"],
                     {**cluster_params, "min_sites": cfg.cascade_min_sites,
                      "predominance": cfg.cascade_predominance},
                     stage_cascades),
        "netinf": (corpus_files + [out / "cascades.jsonl"],
                   {"model": asdict(cfg.netinf_model), "k_max": cfg.netinf_k_max,
                    "cut_fraction": cfg.netinf_cut_fraction},
                   stage_netinf),
        "analytics": (corpus_files + [out / "influence_graph.tsv"], {}, stage_analytics),
        "bias": (corpus_files + stance_files +
                 [out / "assignments.bin", out / "keywords.csv"],
                 {**cluster_params, "targets": cfg.bias_targets,
                  "min_articles": cfg.bias_min_articles,
                  "prior_precision": cfg.bias_prior_precision,
                  "assoc_min_articles": cfg.assoc_min_articles,
                  "top_narratives": cfg.features_top_narratives},
                 stage_bias),
    }


def run_pipeline(cfg: RunConfig, only: Optional[str] = None, force: bool = False) -> dict:
    """Run all stages (or one) with resume-on-unchanged-inputs; returns the manifest."""
    cfg.validate()
    manifest_path = cfg.outdir / "manifest.json"
    previous = {}
    if manifest_path.is_file():
        try:
            previous = json.loads(manifest_path.read_text()).get("stages", {})
        except json.JSONDecodeError:
            log.warning("ignoring unreadable manifest at %s", manifest_path)
    manifest = {
        "package_version": __version__,
        "seed": cfg.seed,
        "netinf": {"model": asdict(cfg.netinf_model), "k_max": cfg.netinf_k_max,
                   "cut_fraction": cfg.netinf_cut_fraction},
        "stages": dict(previous),
    }
    stages = _stage_spec(cfg)
    to_run = [only] if only else STAGE_ORDER
    if only and only not in stages:
        raise ValueError(f"unknown stage {only!r}; expected one of {STAGE_ORDER}")

    for name in to_run:
        files, params, body = stages[name]
        missing = [f for f in files if not Path(f).is_file()]
        if missing:
            raise StageError(name, f"missing inputs: {', '.join(str(m) for m in missing)}")
        input_hash = _stage_input_hash(files, params)
        record = previous.get(name)
        if (not force and record and record.get("input_hash") == input_hash
                and all(Path(cfg.outdir / n).is_file()
                        and file_sha256(cfg.outdir / n) == h
                        for n, h in record.get("outputs", {}).items())):
            log.info("stage %s: inputs unchanged, skipping", name)
            manifest["stages"][name] = {**record, "skipped": True}
            continue
        log.info("stage %s: running", name)
        started = time.monotonic()
        try:
            outputs = body(cfg)
        except StageError:
            raise
        except (CorpusError, FileNotFoundError, ValueError) as exc:
            raise StageError(name, str(exc)) from exc
        manifest["stages"][name] = {
            "input_hash": input_hash,
            "outputs": {Path(p).name: file_sha256(p) for p in outputs},
            "elapsed_s": round(time.monotonic() - started, 6),
            "skipped": False,
        }
        if name == "netinf":
            with open(cfg.outdir / "cascades.jsonl", encoding="utf-8") as fh:
                manifest["netinf"]["cascade_count"] = sum(1 for line in fh if line.strip())
        _write_manifest(manifest_path, manifest)
    _write_manifest(manifest_path, manifest)
    return manifest


def _write_manifest(path: Path, manifest: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def main_stage(cfg: RunConfig, stage: str, force: bool = False) -> int:
    """Run one stage (or everything) and map failures to stage exit codes."""
    try:
        run_pipeline(cfg, only=None if stage == "pipeline" else stage, force=force)
    except StageError as exc:
        print(f"error in stage {exc.stage}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0
