"""Story identification: delayed-creation DP-means over unit embeddings.

Points live on the unit sphere, so squared Euclidean distance and cosine
similarity are interchangeable: d^2 = 2*(1 - cos).  A cosine admission
threshold ``min_cos`` therefore corresponds to the classic DP-means penalty
lambda = 2*(1 - min_cos).

The delayed variant assigns every point to its best admissible centroid; the
points admissible nowhere become new-cluster candidates, and only the
farthest candidate(s) seed new clusters at the end of each outer iteration.
That keeps the assignment step embarrassingly parallel and avoids
over-clustering.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .corpus import Corpus, EmbeddingMatrix

log = logging.getLogger(__name__)

UNASSIGNED = -1
BLOCK_SIZE = 8192


@dataclass(frozen=True)
class ClusterParams:
    min_cos: float = 0.50
    max_outer_iters: int = 50
    converge_frac: float = 0.001
    new_clusters_per_iter: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.min_cos < 1.0:
            raise ValueError("min_cos must be in (0, 1)")
        if not 0.0 < self.converge_frac < 1.0:
            raise ValueError("converge_frac must be in (0, 1)")
        if self.max_outer_iters < 1 or self.new_clusters_per_iter < 1:
            raise ValueError("iteration counts must be positive")

    @property
    def penalty(self) -> float:
        return 2.0 * (1.0 - self.min_cos)


@dataclass
class StoryCluster:
    cluster_id: int
    centroid: np.ndarray
    member_passages: list[int]          # sorted passage ids
    site_histogram: dict[str, int]
    pruned: bool = False

    @property
    def size(self) -> int:
        return len(self.member_passages)


@dataclass
class DpMeansResult:
    centroids: np.ndarray               # (k, dim) unit rows
    assignment: np.ndarray              # (n,) int64 cluster ids
    n_iters: int
    objective_trace: list[float] = field(default_factory=list)
    changes_trace: list[int] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def _blocked_argmax(X: np.ndarray, C: np.ndarray, threads: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-row best centroid and its similarity, computed in fixed-size blocks.

    Block boundaries are independent of the thread count, and per-row argmax
    breaks ties toward the lowest cluster id, so the result is identical for
    any ``threads``.
    """
    n = X.shape[0]
    best = np.empty(n, dtype=np.int64)
    best_sim = np.empty(n, dtype=np.float64)
    blocks = [(s, min(s + BLOCK_SIZE, n)) for s in range(0, n, BLOCK_SIZE)]

    def run(block):
        s, e = block
        sims = X[s:e] @ C.T
        best[s:e] = np.argmax(sims, axis=1)
        best_sim[s:e] = sims[np.arange(e - s), best[s:e]]

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, blocks))
    else:
        for b in blocks:
            run(b)
    return best, best_sim


def _centroid_sums(X: np.ndarray, assignment: np.ndarray, k: int, threads: int) -> tuple[np.ndarray, np.ndarray]:
    """Segmented per-cluster sums, accumulated block by block in fixed order."""
    n, dim = X.shape
    blocks = [(s, min(s + BLOCK_SIZE, n)) for s in range(0, n, BLOCK_SIZE)]

    def run(block):
        s, e = block
        part = np.zeros((k, dim), dtype=np.float64)
        cnt = np.zeros(k, dtype=np.int64)
        ids = assignment[s:e]
        mask = ids >= 0
        np.add.at(part, ids[mask], X[s:e][mask].astype(np.float64))
        np.add.at(cnt, ids[mask], 1)
        return part, cnt

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    sums = np.zeros((k, dim), dtype=np.float64)
    counts = np.zeros(k, dtype=np.int64)
    for part, cnt in parts:   # merge in block order: thread-count independent
        sums += part
        counts += cnt
    return sums, counts


def _objective(X, C, assignment, penalty, n_pending) -> float:
    """DP-means objective; pending candidates are counted as imminent clusters."""
    assigned = assignment >= 0
    cos = np.einsum("ij,ij->i", X[assigned].astype(np.float64), C[assignment[assigned]])
    return float(np.sum(2.0 * (1.0 - cos)) + penalty * (C.shape[0] + n_pending))


def dp_means(matrix: EmbeddingMatrix, params: ClusterParams, threads: int = 1) -> DpMeansResult:
    """Cluster unit-norm rows; returns centroids plus the assignment vector.

    Deterministic for a fixed input order: argmax ties break toward the
    lowest cluster id and farthest-candidate ties toward the lowest row
    index.  ``params.seed`` is carried for provenance; the algorithm itself
    draws no random numbers.
    """
    if not matrix.normalized:
        raise ValueError("dp_means requires a normalized embedding matrix")
    X = matrix.data
    n = matrix.n
    if n < 1:
        raise ValueError("need at least one row")

    # start with no clusters: every point is a candidate and the first seed
    # is the lowest-id point.  Seeding only from real data points keeps early
    # centroids out of the hollow between well-separated groups, where a
    # mean-like centroid above the admission threshold could freeze a merged
    # cluster in place.
    C = np.empty((0, X.shape[1]), dtype=np.float64)
    assignment = np.full(n, UNASSIGNED, dtype=np.int64)

    objective_trace: list[float] = []
    changes_trace: list[int] = []
    change_cut = params.converge_frac * n
    it = 0
    for it in range(1, params.max_outer_iters + 1):
        prev = assignment.copy()
        if C.shape[0]:
            best, best_sim = _blocked_argmax(X, C.astype(np.float32), threads)
            assignment = np.where(best_sim >= params.min_cos, best, UNASSIGNED)
        else:
            best_sim = np.full(n, -np.inf)
            assignment = np.full(n, UNASSIGNED, dtype=np.int64)

        # seed new clusters from the candidates farthest from every centroid
        pending = np.where(assignment == UNASSIGNED)[0]
        if pending.size:
            order = np.lexsort((pending, best_sim[pending]))
            for idx in pending[order][: params.new_clusters_per_iter]:
                C = np.vstack([C, X[idx].astype(np.float64)])
                assignment[idx] = C.shape[0] - 1

        # drop empty clusters and renumber survivors in order
        sums, counts_true = _centroid_sums(X, assignment, C.shape[0], threads)
        keep = counts_true > 0
        if not keep.all():
            remap = -np.ones(C.shape[0], dtype=np.int64)
            remap[keep] = np.arange(int(keep.sum()))
            assigned_mask = assignment >= 0
            assignment[assigned_mask] = remap[assignment[assigned_mask]]
            sums, counts_true = sums[keep], counts_true[keep]

        # renormalized mean is the unit-sphere minimizer of within-cluster d^2
        norms = np.linalg.norm(sums, axis=1)
        degenerate = norms <= 1e-12
        if degenerate.any():
            # antipodal members cancel; fall back to any member direction
            for cid in np.where(degenerate)[0]:
                member = np.where(assignment == cid)[0][0]
                sums[cid] = X[member].astype(np.float64)
                norms[cid] = np.linalg.norm(sums[cid])
        C = sums / norms[:, None]

        changes = int(np.sum(assignment != prev))
        n_pending = int(np.sum(assignment == UNASSIGNED))
        changes_trace.append(changes)
        objective_trace.append(_objective(X, C, assignment, params.penalty, n_pending))
        log.debug("iter %d: k=%d changes=%d pending=%d objective=%.6f",
                  it, C.shape[0], changes, n_pending, objective_trace[-1])
        if changes < max(change_cut, 1.0) and n_pending == 0:
            break

    # bounded corner case: iteration budget exhausted with points still
    # inadmissible everywhere -> each becomes its own singleton cluster
    pending = np.where(assignment == UNASSIGNED)[0]
    if pending.size:
        log.warning("%d passages unassigned at iteration cap; seeding singletons", pending.size)
        extra = X[pending].astype(np.float64)
        extra /= np.linalg.norm(extra, axis=1)[:, None]
        assignment[pending] = C.shape[0] + np.arange(pending.size)
        C = np.vstack([C, extra])

    return DpMeansResult(
        centroids=C,
        assignment=assignment,
        n_iters=it,
        objective_trace=objective_trace,
        changes_trace=changes_trace,
    )


def assign_to_centroids(matrix: EmbeddingMatrix, centroids: np.ndarray,
                        min_cos: float, threads: int = 1) -> np.ndarray:
    """One frozen-centroid assignment pass (streaming/daily ingestion mode).

    Rows with no admissible centroid come back UNASSIGNED; callers feed those
    into the usual new-cluster rule for the next batch.
    """
    best, best_sim = _blocked_argmax(matrix.data, centroids.astype(np.float32), threads)
    return np.where(best_sim >= min_cos, best, UNASSIGNED)


def clusters_from_assignment(corpus: Corpus, assignment: np.ndarray) -> list[StoryCluster]:
    """Materialize StoryCluster records (members, site histograms, centroids)
    from an assignment vector.

    Centroids are recomputed as renormalized member means, which matches the
    final dp_means centroids bit for bit (the last update runs on the final
    assignment with the same blocked accumulation).
    """
    if assignment.min() < 0:
        raise ValueError("assignment contains unresolved entries")
    k = int(assignment.max()) + 1
    X = corpus.embeddings.data
    sums, counts = _centroid_sums(X, assignment, k, threads=1)
    if (counts == 0).any():
        raise ValueError("assignment references empty clusters")
    norms = np.linalg.norm(sums, axis=1)
    for cid in np.where(norms <= 1e-12)[0]:   # antipodal members cancel
        member = np.where(assignment == cid)[0][0]
        sums[cid] = X[member].astype(np.float64)
        norms[cid] = np.linalg.norm(sums[cid])
    centroids = sums / norms[:, None]

    clusters: list[StoryCluster] = []
    order = np.argsort(assignment, kind="stable")
    bounds = np.searchsorted(assignment[order], np.arange(k + 1))
    for cid in range(k):
        rows = order[bounds[cid]:bounds[cid + 1]]
        members = sorted(int(corpus.passage_id[i]) for i in rows)
        hist: dict[str, int] = {}
        for i in rows:
            dom = corpus.sites[corpus.site_ref[i]].domain
            hist[dom] = hist.get(dom, 0) + 1
        clusters.append(StoryCluster(
            cluster_id=cid,
            centroid=centroids[cid],
            member_passages=members,
            site_histogram=dict(sorted(hist.items())),
        ))
    return clusters


def build_story_clusters(corpus: Corpus, result: DpMeansResult) -> list[StoryCluster]:
    return clusters_from_assignment(corpus, result.assignment)


def prune_single_site(clusters: list[StoryCluster], threshold: float = 0.5) -> list[StoryCluster]:
    """Flag clusters dominated by one website (max site share >= threshold)."""
    for c in clusters:
        if not c.site_histogram:
            c.pruned = True
            continue
        c.pruned = max(c.site_histogram.values()) / c.size >= threshold
    return clusters


def write_clusters_jsonl(path, clusters: list[StoryCluster]):
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for c in clusters:
            obj = {
                "cluster_id": c.cluster_id,
                "size": c.size,
                "pruned": c.pruned,
                "centroid_norm": float(np.linalg.norm(c.centroid)),
                "passage_ids": c.member_passages,
            }
            fh.write(json.dumps(obj) + "\n")


def load_clusters_jsonl(path) -> list[dict]:
    import json

    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def write_assignments(path, assignment: np.ndarray):
    # u64 little-endian per passage; sentinel states are resolved before write
    if assignment.min() < 0:
        raise ValueError("assignment contains unresolved entries")
    assignment.astype("<u8").tofile(path)


def load_assignments(path) -> np.ndarray:
    return np.fromfile(path, dtype="<u8").astype(np.int64)


def cluster_volume_series(cluster: StoryCluster, corpus: Corpus,
                          bucket_days: int = 7) -> dict[str, np.ndarray]:
    """Distinct-article counts per (ecosystem, time bucket) for one cluster.

    Buckets are aligned to day 0 and all ecosystems share the same bucket
    range so the series line up for correlation.
    """
    if bucket_days < 1:
        raise ValueError("bucket_days must be positive")
    rows = [corpus.passage_index[pid] for pid in cluster.member_passages]
    if not rows:
        return {}
    seen: dict[str, set[tuple[int, int]]] = {}
    buckets = []
    for i in rows:
        b = int(np.floor(corpus.published_day[i] / bucket_days))
        eco = corpus.ecosystem_of(corpus.site_ref[i])
        seen.setdefault(eco, set()).add((b, int(corpus.article_id[i])))
        buckets.append(b)
    lo, hi = min(buckets), max(buckets)
    width = hi - lo + 1
    series: dict[str, np.ndarray] = {}
    for eco, pairs in sorted(seen.items()):
        counts = np.zeros(width, dtype=np.int64)
        for b, _aid in pairs:
            counts[b - lo] += 1
        series[eco] = counts
    return series
