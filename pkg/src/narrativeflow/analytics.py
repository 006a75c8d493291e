"""Analytics over the inferred influence graph: centralities, communities,
volume correlation, and the per-site stance feature matrix export.

All functions are pure over an immutable adjacency; scores are L2-normalized
and nonnegative.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)

DAMPING_ETA = 1e-12
POWER_TOL = 1e-10
POWER_MAX_ITERS = 1000


@dataclass
class CentralityReport:
    domains: list[str]
    eigenvector: np.ndarray
    hub: np.ndarray
    authority: np.ndarray
    weighted_in_degree: np.ndarray


def _l2(x: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(x)
    return x / norm if norm > 0 else x


def eigenvector_centrality(adjacency: np.ndarray, *, in_links: bool = True) -> np.ndarray:
    """Principal-eigenvector scores by power iteration on the damped adjacency.

    With ``in_links`` (the default) a node's score grows with in-edges from
    high-scoring nodes; set it False to score originators instead.  The tiny
    uniform damping guarantees convergence on reducible graphs.
    """
    A = np.asarray(adjacency, dtype=np.float64)
    n = A.shape[0]
    if n == 0 or A.shape[0] != A.shape[1]:
        raise ValueError("adjacency must be square and nonempty")
    if not A.any():
        log.warning("all edge weights are zero; centrality is uniform")
        return _l2(np.ones(n))
    M = A.T if in_links else A
    x = np.full(n, 1.0 / np.sqrt(n))
    for _ in range(POWER_MAX_ITERS):
        y = M @ x + DAMPING_ETA * x.sum()
        y = _l2(y)
        if np.linalg.norm(y - x) < POWER_TOL:
            x = y
            break
        x = y
    return np.abs(x)


def hits(adjacency: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hub and authority scores (mutually recursive power iteration)."""
    A = np.asarray(adjacency, dtype=np.float64)
    n = A.shape[0]
    if n == 0 or A.shape[0] != A.shape[1]:
        raise ValueError("adjacency must be square and nonempty")
    if not A.any():
        log.warning("all edge weights are zero; hub/authority are uniform")
        u = _l2(np.ones(n))
        return u, u.copy()
    hub = np.full(n, 1.0 / np.sqrt(n))
    auth = hub.copy()
    for _ in range(POWER_MAX_ITERS):
        new_auth = _l2(A.T @ hub)
        new_hub = _l2(A @ new_auth)
        if np.linalg.norm(new_hub - hub) < POWER_TOL and np.linalg.norm(new_auth - auth) < POWER_TOL:
            hub, auth = new_hub, new_auth
            break
        hub, auth = new_hub, new_auth
    return np.abs(hub), np.abs(auth)


def centrality_report(adjacency: np.ndarray, domains: Sequence[str]) -> CentralityReport:
    hub, auth = hits(adjacency)
    return CentralityReport(
        domains=list(domains),
        eigenvector=eigenvector_centrality(adjacency),
        hub=hub,
        authority=auth,
        weighted_in_degree=np.asarray(adjacency, dtype=np.float64).sum(axis=0),
    )


# ---------------------------------------------------------------------------
# Louvain community detection

def undirected_projection(adjacency: np.ndarray) -> np.ndarray:
    """Symmetrize a directed weighted adjacency by summing both directions."""
    A = np.asarray(adjacency, dtype=np.float64)
    return A + A.T


def modularity(adjacency_sym: np.ndarray, communities: np.ndarray,
               resolution: float = 1.0) -> float:
    """Weighted modularity of a partition of a symmetric adjacency."""
    A = adjacency_sym
    two_m = A.sum()
    if two_m == 0:
        return 0.0
    k = A.sum(axis=1)
    q = 0.0
    for c in np.unique(communities):
        mask = communities == c
        q += A[np.ix_(mask, mask)].sum() / two_m
        q -= resolution * (k[mask].sum() / two_m) ** 2
    return float(q)


def _louvain_local_pass(A: np.ndarray, comm: np.ndarray, resolution: float) -> bool:
    """One round of node moves in sorted order; returns whether anything moved."""
    n = A.shape[0]
    two_m = A.sum()
    k = A.sum(axis=1)
    tot = np.zeros(n)
    for i in range(n):
        tot[comm[i]] += k[i]
    moved_any = False
    improved = True
    while improved:
        improved = False
        for i in range(n):
            ci = comm[i]
            # weights from i to each neighboring community (excluding self-loop)
            links = {}
            for j in np.nonzero(A[i])[0]:
                if j == i:
                    continue
                links[comm[j]] = links.get(comm[j], 0.0) + A[i, j]
            tot[ci] -= k[i]
            base = links.get(ci, 0.0) - resolution * tot[ci] * k[i] / two_m
            # ascending community order + strict improvement: ties stay put
            # or go to the lowest community id, deterministically
            best_c, best_gain = ci, 0.0
            for c in sorted(links):
                if c == ci:
                    continue
                gain = (links[c] - resolution * tot[c] * k[i] / two_m) - base
                if gain > best_gain + 1e-15:
                    best_c, best_gain = c, gain
            comm[i] = best_c
            tot[best_c] += k[i]
            if best_c != ci:
                improved = True
                moved_any = True
    return moved_any


def louvain(adjacency: np.ndarray, resolution: float = 1.0,
            seed: int = 0) -> tuple[np.ndarray, float, list[float]]:
    """Two-phase Louvain on the undirected projection of a directed graph.

    Node visit order is sorted and ties prefer the lowest community id, so
    the result is deterministic; ``seed`` is accepted for interface parity.
    Returns (community id per node, final modularity, modularity per phase).
    """
    A0 = undirected_projection(adjacency)
    n = A0.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0.0, []
    if A0.sum() == 0:
        return np.arange(n, dtype=np.int64), 0.0, []

    node_comm = np.arange(n, dtype=np.int64)     # community per original node
    A = A0.copy()
    phase_q: list[float] = []
    while True:
        comm = np.arange(A.shape[0], dtype=np.int64)
        moved = _louvain_local_pass(A, comm, resolution)
        # compact community labels in order of first appearance
        labels = {}
        for c in comm:
            labels.setdefault(int(c), len(labels))
        comm = np.array([labels[int(c)] for c in comm], dtype=np.int64)
        node_comm = comm[node_comm]
        phase_q.append(modularity(A0, node_comm, resolution))
        if not moved or len(labels) == A.shape[0]:
            break
        # aggregate: communities become super-nodes, intra weight -> self-loops
        m = len(labels)
        A_new = np.zeros((m, m), dtype=np.float64)
        for i in range(A.shape[0]):
            for j in np.nonzero(A[i])[0]:
                A_new[comm[i], comm[j]] += A[i, j]
        A = A_new
    # stable relabel by first appearance over sorted node ids
    final = {}
    for c in node_comm:
        final.setdefault(int(c), len(final))
    node_comm = np.array([final[int(c)] for c in node_comm], dtype=np.int64)
    return node_comm, phase_q[-1] if phase_q else 0.0, phase_q


# ---------------------------------------------------------------------------
# correlations and feature export

def _ranks(x: np.ndarray) -> np.ndarray:
    """Average ranks (1-based) with ties sharing their mean rank."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=np.float64)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_correlation(x, y) -> Optional[float]:
    """Spearman rank correlation: Pearson r over average ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return volume_correlation(_ranks(x), _ranks(y))


def popularity_rank_correlation(scores: dict, rank_by_domain: dict) -> Optional[float]:
    """Spearman correlation between site scores and an external popularity rank.

    Popularity files use rank 1 = most popular, so ranks are negated before
    correlating; only domains present in both inputs are considered.
    """
    shared = sorted(set(scores) & set(rank_by_domain))
    if len(shared) < 2:
        return None
    return spearman_correlation([scores[d] for d in shared],
                                [-rank_by_domain[d] for d in shared])


def volume_correlation(series_a: np.ndarray, series_b: np.ndarray) -> Optional[float]:
    """Pearson r between two aligned bucket series; None when undefined."""
    a = np.asarray(series_a, dtype=np.float64)
    b = np.asarray(series_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("series must be 1-D and equal length")
    if a.size < 2:
        raise ValueError("need at least two buckets")
    da, db = a - a.mean(), b - b.mean()
    va, vb = np.dot(da, da), np.dot(db, db)
    if va == 0.0 or vb == 0.0:
        log.warning("zero-variance series; correlation undefined")
        return None
    return float(np.dot(da, db) / np.sqrt(va * vb))


def reliability_feature_matrix(aggregates, sites, top_narratives: int = 1000):
    """Per-site stance percentages as a dense feature matrix with labels.

    ``aggregates`` is the output of stance aggregation; targets are ranked by
    total article volume and truncated to ``top_narratives``.  Returns
    (domains, feature column names, matrix, coverage matrix, reliability
    labels); sites without coverage of a target get 0.0 features and a False
    coverage flag there.
    """
    volume: dict[str, int] = {}
    for agg in aggregates:
        volume[agg.target] = volume.get(agg.target, 0) + agg.article_count
    targets = sorted(volume, key=lambda t: (-volume[t], t))[:top_narratives]
    t_index = {t: j for j, t in enumerate(targets)}
    domains = sorted({s.domain for s in sites})
    d_index = {d: i for i, d in enumerate(domains)}
    reliability = {s.domain: s.reliability for s in sites}

    matrix = np.zeros((len(domains), 3 * len(targets)), dtype=np.float64)
    coverage = np.zeros((len(domains), len(targets)), dtype=bool)
    for agg in aggregates:
        j = t_index.get(agg.target)
        if j is None:
            continue
        i = d_index[sites[agg.site_ref].domain]
        matrix[i, 3 * j:3 * j + 3] = (agg.pro_pct, agg.against_pct, agg.neutral_pct)
        coverage[i, j] = True
    columns = []
    for t in targets:
        columns += [f"{t}:pro", f"{t}:against", f"{t}:neutral"]
    labels = [reliability[d] for d in domains]
    return domains, columns, matrix, coverage, labels
