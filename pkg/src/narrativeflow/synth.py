"""Ground-truth synthetic generators for validating clustering and network
inference at desk scale: spherical embedding blobs with known labels, and
independent-cascade diffusion runs over a known random graph.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .cascades import Cascade
from .corpus import EmbeddingMatrix

MAX_CASCADE_RETRIES = 1000


@dataclass(frozen=True)
class SynthSpec:
    seed: int = 0
    n_sites: int = 50
    n_clusters: int = 5
    dim: int = 32
    cascades_per_run: int = 500
    points_per_cluster: int = 200
    edge_density: float = 0.06
    alpha_t: float = 1.0
    beta: float = 0.5
    blob_intra_cos: float = 0.95
    blob_inter_cos: float = 0.2

    def __post_init__(self):
        if min(self.n_sites, self.n_clusters, self.dim, self.cascades_per_run,
               self.points_per_cluster) <= 0:
            raise ValueError("all sizes must be positive")
        if not self.blob_inter_cos < self.blob_intra_cos:
            raise ValueError("blob_inter_cos must be below blob_intra_cos")
        if self.edge_density <= 0 or self.alpha_t <= 0:
            raise ValueError("edge_density and alpha_t must be positive")
        # beta = 0 is admitted: every cascade degenerates to a singleton and
        # generation fails after bounded retries rather than up front
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must be in [0, 1]")


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def gen_blob_centroids(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """Unit centroids with pairwise cosine <= blob_inter_cos."""
    k, dim = spec.n_clusters, spec.dim
    if k <= dim and spec.blob_inter_cos >= 0.0:
        # a random orthonormal frame always satisfies the separation
        basis, _ = np.linalg.qr(rng.standard_normal((dim, k)))
        return basis.T.copy()
    centroids: list[np.ndarray] = []
    for _ in range(10000):
        cand = _unit(rng.standard_normal(dim))
        if all(float(cand @ c) <= spec.blob_inter_cos for c in centroids):
            centroids.append(cand)
            if len(centroids) == k:
                return np.vstack(centroids)
    raise ValueError(
        f"infeasible geometry: cannot place {k} centroids in dim {dim} "
        f"at pairwise cosine <= {spec.blob_inter_cos}")


def gen_blobs(spec: SynthSpec) -> tuple[EmbeddingMatrix, np.ndarray]:
    """Labeled points on the unit sphere clustered around separated centroids.

    Noise is scaled so the expected point-to-centroid cosine is about
    blob_intra_cos; deterministic for a fixed seed.
    """
    rng = np.random.default_rng(spec.seed)
    centroids = gen_blob_centroids(spec, rng)
    # for x = c + sigma*g renormalized, E[cos(x, c)] ~ 1/sqrt(1 + sigma^2 * dim)
    sigma = math.sqrt(max(1.0 / spec.blob_intra_cos ** 2 - 1.0, 0.0) / spec.dim)
    points, labels = [], []
    for cid in range(spec.n_clusters):
        noise = rng.standard_normal((spec.points_per_cluster, spec.dim)) * sigma
        block = centroids[cid][None, :] + noise
        block /= np.linalg.norm(block, axis=1)[:, None]
        points.append(block)
        labels += [cid] * spec.points_per_cluster
    data = np.vstack(points).astype(np.float32)
    data /= np.linalg.norm(data, axis=1)[:, None]   # renormalize after f32 cast
    return EmbeddingMatrix(data=data, normalized=True), np.asarray(labels, dtype=np.int64)


def gen_graph(spec: SynthSpec, rng: np.random.Generator) -> set[tuple[int, int]]:
    """Directed random graph: each ordered pair independently with edge_density."""
    edges = set()
    for i in range(spec.n_sites):
        for j in range(spec.n_sites):
            if i != j and rng.random() < spec.edge_density:
                edges.add((i, j))
    return edges


def _simulate_one(edges_out: dict[int, list[int]], spec: SynthSpec,
                  rng: np.random.Generator) -> list[tuple[int, float]]:
    """One independent-cascade run: min arrival time per node, exponential delays."""
    root = int(rng.integers(spec.n_sites))
    horizon = 10.0 / spec.alpha_t
    infected: dict[int, float] = {}
    heap: list[tuple[float, int]] = [(0.0, root)]
    while heap:
        t, node = heapq.heappop(heap)
        if node in infected:
            continue
        infected[node] = t
        for nbr in edges_out.get(node, ()):   # neighbors pre-sorted
            if nbr in infected:
                continue
            if rng.random() < spec.beta:
                dt = rng.exponential(1.0 / spec.alpha_t)
                if t + dt <= horizon:
                    heapq.heappush(heap, (t + dt, nbr))
    return sorted(infected.items(), key=lambda kv: (kv[1], kv[0]))


def gen_cascades(spec: SynthSpec) -> tuple[set[tuple[int, int]], list[Cascade]]:
    """Ground-truth graph plus simulated cascades (every one has >= 2 events).

    Each cascade draws from its own child generator derived from the master
    seed, so generation order cannot perturb the stream.
    """
    rng = np.random.default_rng([spec.seed, 0x67617068])
    edges = gen_graph(spec, rng)
    edges_out: dict[int, list[int]] = {}
    for i, j in sorted(edges):
        edges_out.setdefault(i, []).append(j)
    cascades: list[Cascade] = []
    for ci in range(spec.cascades_per_run):
        for attempt in range(MAX_CASCADE_RETRIES):
            crng = np.random.default_rng([spec.seed, ci, attempt])
            events = _simulate_one(edges_out, spec, crng)
            if len(events) >= 2:
                ev = tuple((node, t) for node, t in events)
                cascades.append(Cascade(cluster_id=ci, events=ev, horizon=ev[-1][1] + 1.0))
                break
        else:
            raise RuntimeError(
                f"cascade {ci}: no multi-site cascade after {MAX_CASCADE_RETRIES} tries "
                "(graph too sparse or beta too low)")
    return edges, cascades


def write_true_edges(path, edges: set[tuple[int, int]], node_names=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("src\tdst\n")
        for i, j in sorted(edges):
            a = node_names[i] if node_names else f"node{i}"
            b = node_names[j] if node_names else f"node{j}"
            fh.write(f"{a}\t{b}\n")
