import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from narrativeflow.clustering import (
    ClusterParams, StoryCluster, assign_to_centroids, cluster_volume_series,
    clusters_from_assignment, dp_means, load_assignments, prune_single_site,
    write_assignments,
)
from narrativeflow.corpus import Corpus, EmbeddingMatrix, Site
from narrativeflow.synth import SynthSpec, gen_blobs


def _matrix(rows):
    data = np.asarray(rows, dtype=np.float64)
    data = data / np.linalg.norm(data, axis=1)[:, None]
    return EmbeddingMatrix(data=data.astype(np.float32), normalized=True)


# ---------------------------------------------------------------------------
# brute-force oracle: enumerate every partition whose blocks all satisfy the
# cosine admission rule, and return the best DP-means objective among them

def best_partition_objective(X, min_cos):
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    penalty = 2.0 * (1.0 - min_cos)
    best = [np.inf]

    def feasible(block_sum, members):
        norm = np.linalg.norm(block_sum)
        if norm <= 1e-12:
            return len(members) == 1
        return bool(np.all(X[members] @ block_sum >= min_cos * norm - 1e-12))

    def recurse(i, blocks, sums):
        if i == n:
            if all(feasible(s, b) for b, s in zip(blocks, sums)):
                total = 2.0 * n - 2.0 * sum(np.linalg.norm(s) for s in sums)
                best[0] = min(best[0], total + penalty * len(blocks))
            return
        for j in range(len(blocks)):
            blocks[j].append(i)
            recurse(i + 1, blocks, [s + X[i] if k == j else s for k, s in enumerate(sums)])
            blocks[j].pop()
        blocks.append([i])
        recurse(i + 1, blocks, sums + [X[i].copy()])
        blocks.pop()

    recurse(0, [], [])
    return best[0]


def test_two_identical_one_orthogonal():
    m = _matrix([[1, 0], [1, 0], [0, 1]])
    res = dp_means(m, ClusterParams(min_cos=0.5))
    assert res.k == 2
    sizes = sorted(np.bincount(res.assignment).tolist())
    assert sizes == [1, 2]


def test_all_identical_vectors():
    m = _matrix([[0.6, 0.8]] * 7)
    res = dp_means(m, ClusterParams(min_cos=0.5))
    assert res.k == 1
    assert np.allclose(res.centroids[0], [0.6, 0.8], atol=1e-6)


def test_blob_recovery_ari():
    m, labels = gen_blobs(SynthSpec(seed=11, n_clusters=5, dim=32, points_per_cluster=200,
                                    blob_intra_cos=0.95, blob_inter_cos=0.2))
    res = dp_means(m, ClusterParams(min_cos=0.5))
    assert res.k == 5
    assert adjusted_rand_score(labels, res.assignment) >= 0.95


def test_determinism_across_threads():
    m, _ = gen_blobs(SynthSpec(seed=5, n_clusters=4, dim=16, points_per_cluster=150))
    res1 = dp_means(m, ClusterParams(), threads=1)
    res8 = dp_means(m, ClusterParams(), threads=8)
    assert np.array_equal(res1.assignment, res8.assignment)
    assert np.array_equal(res1.centroids, res8.centroids)


def test_monotone_objective():
    for seed in range(6):
        m, _ = gen_blobs(SynthSpec(seed=seed, n_clusters=3, dim=8, points_per_cluster=60,
                                   blob_intra_cos=0.9, blob_inter_cos=0.3))
        res = dp_means(m, ClusterParams())
        trace = np.array(res.objective_trace)
        assert np.all(np.diff(trace) <= 1e-9)


def test_assignment_optimality_at_convergence():
    m, _ = gen_blobs(SynthSpec(seed=2, n_clusters=4, dim=16, points_per_cluster=100))
    params = ClusterParams(min_cos=0.5)
    res = dp_means(m, params)
    sims = m.data.astype(np.float64) @ res.centroids.T
    chosen = sims[np.arange(m.n), res.assignment]
    assert np.all(chosen >= params.min_cos)
    assert np.all(chosen >= sims.max(axis=1) - 1e-6)


def test_small_instance_matches_brute_force():
    rng = np.random.default_rng(99)
    for trial in range(8):
        n = int(rng.integers(5, 9))
        dim = int(rng.integers(2, 5))
        k_true = int(rng.integers(1, 3))
        centers = rng.standard_normal((k_true, dim))
        centers /= np.linalg.norm(centers, axis=1)[:, None]
        pts = centers[rng.integers(0, k_true, n)] + 0.15 * rng.standard_normal((n, dim))
        m = _matrix(pts)
        params = ClusterParams(min_cos=0.5)
        res = dp_means(m, params)
        oracle = best_partition_objective(m.data, params.min_cos)
        assert res.objective_trace[-1] <= oracle * 1.05 + 1e-9


def test_single_point():
    m = _matrix([[0.0, 1.0]])
    res = dp_means(m, ClusterParams())
    assert res.k == 1 and res.assignment.tolist() == [0]


def test_requires_normalized():
    m = EmbeddingMatrix(data=np.ones((2, 2), dtype=np.float32), normalized=False)
    with pytest.raises(ValueError):
        dp_means(m, ClusterParams())


def test_assign_to_centroids_frozen():
    centroids = np.array([[1.0, 0.0], [0.0, 1.0]])
    m = _matrix([[0.9, 0.1], [0.1, 0.9], [-1.0, -1.0]])
    out = assign_to_centroids(m, centroids, min_cos=0.5)
    assert out.tolist() == [0, 1, -1]


def test_param_validation():
    with pytest.raises(ValueError):
        ClusterParams(min_cos=1.5)
    with pytest.raises(ValueError):
        ClusterParams(converge_frac=0.0)
    assert ClusterParams(min_cos=0.5).penalty == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# pruning and volume series over a hand-built corpus

def _corpus_with(site_of_passage, days=None, article_ids=None, reliabilities=None):
    reliabilities = reliabilities or {}
    n = len(site_of_passage)
    domains = sorted(set(site_of_passage))
    sites = [Site(d, reliabilities.get(d, "reliable")) for d in domains]
    index = {d: i for i, d in enumerate(domains)}
    data = np.tile(np.array([1.0, 0.0], dtype=np.float32), (n, 1))
    return Corpus(
        sites=sites,
        passage_id=np.arange(1, n + 1, dtype=np.uint64),
        article_id=np.asarray(article_ids if article_ids is not None else range(n),
                              dtype=np.uint64),
        site_ref=np.asarray([index[d] for d in site_of_passage], dtype=np.int64),
        published_day=np.asarray(days if days is not None else [0.0] * n, dtype=np.float64),
        word_count=np.full(n, 5, dtype=np.int64),
        embedding_row=np.arange(n, dtype=np.int64),
        text=[None] * n,
        embeddings=EmbeddingMatrix(data=data, normalized=True),
    )


def test_prune_majority_site():
    corpus = _corpus_with(["a.x"] * 6 + ["b.x"] * 2 + ["c.x"] * 2)
    clusters = clusters_from_assignment(corpus, np.zeros(10, dtype=np.int64))
    prune_single_site(clusters)
    assert clusters[0].pruned                          # 6/10 from one site
    assert clusters[0].site_histogram["a.x"] == 6
    assert sum(clusters[0].site_histogram.values()) == clusters[0].size


def test_prune_below_threshold_kept():
    corpus = _corpus_with(["a.x"] * 4 + ["b.x"] * 3 + ["c.x"] * 3)
    clusters = prune_single_site(clusters_from_assignment(corpus, np.zeros(10, dtype=np.int64)))
    assert not clusters[0].pruned                      # max share 0.4


def test_prune_exact_threshold_and_singleton():
    corpus = _corpus_with(["a.x"] * 5 + ["b.x"] * 5)
    clusters = prune_single_site(clusters_from_assignment(corpus, np.zeros(10, dtype=np.int64)))
    assert clusters[0].pruned                          # share exactly 0.5

    corpus1 = _corpus_with(["a.x"])
    clusters1 = prune_single_site(clusters_from_assignment(corpus1, np.zeros(1, dtype=np.int64)))
    assert clusters1[0].pruned                         # singleton share 1.0


def test_volume_series_hand_count():
    corpus = _corpus_with(
        ["rel.x", "rel.x", "unrel.x"],
        days=[3.0, 5.0, 4.0],
        article_ids=[1, 2, 3],
        reliabilities={"rel.x": "reliable", "unrel.x": "unreliable"},
    )
    cluster = clusters_from_assignment(corpus, np.zeros(3, dtype=np.int64))[0]
    series = cluster_volume_series(cluster, corpus, bucket_days=7)
    assert series["reliable"].tolist() == [2]
    assert series["unreliable"].tolist() == [1]


def test_volume_series_distinct_articles():
    corpus = _corpus_with(["rel.x", "rel.x"], days=[1.0, 2.0], article_ids=[42, 42])
    cluster = clusters_from_assignment(corpus, np.zeros(2, dtype=np.int64))[0]
    series = cluster_volume_series(cluster, corpus, bucket_days=7)
    assert series["reliable"].tolist() == [1]          # same article counted once


def test_assignment_round_trip(tmp_path):
    a = np.array([0, 2, 1, 2], dtype=np.int64)
    path = tmp_path / "assign.bin"
    write_assignments(path, a)
    assert load_assignments(path).tolist() == a.tolist()
    assert path.read_bytes()[:8] == (0).to_bytes(8, "little")
