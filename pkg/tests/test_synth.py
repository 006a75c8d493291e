import numpy as np
import pytest
from scipy import stats

from narrativeflow.synth import (
    SynthSpec, _simulate_one, gen_blob_centroids, gen_blobs, gen_cascades,
    write_true_edges,
)


def test_orthogonal_centroids_when_room():
    spec = SynthSpec(seed=1, n_clusters=2, dim=2, blob_inter_cos=0.0)
    rng = np.random.default_rng(spec.seed)
    c = gen_blob_centroids(spec, rng)
    assert abs(float(c[0] @ c[1])) < 1e-10
    assert np.linalg.norm(c, axis=1) == pytest.approx([1.0, 1.0])


def test_blob_separation_and_cohesion():
    spec = SynthSpec(seed=3, n_clusters=5, dim=32, points_per_cluster=200,
                     blob_intra_cos=0.95, blob_inter_cos=0.2)
    matrix, labels = gen_blobs(spec)
    assert matrix.n == 1000 and matrix.dim == 32
    assert np.linalg.norm(matrix.data, axis=1) == pytest.approx(np.ones(1000), abs=1e-4)
    X = matrix.data.astype(np.float64)
    for cid in range(5):
        block = X[labels == cid]
        centroid = block.mean(axis=0)
        centroid /= np.linalg.norm(centroid)
        assert (block @ centroid).mean() >= 0.9


def test_blobs_deterministic():
    spec = SynthSpec(seed=9, n_clusters=3, dim=8, points_per_cluster=50)
    m1, l1 = gen_blobs(spec)
    m2, l2 = gen_blobs(spec)
    assert m1.data.tobytes() == m2.data.tobytes()
    assert np.array_equal(l1, l2)


def test_blob_infeasible_geometry():
    spec = SynthSpec(seed=0, n_clusters=40, dim=2, blob_inter_cos=-0.5,
                     blob_intra_cos=0.9)
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError, match="infeasible geometry"):
        gen_blob_centroids(spec, rng)


def test_spec_validation():
    with pytest.raises(ValueError):
        SynthSpec(blob_inter_cos=0.99, blob_intra_cos=0.9)
    with pytest.raises(ValueError):
        SynthSpec(n_sites=0)
    with pytest.raises(ValueError):
        SynthSpec(beta=1.5)


def test_beta_zero_errors_after_bounded_retries():
    spec = SynthSpec(seed=1, n_sites=4, cascades_per_run=1, edge_density=0.5, beta=0.0)
    with pytest.raises(RuntimeError, match="no multi-site cascade"):
        gen_cascades(spec)


def test_chain_transmission_with_beta_one():
    spec = SynthSpec(seed=4, n_sites=3, beta=0.999999, alpha_t=1.0)  # beta < 1 required
    edges_out = {0: [1], 1: [2]}
    for trial in range(50):
        rng = np.random.default_rng(trial)
        events = _simulate_one(edges_out, spec, rng)
        nodes = [n for n, _t in events]
        times = [t for _n, t in events]
        if nodes[0] == 0 and len(nodes) == 3:
            assert nodes == [0, 1, 2]
            assert times[0] < times[1] < times[2]


def test_infection_times_increase_along_paths():
    spec = SynthSpec(seed=6, n_sites=20, edge_density=0.2)
    _edges, cascades = gen_cascades(SynthSpec(seed=6, n_sites=20, edge_density=0.2,
                                              cascades_per_run=50))
    for c in cascades:
        times = [t for _s, t in c.events]
        assert all(times[i] <= times[i + 1] for i in range(len(times) - 1))
        assert times[0] == 0.0


def test_cascades_deterministic_and_multisite():
    spec = SynthSpec(seed=7, n_sites=50, cascades_per_run=100, edge_density=0.06)
    e1, c1 = gen_cascades(spec)
    e2, c2 = gen_cascades(spec)
    assert e1 == e2 and c1 == c2
    assert all(c.n_sites >= 2 for c in c1)


def test_exponential_delay_ks_fit():
    spec = SynthSpec(seed=12, n_sites=2, alpha_t=1.7, beta=0.999999)
    edges_out = {0: [1]}
    delays = []
    i = 0
    while len(delays) < 10000:
        rng = np.random.default_rng([12, i])
        events = _simulate_one(edges_out, spec, rng)
        if len(events) == 2 and events[0][0] == 0:
            delays.append(events[1][1] - events[0][1])
        i += 1
    stat, _p = stats.kstest(delays, "expon", args=(0, 1.0 / spec.alpha_t))
    assert stat < 0.05


def test_edge_density_sane():
    spec = SynthSpec(seed=5, n_sites=50, edge_density=0.06)
    rng = np.random.default_rng(5)
    from narrativeflow.synth import gen_graph
    edges = gen_graph(spec, rng)
    possible = 50 * 49
    assert 0.03 <= len(edges) / possible <= 0.09


def test_true_edges_file(tmp_path):
    path = tmp_path / "edges.tsv"
    write_true_edges(path, {(0, 1), (2, 0)})
    lines = path.read_text().splitlines()
    assert lines[0] == "src\tdst"
    assert lines[1:] == ["node0\tnode1", "node2\tnode0"]
