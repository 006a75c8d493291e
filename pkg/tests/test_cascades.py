from collections import Counter

import numpy as np
import pytest

from narrativeflow.cascades import (
    Cascade, CascadeFilter, Predominance, build_cascades, cluster_article_ecosystems,
    ecosystem_ratio, filter_cascades, load_cascades, write_cascades,
)
from narrativeflow.clustering import clusters_from_assignment
from narrativeflow.corpus import Corpus, EmbeddingMatrix, Site


def _corpus(rows):
    """rows: list of (domain, reliability, article_id, day, cluster)."""
    domains = []
    for d, _r, _a, _t, _c in rows:
        if d not in domains:
            domains.append(d)
    reli = {d: r for d, r, _a, _t, _c in rows}
    sites = [Site(d, reli[d]) for d in domains]
    index = {d: i for i, d in enumerate(domains)}
    n = len(rows)
    data = np.tile(np.array([1.0, 0.0], dtype=np.float32), (n, 1))
    corpus = Corpus(
        sites=sites,
        passage_id=np.arange(1, n + 1, dtype=np.uint64),
        article_id=np.asarray([a for _d, _r, a, _t, _c in rows], dtype=np.uint64),
        site_ref=np.asarray([index[d] for d, _r, _a, _t, _c in rows], dtype=np.int64),
        published_day=np.asarray([t for _d, _r, _a, t, _c in rows], dtype=np.float64),
        word_count=np.full(n, 5, dtype=np.int64),
        embedding_row=np.arange(n, dtype=np.int64),
        text=[None] * n,
        embeddings=EmbeddingMatrix(data=data, normalized=True),
    )
    assignment = np.asarray([c for _d, _r, _a, _t, c in rows], dtype=np.int64)
    return corpus, assignment


def test_earliest_post_per_site():
    corpus, assignment = _corpus([
        ("a.x", "reliable", 1, 3.0, 0),
        ("a.x", "reliable", 2, 5.0, 0),
        ("b.x", "reliable", 3, 4.0, 0),
    ])
    clusters = clusters_from_assignment(corpus, assignment)
    cascades = build_cascades(clusters, corpus)
    assert len(cascades) == 1
    assert cascades[0].events == ((0, 3.0), (1, 4.0))
    assert cascades[0].horizon == pytest.approx(5.0)


def test_single_site_cluster_dropped():
    corpus, assignment = _corpus([("a.x", "reliable", 1, 1.0, 0),
                                  ("a.x", "reliable", 2, 2.0, 0)])
    clusters = clusters_from_assignment(corpus, assignment)
    assert build_cascades(clusters, corpus) == []


def test_pruned_cluster_excluded():
    corpus, assignment = _corpus([("a.x", "reliable", 1, 1.0, 0),
                                  ("b.x", "reliable", 2, 2.0, 0)])
    clusters = clusters_from_assignment(corpus, assignment)
    clusters[0].pruned = True
    assert build_cascades(clusters, corpus) == []


def test_tie_ordered_by_site_index():
    corpus, assignment = _corpus([
        ("a.x", "reliable", 1, 2.0, 0),
        ("b.x", "reliable", 2, 2.0, 0),
        ("c.x", "reliable", 3, 1.0, 0),
    ])
    clusters = clusters_from_assignment(corpus, assignment)
    cascades = build_cascades(clusters, corpus)
    assert cascades[0].events == ((2, 1.0), (0, 2.0), (1, 2.0))


def test_cascade_validation():
    with pytest.raises(ValueError, match="one event per site"):
        Cascade(0, ((1, 0.0), (1, 2.0)), 3.0)
    with pytest.raises(ValueError, match="sorted"):
        Cascade(0, ((1, 2.0), (0, 0.0)), 3.0)


def test_order_independence_of_passages():
    rows = [
        ("a.x", "reliable", 1, 3.0, 0),
        ("b.x", "reliable", 2, 1.0, 0),
        ("c.x", "reliable", 3, 2.0, 0),
    ]
    corpus1, assign1 = _corpus(rows)
    corpus2, assign2 = _corpus(rows[::-1])
    c1 = build_cascades(clusters_from_assignment(corpus1, assign1), corpus1)
    c2 = build_cascades(clusters_from_assignment(corpus2, assign2), corpus2)
    by_domain1 = [(corpus1.sites[s].domain, t) for s, t in c1[0].events]
    by_domain2 = [(corpus2.sites[s].domain, t) for s, t in c2[0].events]
    assert by_domain1 == by_domain2


# ---------------------------------------------------------------------------
# predominance and stance filters

def _plurality_corpus(unrel, rel, mixed):
    rows = []
    aid = 0
    for kind, count in (("unreliable", unrel), ("reliable", rel), ("mixed", mixed)):
        for i in range(count):
            aid += 1
            rows.append((f"{kind}{i}.x", kind, aid, float(aid), 0))
    return _corpus(rows)


def test_unreliable_plurality_kept():
    corpus, assignment = _plurality_corpus(unrel=5, rel=3, mixed=3)
    clusters = clusters_from_assignment(corpus, assignment)
    cascades = build_cascades(clusters, corpus)
    flt = CascadeFilter(predominance=Predominance.UNRELIABLE_PLURALITY)
    kept = filter_cascades(cascades, flt, {0: clusters[0]}, corpus)
    assert len(kept) == 1


def test_plurality_tie_dropped():
    corpus, assignment = _plurality_corpus(unrel=3, rel=3, mixed=0)
    clusters = clusters_from_assignment(corpus, assignment)
    cascades = build_cascades(clusters, corpus)
    flt = CascadeFilter(predominance=Predominance.UNRELIABLE_PLURALITY)
    assert filter_cascades(cascades, flt, {0: clusters[0]}, corpus) == []


def test_unreliable_and_mixed_plurality():
    corpus, assignment = _plurality_corpus(unrel=2, rel=3, mixed=2)
    clusters = clusters_from_assignment(corpus, assignment)
    cascades = build_cascades(clusters, corpus)
    flt = CascadeFilter(predominance=Predominance.UNRELIABLE_AND_MIXED_PLURALITY)
    assert len(filter_cascades(cascades, flt, {0: clusters[0]}, corpus)) == 1
    counts = cluster_article_ecosystems(clusters[0], corpus)
    assert counts == Counter({"reliable": 3, "unreliable": 2, "mixed": 2})


def test_stance_filter_majority_and_min_sites():
    corpus, assignment = _corpus([
        ("a.x", "reliable", 1, 1.0, 0),
        ("b.x", "reliable", 2, 2.0, 0),
        ("c.x", "reliable", 3, 3.0, 0),
    ])
    clusters = clusters_from_assignment(corpus, assignment)
    cascades = build_cascades(clusters, corpus)
    stance_index = {
        (0, 0): Counter({"Against": 3, "Pro": 1}),   # majority against
        (0, 1): Counter({"Against": 1, "Pro": 1}),   # tie: not a majority
        (0, 2): Counter({"Pro": 2}),
    }
    flt = CascadeFilter(stance=("Against", "ukraine"))
    # only a.x majority-carries the stance -> below min_sites -> dropped
    assert filter_cascades(cascades, flt, {0: clusters[0]}, corpus, stance_index) == []

    stance_index[(0, 1)] = Counter({"Against": 2})
    kept = filter_cascades(cascades, flt, {0: clusters[0]}, corpus, stance_index)
    assert len(kept) == 1 and [s for s, _t in kept[0].events] == [0, 1]


def test_stance_filter_requires_index():
    flt = CascadeFilter(stance=("Pro", "x"))
    with pytest.raises(ValueError, match="stance_index"):
        filter_cascades([], flt, {}, None, None)


def test_filters_compose_commutatively():
    corpus, assignment = _corpus([
        ("u0.x", "unreliable", 1, 1.0, 0),
        ("u1.x", "unreliable", 2, 2.0, 0),
        ("r0.x", "reliable", 3, 3.0, 0),
    ])
    clusters = clusters_from_assignment(corpus, assignment)
    cascades = build_cascades(clusters, corpus)
    stance_index = {(0, 0): Counter({"Pro": 2}), (0, 1): Counter({"Pro": 1}),
                    (0, 2): Counter({"Pro": 3})}
    by_id = {0: clusters[0]}
    f_pred = CascadeFilter(predominance=Predominance.UNRELIABLE_PLURALITY)
    f_stance = CascadeFilter(stance=("Pro", "x"))
    a = filter_cascades(filter_cascades(cascades, f_pred, by_id, corpus),
                        f_stance, by_id, corpus, stance_index)
    b = filter_cascades(filter_cascades(cascades, f_stance, by_id, corpus, stance_index),
                        f_pred, by_id, corpus)
    assert a == b


def test_min_sites_validation():
    with pytest.raises(ValueError):
        CascadeFilter(min_sites=1)


# ---------------------------------------------------------------------------
# ecosystem ratio

def test_ratio_nine_to_one():
    rows = [(f"u{i}.x", "unreliable", i, 1.0, 0) for i in range(9)]
    rows.append(("r.x", "reliable", 100, 1.5, 0))
    rows.append(("m.x", "mixed", 101, 1.5, 0))     # ignored by the ratio
    corpus, assignment = _corpus(rows)
    cluster = clusters_from_assignment(corpus, assignment)[0]
    ratio = ecosystem_ratio(cluster, corpus, (0.0, 7.0))
    assert ratio.unreliable_articles == 9 and ratio.reliable_articles == 1
    assert ratio.smoothed == pytest.approx(5.0)
    assert ratio.raw == pytest.approx(9.0)


def test_ratio_zero_zero_smoothing_floor():
    corpus, assignment = _corpus([("u.x", "unreliable", 1, 50.0, 0),
                                  ("r.x", "reliable", 2, 60.0, 0)])
    cluster = clusters_from_assignment(corpus, assignment)[0]
    ratio = ecosystem_ratio(cluster, corpus, (0.0, 7.0))    # empty window
    assert ratio.smoothed == pytest.approx(1.0)


def test_ratio_fourteen_to_one():
    rows = [(f"u{i}.x", "unreliable", i, 2.0, 0) for i in range(14)]
    rows.append(("r.x", "reliable", 99, 3.0, 0))
    corpus, assignment = _corpus(rows)
    cluster = clusters_from_assignment(corpus, assignment)[0]
    assert ecosystem_ratio(cluster, corpus, (0.0, 7.0)).raw == pytest.approx(14.0)


def test_cascade_round_trip(tmp_path):
    corpus, assignment = _corpus([
        ("a.x", "reliable", 1, 1.0, 0),
        ("b.x", "reliable", 2, 2.5, 0),
    ])
    clusters = clusters_from_assignment(corpus, assignment)
    cascades = build_cascades(clusters, corpus)
    path = tmp_path / "cascades.jsonl"
    write_cascades(path, cascades, corpus)
    loaded = load_cascades(path, corpus.site_index)
    assert loaded == cascades
