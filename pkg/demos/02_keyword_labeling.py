#!/usr/bin/env python3
"""PMI keyword labeling of the bundled mini corpus.

Loads the committed fixture, reuses its planted story assignment by running
the clusterer, and prints each story's top keywords: the planted topic
vocabulary should dominate.
"""
from pathlib import Path

from narrativeflow.clustering import ClusterParams, clusters_from_assignment, dp_means, \
    prune_single_site
from narrativeflow.corpus import load_corpus
from narrativeflow.keywords import pmi_keywords, select_stance_targets, target_scope

mini = Path(__file__).resolve().parents[1] / "tests" / "data" / "mini_corpus"
corpus = load_corpus(mini / "passages.jsonl", mini / "embeddings.emb", mini / "sites.csv")
print(f"loaded {corpus.n_passages} passages from {len(corpus.sites)} sites")

result = dp_means(corpus.embeddings, ClusterParams(min_cos=0.5))
clusters = prune_single_site(clusters_from_assignment(corpus, result.assignment))
print(f"{result.k} clusters, {sum(c.pruned for c in clusters)} pruned as single-site")

keywords = pmi_keywords(clusters, corpus, result.assignment, top_k=10)
for cid in sorted(keywords)[:6]:
    top = ", ".join(w for w, _ in keywords[cid][:5])
    print(f"  story {cid:2d}: {top}")

targets = select_stance_targets(keywords, top_n_entities=8)
print("stance-target inventory:", targets)
scope = target_scope(keywords, targets[:2])
for t, cids in scope.items():
    print(f"  target {t!r} is in scope for clusters {sorted(cids)}")
