#!/usr/bin/env python3
"""Stance aggregation and bias latents on the bundled mini corpus.

Aggregates passage stance labels to per-(site, target) percentages, fits the
vaccine bias latent, and contrasts ecosystem stance distributions with
JS divergence.
"""
from collections import defaultdict
from pathlib import Path

import numpy as np

from narrativeflow.clustering import ClusterParams, clusters_from_assignment, dp_means, \
    prune_single_site
from narrativeflow.corpus import load_corpus, load_stances
from narrativeflow.keywords import pmi_keywords, target_scope
from narrativeflow.stance import aggregate_stances, fit_bias_latent, js_divergence, \
    simplistic_bias

mini = Path(__file__).resolve().parents[1] / "tests" / "data" / "mini_corpus"
corpus = load_corpus(mini / "passages.jsonl", mini / "embeddings.emb", mini / "sites.csv")
stances = load_stances(mini / "stances.csv", corpus)

result = dp_means(corpus.embeddings, ClusterParams(min_cos=0.5))
clusters = prune_single_site(clusters_from_assignment(corpus, result.assignment))
keywords = pmi_keywords(clusters, corpus, result.assignment, top_k=10)
targets = sorted({r.target for r in stances})
scope = target_scope(keywords, targets)

aggregates = aggregate_stances(stances, corpus, scope, result.assignment)
print(f"{len(aggregates)} (site, target) aggregates over {len(targets)} targets")

# ecosystem-level stance distributions toward "vaccine"
dist = defaultdict(lambda: np.zeros(3))
for a in aggregates:
    if a.target == "vaccine":
        eco = corpus.sites[a.site_ref].reliability
        dist[eco] += np.array([a.pro_pct, a.against_pct, a.neutral_pct]) * a.article_count
for eco in dist:
    dist[eco] /= dist[eco].sum()
    pro, against, neutral = dist[eco]
    print(f"  {eco:10s} vaccine stance mix: pro={pro:.2f} against={against:.2f} "
          f"neutral={neutral:.2f} (simplistic bias {pro - against:+.2f})")
d = js_divergence(dist["reliable"], dist["unreliable"])
print(f"JS divergence reliable vs unreliable on vaccine: {d:.3f} bits")

latent = fit_bias_latent("vaccine", aggregates, min_articles=2)
print(f"vaccine latent: {len(latent.seed_sites)} seed sites, "
      f"noise variance {latent.noise_variance:.3f}")
ranked = sorted(latent.coefficients.items(), key=lambda kv: -abs(kv[1][0]))
print("stances most predictive of vaccine bias:")
for (direction, target), (coef, std) in ranked[:4]:
    print(f"  {direction:8s} {target:10s} coef {coef:+.3f} (std {std:.3f})")
low = sorted(latent.z_scores.items(), key=lambda kv: kv[1])[:3]
for site, z in low:
    print(f"  most anti-vaccine: {corpus.sites[site].domain} (z={z:+.2f})")
