#!/usr/bin/env python3
"""Generate the bundled mini corpus fixture: a deterministic synthetic dataset
of ~30 sites across the three ecosystems, 12 planted story clusters with
topic vocabulary, passage embeddings, publish schedules that imply an
influence ordering, and stance labels with ecosystem-dependent leanings.

Run from the repository root:

    python3 tools/make_mini_corpus.py tests/data/mini_corpus

The output is committed; regenerating with the same seed is byte-identical.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from narrativeflow.corpus import EmbeddingMatrix, Site, write_embeddings, write_sites
from narrativeflow.synth import SynthSpec, gen_blob_centroids

SEED = 20240131
DIM = 16
N_CLUSTERS = 12
TARGETS = ["vaccine", "election", "economy", "climate"]

# row i is the vocabulary of cluster i, themed to match its anchor
# target TARGETS[i % 4]
CLUSTER_WORDS = [
    ["booster", "trial", "dose", "efficacy"],
    ["ballot", "recount", "precinct", "turnout"],
    ["inflation", "rates", "hiring", "wages"],
    ["wildfire", "drought", "emission", "heatwave"],
    ["mandate", "exemption", "clinic", "rollout"],
    ["candidate", "debate", "primary", "endorsement"],
    ["tariff", "exports", "factory", "supplychain"],
    ["flood", "glacier", "sealevel", "storms"],
    ["sideeffect", "batch", "recall", "lawsuit"],
    ["audit", "fraudclaim", "certification", "lawmaker"],
    ["budget", "deficit", "stimulus", "taxcut"],
    ["pipeline", "solar", "windfarm", "permit"],
]

FILLER = """report official statement yesterday according country region group
leader public comment response issue plan announcement decision meeting
support question record numbers update week month state city department
agency member program effort change review""".split()

# ecosystem-dependent stance leanings per target: (pro, against, neutral)
LEANINGS = {
    ("reliable", "vaccine"): (0.70, 0.10, 0.20),
    ("mixed", "vaccine"): (0.40, 0.30, 0.30),
    ("unreliable", "vaccine"): (0.10, 0.75, 0.15),
    ("reliable", "election"): (0.50, 0.20, 0.30),
    ("mixed", "election"): (0.35, 0.35, 0.30),
    ("unreliable", "election"): (0.15, 0.60, 0.25),
    ("reliable", "economy"): (0.45, 0.25, 0.30),
    ("mixed", "economy"): (0.35, 0.35, 0.30),
    ("unreliable", "economy"): (0.25, 0.45, 0.30),
    ("reliable", "climate"): (0.75, 0.10, 0.15),
    ("mixed", "climate"): (0.45, 0.25, 0.30),
    ("unreliable", "climate"): (0.15, 0.70, 0.15),
}

PREFIXES = ["daily", "global", "sunrise", "liberty", "metro", "prime", "valley",
            "north", "eagle", "harbor"]
SUFFIXES = {"reliable": "wire", "mixed": "times", "unreliable": "truth"}


def make_sites(rng):
    sites = []
    for eco in ("reliable", "mixed", "unreliable"):
        for i in range(10):
            domain = f"{PREFIXES[i]}{SUFFIXES[eco]}.com"
            part = round(float(rng.uniform(-1, 1)), 3) if rng.random() < 0.7 else None
            sites.append(Site(domain, eco, part))
    return sites


def passage_text(rng, anchor, words):
    picks = [anchor] * int(rng.integers(2, 4))
    picks += [words[int(rng.integers(len(words)))] for _ in range(int(rng.integers(3, 6)))]
    picks += [FILLER[int(rng.integers(len(FILLER)))] for _ in range(int(rng.integers(10, 22)))]
    rng.shuffle(picks)
    return " ".join(picks) + "."


def main(outdir):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)

    sites = make_sites(rng)
    eco_of = {i: s.reliability for i, s in enumerate(sites)}
    write_sites(outdir / "sites.csv", sites)

    spec = SynthSpec(seed=SEED, n_clusters=N_CLUSTERS, dim=DIM,
                     blob_intra_cos=0.95, blob_inter_cos=0.2)
    centroids = gen_blob_centroids(spec, rng)
    sigma = float(np.sqrt((1.0 / spec.blob_intra_cos ** 2 - 1.0) / DIM))

    # every target gets 15 "covering" sites that post in each of its clusters,
    # so bias-latent seed floors are met; the rest join at random
    covering = {t: set(rng.permutation(30)[:15].tolist()) for t in TARGETS}

    passages, vectors, stance_rows = [], [], []
    pid, aid = 0, 0
    for cid in range(N_CLUSTERS):
        anchor = TARGETS[cid % 4]
        words = CLUSTER_WORDS[cid]
        base_day = 19720.0 + 11.0 * cid
        if cid == N_CLUSTERS - 1:
            members = [int(rng.integers(30))]          # single-site cluster: pruned
        else:
            members = sorted(covering[anchor] |
                             set(rng.permutation(30)[: int(rng.integers(3, 8))].tolist()))
        for site_ref in members:
            eco = eco_of[site_ref]
            delay = {"reliable": rng.uniform(0.0, 2.0),
                     "mixed": rng.uniform(0.5, 3.0),
                     "unreliable": rng.uniform(1.0, 5.0)}[eco]
            n_articles = 2 if rng.random() < 0.3 else 1
            if cid == N_CLUSTERS - 1:
                n_articles = 3
            for a in range(n_articles):
                aid += 1
                day = round(base_day + float(delay) + 0.8 * a + float(rng.uniform(0, 0.4)), 4)
                pro, against, neutral = LEANINGS[(eco, anchor)]
                for _ in range(int(rng.integers(4, 9))):
                    pid += 1
                    text = passage_text(rng, anchor, words)
                    vec = centroids[cid] + sigma * rng.standard_normal(DIM)
                    vectors.append(vec / np.linalg.norm(vec))
                    passages.append({
                        "passage_id": pid,
                        "article_id": aid,
                        "site": sites[site_ref].domain,
                        "published_day": day,
                        "word_count": len(text.split()),
                        "embedding_row": pid - 1,
                        "text": text,
                    })
                    stance = rng.choice(["Pro", "Against", "Neutral"],
                                        p=[pro, against, neutral])
                    stance_rows.append((pid, anchor, str(stance)))

    data = np.vstack(vectors).astype(np.float32)
    data /= np.linalg.norm(data, axis=1)[:, None]
    write_embeddings(outdir / "embeddings.emb", EmbeddingMatrix(data=data, normalized=True))

    with open(outdir / "passages.jsonl", "w", encoding="utf-8") as fh:
        for obj in passages:
            fh.write(json.dumps(obj) + "\n")

    with open(outdir / "stances.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("passage_id,target,stance\n")
        for row in stance_rows:
            fh.write(",".join(str(x) for x in row) + "\n")

    print(f"mini corpus: {len(passages)} passages, {aid} articles, "
          f"{len(sites)} sites, dim {DIM} -> {outdir}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/mini_corpus")
