"""Keyword and stance-tag association scoring via pointwise mutual information.

PMI(x, g) = log2( P(x, g) / (P(x) P(g)) ) computed from co-occurrence counts
with add-alpha smoothing applied to every (x, g) cell, which keeps rare units
from dominating the rankings.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .clustering import StoryCluster
from .corpus import Corpus
from .wordlists import FIRST_NAMES, STOPWORDS

log = logging.getLogger(__name__)

_WORD_RE = re.compile(r"[a-z][a-z0-9\-']*")
_VOWELS = set("aeiou")

# shallow pattern classes standing in for a NER category filter:
# bare numbers, money, percentages, ordinals
_BLOCKED_PATTERNS = [
    re.compile(r"^\d+([.,]\d+)*$"),
    re.compile(r"^[$€£¥]\d"),
    re.compile(r"\d[$€£¥]$"),
    re.compile(r"^\d+([.,]\d+)*%$|^%\d"),
    re.compile(r"^\d+(st|nd|rd|th)$"),
]


def simple_stem(word: str) -> str:
    """Deterministic rule-based normalizer: plural -s/-es, -ing, -ed.

    Intentionally conservative; it only needs to map inflected forms of the
    same word together, not produce dictionary lemmas.
    """
    w = word.lower()
    if len(w) > 4 and w.endswith("ies"):
        return w[:-3] + "y"
    if len(w) > 5 and w.endswith("ing"):
        stem = w[:-3]
        if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in "lsz":
            stem = stem[:-1]          # running -> run
        elif not any(ch in _VOWELS for ch in stem):
            return w                  # string -> string
        return stem
    if len(w) > 4 and w.endswith("ed"):
        stem = w[:-2]
        if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in "lsz":
            stem = stem[:-1]          # stopped -> stop
        elif not any(ch in _VOWELS for ch in stem):
            return w
        return stem
    if (len(w) > 3 and w.endswith("es") and w[-3] in "sxz") or w.endswith(("ches", "shes")):
        return w[:-2]                 # boxes -> box, churches -> church
    if len(w) > 3 and w.endswith("s") and not w.endswith(("ss", "us", "is")):
        return w[:-1]                 # vaccines -> vaccine
    return w


def tokenize(text: str, normalizer: Callable[[str], str] = simple_stem,
             stopwords: frozenset = STOPWORDS) -> list[str]:
    out = []
    for m in _WORD_RE.finditer(text.lower()):
        raw = m.group(0)
        if raw in stopwords:
            continue
        tok = normalizer(raw)
        if len(tok) > 1 and tok not in stopwords:
            out.append(tok)
    return out


@dataclass
class PmiTable:
    """Joint counts over (unit, group) with their smoothed PMI scores."""

    units: list            # row labels (words or stance tags)
    groups: list           # column labels (cluster ids or ecosystems)
    counts: np.ndarray     # raw counts, (len(units), len(groups))
    alpha: float
    scores: np.ndarray     # PMI matrix, same shape as counts

    def score(self, unit, group) -> float:
        return float(self.scores[self.units.index(unit), self.groups.index(group)])


def pmi_from_counts(units: Sequence, groups: Sequence, counts: np.ndarray,
                    alpha: float = 1.0) -> PmiTable:
    """Build the smoothed PMI table from a raw count matrix (log base 2)."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    smoothed = counts.astype(np.float64) + alpha
    total = smoothed.sum()
    if total <= 0:
        raise ValueError("count matrix is empty")
    p_joint = smoothed / total
    p_unit = p_joint.sum(axis=1, keepdims=True)
    p_group = p_joint.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore"):
        scores = np.log2(p_joint) - np.log2(p_unit) - np.log2(p_group)
    return PmiTable(list(units), list(groups), counts, alpha, scores)


def cluster_word_counts(clusters: Iterable[StoryCluster], corpus: Corpus,
                        assignment: np.ndarray,
                        normalizer: Callable[[str], str] = simple_stem,
                        stopwords: frozenset = STOPWORDS):
    """Token counts per non-pruned cluster; warns on clusters without text."""
    active = [c for c in clusters if not c.pruned]
    vocab: dict[str, int] = {}
    rows: list[dict[int, int]] = [dict() for _ in active]
    col_of = {c.cluster_id: j for j, c in enumerate(active)}
    for i in range(corpus.n_passages):
        cid = int(assignment[i])
        j = col_of.get(cid)
        if j is None or corpus.text[i] is None:
            continue
        for tok in tokenize(corpus.text[i], normalizer, stopwords):
            w = vocab.setdefault(tok, len(vocab))
            rows[j][w] = rows[j].get(w, 0) + 1
    counts = np.zeros((len(vocab), len(active)), dtype=np.int64)
    for j, row in enumerate(rows):
        for w, c in row.items():
            counts[w, j] = c
    for j, c in enumerate(active):
        if counts[:, j].sum() == 0:
            log.warning("cluster %d has no text; keyword list will be empty", c.cluster_id)
    words = [None] * len(vocab)
    for w, idx in vocab.items():
        words[idx] = w
    return words, [c.cluster_id for c in active], counts


def pmi_keywords(clusters: Iterable[StoryCluster], corpus: Corpus,
                 assignment: np.ndarray, top_k: int = 10, alpha: float = 1.0,
                 normalizer: Callable[[str], str] = simple_stem,
                 stopwords: frozenset = STOPWORDS) -> dict[int, list[tuple[str, float]]]:
    """Top-k PMI keywords per non-pruned cluster, ties broken lexicographically."""
    words, cluster_ids, counts = cluster_word_counts(
        clusters, corpus, assignment, normalizer, stopwords)
    out: dict[int, list[tuple[str, float]]] = {cid: [] for cid in cluster_ids}
    if not words:
        return out
    table = pmi_from_counts(words, cluster_ids, counts, alpha)
    word_order = np.array(words)
    for j, cid in enumerate(cluster_ids):
        if counts[:, j].sum() == 0:
            continue
        col = table.scores[:, j]
        ranked = sorted(range(len(words)), key=lambda w: (-col[w], word_order[w]))
        out[cid] = [(words[w], float(col[w])) for w in ranked[:top_k]]
    return out


def pmi_stance_associations(tag_counts: Mapping[tuple[str, str], Mapping[str, int]],
                            ecosystems: Sequence[str],
                            min_articles: int = 500,
                            alpha: float = 1.0) -> dict[str, list[tuple[str, str, float]]]:
    """Rank (direction, target) stance tags by PMI with each ecosystem.

    ``tag_counts`` maps (direction, target) -> per-ecosystem article counts.
    Tags below ``min_articles`` in any considered ecosystem are dropped to
    avoid spurious associations.
    """
    tags = sorted(t for t, per_eco in tag_counts.items()
                  if all(per_eco.get(e, 0) >= min_articles for e in ecosystems))
    if not tags:
        log.warning("no stance tags meet the %d-article floor in every ecosystem", min_articles)
        return {e: [] for e in ecosystems}
    counts = np.array([[tag_counts[t].get(e, 0) for e in ecosystems] for t in tags],
                      dtype=np.int64)
    table = pmi_from_counts(tags, list(ecosystems), counts, alpha)
    out: dict[str, list[tuple[str, str, float]]] = {}
    for j, eco in enumerate(ecosystems):
        col = table.scores[:, j]
        ranked = sorted(range(len(tags)), key=lambda i: (-col[i], tags[i]))
        out[eco] = [(tags[i][0], tags[i][1], float(col[i])) for i in ranked]
    return out


def is_blocked_token(token: str, blocked_names: frozenset = FIRST_NAMES,
                     stopwords: frozenset = STOPWORDS) -> bool:
    t = token.lower()
    if t in stopwords or t in blocked_names:
        return True
    return any(p.search(t) for p in _BLOCKED_PATTERNS)


def select_stance_targets(keywords: Mapping[int, list[tuple[str, float]]],
                          top_n_entities: int = 5000,
                          scope_top: int = 10,
                          stopwords: frozenset = STOPWORDS,
                          blocked_names: frozenset = FIRST_NAMES) -> list[str]:
    """Global stance-target inventory from the per-cluster keyword lists.

    Candidates are keywords appearing in any cluster's top ``scope_top`` PMI
    list; they are ranked by how many clusters feature them (then
    lexicographically) after stopword, first-name, and shallow-pattern
    filtering.
    """
    freq: dict[str, int] = {}
    for ranked in keywords.values():
        for word, _score in ranked[:scope_top]:
            if is_blocked_token(word, blocked_names, stopwords):
                continue
            freq[word] = freq.get(word, 0) + 1
    ranked_targets = sorted(freq, key=lambda w: (-freq[w], w))
    return ranked_targets[:top_n_entities]


def target_scope(keywords: Mapping[int, list[tuple[str, float]]],
                 targets: Iterable[str], scope_top: int = 10) -> dict[str, set[int]]:
    """Clusters in scope per target: those listing it among their top PMI keywords."""
    wanted = set(targets)
    scope: dict[str, set[int]] = {t: set() for t in wanted}
    for cid, ranked in keywords.items():
        for word, _score in ranked[:scope_top]:
            if word in wanted:
                scope[word].add(cid)
    return scope
