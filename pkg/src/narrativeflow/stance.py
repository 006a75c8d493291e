"""Stance aggregation and website bias modeling.

Passage-level stance labels are rolled up to article level by majority vote
(ties go Neutral), then to per-(site, target) percentage records.  A site's
simplistic bias toward a target is pro share minus against share; the bias
latent generalizes that score to sites with thin coverage by ridge-regressing
the z-scored bias of well-covered seed sites on their stances toward every
other target.
"""
from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Corpus, StanceInput

log = logging.getLogger(__name__)

NOISE_VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class StanceAggregate:
    site_ref: int
    target: str
    pro_pct: float
    against_pct: float
    neutral_pct: float
    article_count: int

    def __post_init__(self):
        total = self.pro_pct + self.against_pct + self.neutral_pct
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"stance percentages sum to {total}, not 1")
        if self.article_count < 1:
            raise ValueError("aggregate requires at least one article")


@dataclass
class BiasLatent:
    target: str
    seed_sites: list[int]
    z_scores: dict[int, float]
    coefficients: dict[tuple[str, str], tuple[float, float]]   # (direction, other target) -> (coef, std)
    prior_precision: float
    noise_variance: float
    feature_means: dict[tuple[str, str], float] = field(default_factory=dict)


def zscore(values: Sequence[float]) -> np.ndarray:
    """Standardize to mean 0, population variance 1."""
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2:
        raise ValueError("need at least two values")
    std = x.std()   # population convention
    if std == 0.0:
        raise ValueError("zero variance input")
    return (x - x.mean()) / std


def js_divergence(p: Sequence[float], q: Sequence[float]) -> float:
    """Jensen-Shannon divergence in bits; symmetric and bounded by [0, 1]."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("distribution support sizes differ")
    for name, d in (("p", p), ("q", q)):
        if (d < 0).any():
            raise ValueError(f"{name} has negative mass")
        if abs(d.sum() - 1.0) > 1e-9:
            raise ValueError(f"{name} sums to {d.sum()}, not 1")
    m = 0.5 * (p + q)

    def kl(a, b):
        mask = a > 0
        return float(np.sum(a[mask] * np.log2(a[mask] / b[mask])))

    return 0.5 * kl(p, m) + 0.5 * kl(q, m)


def simplistic_bias(aggregate: StanceAggregate) -> float:
    """Pro share minus against share, in [-1, 1]."""
    return aggregate.pro_pct - aggregate.against_pct


# ---------------------------------------------------------------------------
# aggregation

def _majority(tally: Counter) -> str:
    top = max(tally.values())
    winners = [s for s, c in tally.items() if c == top]
    return winners[0] if len(winners) == 1 else "Neutral"


def article_target_stances(stance_inputs: Iterable[StanceInput], corpus: Corpus,
                           scope: Mapping[str, set[int]], assignment: np.ndarray
                           ) -> dict[tuple[int, str], str]:
    """Resolve each (article, target) to one stance by majority over in-scope passages.

    A passage is in scope for a target when its cluster is in the target's
    scope set (the clusters listing the target among their top PMI keywords).
    """
    tallies: dict[tuple[int, str], Counter] = defaultdict(Counter)
    for rec in stance_inputs:
        row = corpus.passage_index.get(rec.passage_id)
        if row is None:
            raise ValueError(f"unknown passage_id {rec.passage_id} in stance input")
        clusters = scope.get(rec.target)
        if not clusters or int(assignment[row]) not in clusters:
            continue
        aid = int(corpus.article_id[row])
        tallies[(aid, rec.target)][rec.stance] += 1
    return {key: _majority(tally) for key, tally in tallies.items()}


def aggregate_stances(stance_inputs: Iterable[StanceInput], corpus: Corpus,
                      scope: Mapping[str, set[int]], assignment: np.ndarray
                      ) -> list[StanceAggregate]:
    """Per-(site, target) stance percentages over articles covering the target."""
    article_stance = article_target_stances(stance_inputs, corpus, scope, assignment)
    site_of_article: dict[int, int] = {}
    for i in range(corpus.n_passages):
        site_of_article[int(corpus.article_id[i])] = int(corpus.site_ref[i])
    counts: dict[tuple[int, str], Counter] = defaultdict(Counter)
    for (aid, target), stance in article_stance.items():
        counts[(site_of_article[aid], target)][stance] += 1
    out = []
    for (site_ref, target) in sorted(counts):
        tally = counts[(site_ref, target)]
        n = sum(tally.values())
        out.append(StanceAggregate(
            site_ref=site_ref,
            target=target,
            pro_pct=tally.get("Pro", 0) / n,
            against_pct=tally.get("Against", 0) / n,
            neutral_pct=tally.get("Neutral", 0) / n,
            article_count=n,
        ))
    return out


def cluster_site_stance_tallies(stance_inputs: Iterable[StanceInput], corpus: Corpus,
                                target: str, scope: Mapping[str, set[int]],
                                assignment: np.ndarray) -> dict[tuple[int, int], Counter]:
    """Article stance tallies per (cluster, site) toward one target.

    This is the index the stance cascade filter consumes: the article's
    stance is resolved within each cluster separately.
    """
    per_article: dict[tuple[int, int, int], Counter] = defaultdict(Counter)
    clusters = scope.get(target, set())
    for rec in stance_inputs:
        if rec.target != target:
            continue
        row = corpus.passage_index.get(rec.passage_id)
        if row is None:
            raise ValueError(f"unknown passage_id {rec.passage_id} in stance input")
        cid = int(assignment[row])
        if cid not in clusters:
            continue
        key = (cid, int(corpus.site_ref[row]), int(corpus.article_id[row]))
        per_article[key][rec.stance] += 1
    out: dict[tuple[int, int], Counter] = defaultdict(Counter)
    for (cid, site_ref, _aid), tally in per_article.items():
        out[(cid, site_ref)][_majority(tally)] += 1
    return dict(out)


def stance_tag_article_counts(stance_inputs: Iterable[StanceInput], corpus: Corpus,
                              scope: Mapping[str, set[int]], assignment: np.ndarray
                              ) -> dict[tuple[str, str], dict[str, int]]:
    """Article counts per ((direction, target), ecosystem) for non-neutral tags."""
    article_stance = article_target_stances(stance_inputs, corpus, scope, assignment)
    site_of_article: dict[int, int] = {}
    for i in range(corpus.n_passages):
        site_of_article[int(corpus.article_id[i])] = int(corpus.site_ref[i])
    counts: dict[tuple[str, str], dict[str, int]] = defaultdict(lambda: defaultdict(int))
    for (aid, target), stance in article_stance.items():
        if stance == "Neutral":
            continue
        eco = corpus.ecosystem_of(site_of_article[aid])
        counts[(stance, target)][eco] += 1
    return {tag: dict(per_eco) for tag, per_eco in counts.items()}


# ---------------------------------------------------------------------------
# Bayesian ridge bias latent

def ridge_posterior(X: np.ndarray, y: np.ndarray, lam: float,
                    noise_variance: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Conjugate Gaussian linear model posterior.

    Returns (posterior mean, posterior covariance) where the mean solves
    (X'X + lam I) w = X'y and the covariance is noise_variance * (X'X + lam I)^-1.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    A = X.T @ X + lam * np.eye(X.shape[1])
    w = np.linalg.solve(A, X.T @ y)
    cov = noise_variance * np.linalg.inv(A)
    return w, cov


def fit_bias_latent(target: str, aggregates: Sequence[StanceAggregate],
                    min_articles: int = 250, prior_precision: float = 1.0,
                    min_seeds: int = 10) -> BiasLatent:
    """Fit the bias latent for one target and score every coverable site.

    Seeds are sites with at least ``min_articles`` articles on the target;
    their z-scored simplistic bias is regressed on their pro/against shares
    for every other target (zero-variance columns dropped, features centered
    on seed means, missing coverage imputed to the mean).  Noise variance is
    estimated once from the residuals of an initial unit-noise fit.
    """
    by_site_target: dict[tuple[int, str], StanceAggregate] = {
        (a.site_ref, a.target): a for a in aggregates}
    seeds = sorted(a.site_ref for a in aggregates
                   if a.target == target and a.article_count >= min_articles)
    if len(seeds) < min_seeds:
        raise ValueError(
            f"insufficient seed sites for {target!r}: {len(seeds)} < {min_seeds}")

    other_targets = sorted({a.target for a in aggregates} - {target})
    feature_keys = [(d, t) for t in other_targets for d in ("Pro", "Against")]

    def raw_feature(site: int, key) -> float | None:
        d, t = key
        agg = by_site_target.get((site, t))
        if agg is None:
            return None
        return agg.pro_pct if d == "Pro" else agg.against_pct

    # center on seed means; zero-variance columns carry no signal and are dropped
    means, keep = {}, []
    for key in feature_keys:
        vals = [raw_feature(s, key) for s in seeds]
        observed = [v for v in vals if v is not None]
        mu = float(np.mean(observed)) if observed else 0.0
        means[key] = mu
        centered = [v - mu for v in observed]
        if observed and float(np.var(centered)) > 0.0:
            keep.append(key)
    if not keep:
        raise ValueError(f"no informative features for {target!r}")

    def feature_row(site: int) -> np.ndarray:
        row = np.zeros(len(keep))
        for j, key in enumerate(keep):
            v = raw_feature(site, key)
            row[j] = 0.0 if v is None else v - means[key]
        return row

    X = np.vstack([feature_row(s) for s in seeds])
    y = zscore([simplistic_bias(by_site_target[(s, target)]) for s in seeds])

    w0, _ = ridge_posterior(X, y, prior_precision * 1.0)
    resid = y - X @ w0
    noise_variance = max(float(np.mean(resid ** 2)), NOISE_VARIANCE_FLOOR)
    lam = prior_precision * noise_variance
    w, cov = ridge_posterior(X, y, lam, noise_variance)
    std = np.sqrt(np.diag(cov))

    z_scores = {s: float(v) for s, v in zip(seeds, y)}
    coverable = sorted({a.site_ref for a in aggregates
                        if a.target != target and a.site_ref not in z_scores})
    for site in coverable:
        if any(raw_feature(site, key) is not None for key in keep):
            z_scores[site] = float(feature_row(site) @ w)

    return BiasLatent(
        target=target,
        seed_sites=list(seeds),
        z_scores=z_scores,
        coefficients={key: (float(w[j]), float(std[j])) for j, key in enumerate(keep)},
        prior_precision=prior_precision,
        noise_variance=noise_variance,
        feature_means=means,
    )


def partisanship_correlation(latent: BiasLatent, sites) -> float | None:
    """Spearman rank correlation between latent z-scores and the registry's
    partisanship labels, over sites carrying both.

    Validation aid only; at desk scale the value is not an acceptance target.
    """
    from .analytics import spearman_correlation

    pairs = [(latent.z_scores[i], sites[i].partisanship)
             for i in sorted(latent.z_scores) if sites[i].partisanship is not None]
    if len(pairs) < 2:
        return None
    zs, parts = zip(*pairs)
    return spearman_correlation(zs, parts)
