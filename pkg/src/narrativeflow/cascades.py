"""Per-story time cascades: one (site, first-post-time) event per website.

A cascade is the observation unit for network inference; these helpers build
cascades from story clusters and narrow them by ecosystem predominance or by
stance toward a target.
"""
from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Optional

from .clustering import StoryCluster
from .corpus import Corpus, RELIABILITIES

log = logging.getLogger(__name__)


class Predominance(Enum):
    NONE = "none"
    UNRELIABLE_PLURALITY = "unreliable_plurality"
    UNRELIABLE_AND_MIXED_PLURALITY = "unreliable_and_mixed_plurality"


@dataclass(frozen=True)
class Cascade:
    cluster_id: int
    events: tuple[tuple[int, float], ...]    # (site_ref, day), sorted by (t, site_ref)
    horizon: float

    def __post_init__(self):
        sites = [s for s, _ in self.events]
        if len(sites) != len(set(sites)):
            raise ValueError("at most one event per site")
        if list(self.events) != sorted(self.events, key=lambda e: (e[1], e[0])):
            raise ValueError("events must be sorted by (t, site)")

    @property
    def n_sites(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class CascadeFilter:
    predominance: Predominance = Predominance.NONE
    stance: Optional[tuple[str, str]] = None    # (direction, target)
    min_sites: int = 2

    def __post_init__(self):
        if self.min_sites < 2:
            raise ValueError("min_sites must be >= 2")


@dataclass(frozen=True)
class EcosystemRatio:
    unreliable_articles: int
    reliable_articles: int

    @property
    def smoothed(self) -> float:
        # Laplace-smoothed so zero reliable coverage stays finite
        return (self.unreliable_articles + 1) / (self.reliable_articles + 1)

    @property
    def raw(self) -> float:
        if self.reliable_articles == 0:
            return float("inf")
        return self.unreliable_articles / self.reliable_articles


def build_cascades(clusters: Iterable[StoryCluster], corpus: Corpus,
                   min_sites: int = 2) -> list[Cascade]:
    """Earliest post per site per non-pruned cluster; tiny cascades dropped."""
    out: list[Cascade] = []
    for cluster in clusters:
        if cluster.pruned:
            continue
        first: dict[int, float] = {}
        for pid in cluster.member_passages:
            i = corpus.passage_index[pid]
            sref = int(corpus.site_ref[i])
            day = float(corpus.published_day[i])
            if sref not in first or day < first[sref]:
                first[sref] = day
        if len(first) < min_sites:
            continue
        events = tuple(sorted(((s, t) for s, t in first.items()), key=lambda e: (e[1], e[0])))
        out.append(Cascade(cluster.cluster_id, events, horizon=events[-1][1] + 1.0))
    return out


def cluster_article_ecosystems(cluster: StoryCluster, corpus: Corpus) -> Counter:
    """Distinct-article counts per ecosystem within one cluster."""
    seen: set[int] = set()
    counts: Counter = Counter()
    for pid in cluster.member_passages:
        i = corpus.passage_index[pid]
        aid = int(corpus.article_id[i])
        if aid in seen:
            continue
        seen.add(aid)
        counts[corpus.ecosystem_of(int(corpus.site_ref[i]))] += 1
    return counts


def _holds_plurality(counts: Counter, group: tuple[str, ...]) -> bool:
    inside = sum(counts.get(e, 0) for e in group)
    rest = [counts.get(e, 0) for e in RELIABILITIES if e not in group]
    return all(inside > r for r in rest)   # strict plurality; ties excluded


def filter_cascades(cascades: Iterable[Cascade], flt: CascadeFilter,
                    clusters_by_id: Mapping[int, StoryCluster], corpus: Corpus,
                    stance_index: Optional[Mapping[tuple[int, int], Counter]] = None
                    ) -> list[Cascade]:
    """Apply predominance and stance restrictions, re-checking min_sites.

    ``stance_index`` maps (cluster_id, site_ref) -> article stance tallies
    toward the filter's target; required when a stance filter is set.
    """
    if flt.stance is not None and stance_index is None:
        raise ValueError("stance filter requires a stance_index")
    out: list[Cascade] = []
    for cascade in cascades:
        cluster = clusters_by_id[cascade.cluster_id]
        if flt.predominance is Predominance.UNRELIABLE_PLURALITY:
            if not _holds_plurality(cluster_article_ecosystems(cluster, corpus), ("unreliable",)):
                continue
        elif flt.predominance is Predominance.UNRELIABLE_AND_MIXED_PLURALITY:
            if not _holds_plurality(cluster_article_ecosystems(cluster, corpus),
                                    ("unreliable", "mixed")):
                continue
        events = cascade.events
        if flt.stance is not None:
            direction, _target = flt.stance
            kept = []
            for site_ref, t in events:
                tally = stance_index.get((cascade.cluster_id, site_ref))
                if tally is None:
                    continue
                total = sum(tally.values())
                # strict majority of the site's articles carry the stance
                if total and 2 * tally.get(direction, 0) > total:
                    kept.append((site_ref, t))
            events = tuple(kept)
        if len(events) < flt.min_sites:
            continue
        out.append(Cascade(cascade.cluster_id, events, cascade.horizon))
    return out


def ecosystem_ratio(cluster: StoryCluster, corpus: Corpus,
                    window: tuple[float, float]) -> EcosystemRatio:
    """Unreliable-vs-reliable distinct-article counts inside [t0, t1)."""
    t0, t1 = window
    if not t0 < t1:
        raise ValueError("window must satisfy t0 < t1")
    articles: dict[str, set[int]] = {"unreliable": set(), "reliable": set()}
    for pid in cluster.member_passages:
        i = corpus.passage_index[pid]
        day = float(corpus.published_day[i])
        if not t0 <= day < t1:
            continue
        eco = corpus.ecosystem_of(int(corpus.site_ref[i]))
        if eco in articles:
            articles[eco].add(int(corpus.article_id[i]))
    return EcosystemRatio(len(articles["unreliable"]), len(articles["reliable"]))


def write_cascades(path, cascades: Iterable[Cascade], corpus: Corpus):
    with open(path, "w", encoding="utf-8") as fh:
        for c in cascades:
            obj = {
                "cluster_id": c.cluster_id,
                "events": [[corpus.sites[s].domain, t] for s, t in c.events],
            }
            fh.write(json.dumps(obj) + "\n")


def load_cascades(path, site_index: Mapping[str, int]) -> list[Cascade]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            events = tuple(sorted(((site_index[d], float(t)) for d, t in obj["events"]),
                                  key=lambda e: (e[1], e[0])))
            out.append(Cascade(int(obj["cluster_id"]), events, events[-1][1] + 1.0))
    return out
