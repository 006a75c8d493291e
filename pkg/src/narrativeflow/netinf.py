"""Greedy inference of the latent site-to-site influence network from cascades.

Each cascade is explained by its most likely propagation tree: every infected
node picks the single earlier node maximizing the transmission weight

    w(i, j) = beta    * alpha_t * exp(-alpha_t * (t_j - t_i))   if (i,j) in G
            = epsilon * alpha_t * exp(-alpha_t * (t_j - t_i))   otherwise.

The improvement an edge brings to the summed best-tree log-likelihood over
the empty graph is its value; edges are added greedily by marginal gain.
Because weights only improve as edges accumulate, gains are non-increasing
(submodular), which makes lazy priority-queue re-evaluation exact.
"""
from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .cascades import Cascade
from .corpus import RELIABILITIES, Site

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransmissionModel:
    alpha_t: float = 1.0     # exponential rate, per day
    beta: float = 0.5        # transmission probability along a graph edge
    epsilon: float = 1e-9    # external-infection floor

    def __post_init__(self):
        if self.alpha_t <= 0:
            raise ValueError("alpha_t must be positive")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must be in (0, 1)")
        if not 0.0 < self.epsilon < self.beta:
            raise ValueError("epsilon must be in (0, beta)")

    def log_edge_weight(self, dt: float) -> float:
        return math.log(self.beta * self.alpha_t) - self.alpha_t * dt

    def log_background_weight(self, dt: float) -> float:
        return math.log(self.epsilon * self.alpha_t) - self.alpha_t * dt


@dataclass
class InfluenceEdge:
    src: int
    dst: int
    marginal_gain: float
    copies: int = 0
    mean_delay_days: float = 0.0
    cum_gain_frac: float = 0.0


@dataclass
class InfluenceGraph:
    nodes: list[str]                      # site domains, index = node id
    edges: list[InfluenceEdge] = field(default_factory=list)
    total_gain: float = 0.0               # over the full greedy run, pre-cut

    def edge_set(self) -> set[tuple[int, int]]:
        return {(e.src, e.dst) for e in self.edges}

    def weighted_adjacency(self, weight: str = "copies") -> np.ndarray:
        """Adjacency with ``weight`` per edge: "copies", "marginal_gain", or
        "unweighted" (1.0 per edge)."""
        n = len(self.nodes)
        A = np.zeros((n, n), dtype=np.float64)
        for e in self.edges:
            A[e.src, e.dst] += 1.0 if weight == "unweighted" else getattr(e, weight)
        return A


def cascade_log_likelihood(cascade: Cascade, edges: set[tuple[int, int]],
                           model: TransmissionModel) -> float:
    """Best-propagation-tree log-likelihood of one cascade under a graph.

    Every node with at least one strictly earlier event takes its maximum-
    weight parent; nodes without one are roots and contribute nothing.
    """
    total = 0.0
    for j, (node_j, t_j) in enumerate(cascade.events):
        best = None
        for node_i, t_i in cascade.events[:j]:
            if t_i >= t_j:
                continue
            dt = t_j - t_i
            if (node_i, node_j) in edges:
                w = model.log_edge_weight(dt)
            else:
                w = model.log_background_weight(dt)
            if best is None or w > best:
                best = w
        if best is not None:
            total += best
    return total


class _CascadeIndex:
    """Flat arrays over (cascade, non-root event) slots plus per-edge views."""

    def __init__(self, cascades: Sequence[Cascade], model: TransmissionModel):
        self.model = model
        log_eps = math.log(model.epsilon * model.alpha_t)
        best: list[float] = []                   # current best log-weight per slot
        slot_of: dict[tuple[int, int], int] = {}  # (cascade idx, event idx) -> slot
        # per candidate edge: slots it can explain and the candidate weights
        edge_slots: dict[tuple[int, int], list[int]] = {}
        edge_logw: dict[tuple[int, int], list[float]] = {}
        edge_dt: dict[tuple[int, int], list[float]] = {}
        log_beta = math.log(model.beta * model.alpha_t)
        for ci, cascade in enumerate(cascades):
            for j, (node_j, t_j) in enumerate(cascade.events):
                parents = [(node_i, t_j - t_i) for node_i, t_i in cascade.events[:j] if t_i < t_j]
                if not parents:
                    continue
                slot = len(best)
                slot_of[(ci, j)] = slot
                best.append(max(log_eps - model.alpha_t * dt for _, dt in parents))
                for node_i, dt in parents:
                    key = (node_i, node_j)
                    edge_slots.setdefault(key, []).append(slot)
                    edge_logw.setdefault(key, []).append(log_beta - model.alpha_t * dt)
                    edge_dt.setdefault(key, []).append(dt)
        self.best = np.array(best, dtype=np.float64)
        self.slot_of = slot_of
        self.edges = {
            key: (np.array(edge_slots[key], dtype=np.int64),
                  np.array(edge_logw[key], dtype=np.float64),
                  np.array(edge_dt[key], dtype=np.float64))
            for key in edge_slots
        }

    def gain(self, key: tuple[int, int]) -> float:
        slots, logw, _dt = self.edges[key]
        return float(np.sum(np.maximum(0.0, logw - self.best[slots])))

    def accept(self, key: tuple[int, int]):
        slots, logw, _dt = self.edges[key]
        np.maximum.at(self.best, slots, logw)


def netinf_greedy(cascades: Sequence[Cascade], model: TransmissionModel,
                  k_max: int, cut_fraction: float = 0.9, *,
                  node_names: Optional[Sequence[str]] = None,
                  lazy: bool = True) -> InfluenceGraph:
    """Greedy edge selection; returns the prefix reaching ``cut_fraction`` of gain.

    Candidate edges are the (i, j) pairs observed with t_i < t_j in at least
    one cascade; all others have zero gain.  Ties on marginal gain break
    lexicographically by (src, dst).  With ``lazy=False`` every remaining
    candidate is re-scored each round (slower, same output).
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if not 0.0 < cut_fraction <= 1.0:
        raise ValueError("cut_fraction must be in (0, 1]")
    cascades = list(cascades)
    if not cascades:
        raise ValueError("need at least one cascade")
    if node_names is None:
        n_nodes = 1 + max((s for c in cascades for s, _ in c.events), default=-1)
        node_names = [f"node{idx}" for idx in range(n_nodes)]
    index = _CascadeIndex(cascades, model)
    if not index.edges:
        log.warning("all cascades are singletons; influence graph is empty")
        return InfluenceGraph(nodes=list(node_names))

    accepted: list[InfluenceEdge] = []
    if lazy:
        heap = [(-index.gain(key), key[0], key[1]) for key in index.edges]
        heapq.heapify(heap)
        fresh: dict[tuple[int, int], float] = {}   # gains valid for current graph
        while heap and len(accepted) < k_max:
            neg_gain, src, dst = heapq.heappop(heap)
            key = (src, dst)
            if key not in index.edges:     # stale entry for an accepted edge
                continue
            if key in fresh and fresh[key] == -neg_gain:
                if -neg_gain <= 0.0:
                    break
                accepted.append(InfluenceEdge(src, dst, -neg_gain))
                index.accept(key)
                del index.edges[key]
                fresh = {}
            else:
                g = index.gain(key)
                fresh[key] = g
                heapq.heappush(heap, (-g, src, dst))
    else:
        while len(accepted) < k_max and index.edges:
            scored = sorted(((-index.gain(key), key[0], key[1]) for key in index.edges))
            neg_gain, src, dst = scored[0]
            if -neg_gain <= 0.0:
                break
            accepted.append(InfluenceEdge(src, dst, -neg_gain))
            index.accept((src, dst))
            del index.edges[(src, dst)]

    if not accepted:
        log.warning("no positive-gain edge; influence graph is empty")
        return InfluenceGraph(nodes=list(node_names))

    total = sum(e.marginal_gain for e in accepted)
    cum = 0.0
    cut_at = len(accepted)
    for i, e in enumerate(accepted):
        cum += e.marginal_gain
        e.cum_gain_frac = cum / total
        if cum >= cut_fraction * total:
            cut_at = i + 1
            break
    kept = accepted[:cut_at]
    graph = InfluenceGraph(nodes=list(node_names), edges=kept, total_gain=total)
    _attribute_copies(graph, cascades, model)
    return graph


def _attribute_copies(graph: InfluenceGraph, cascades: Sequence[Cascade],
                      model: TransmissionModel):
    """Count, per kept edge, the cascades where it is the argmax parent link."""
    edge_set = graph.edge_set()
    copies: dict[tuple[int, int], int] = {}
    delays: dict[tuple[int, int], float] = {}
    for cascade in cascades:
        time_of = dict(cascade.events)
        for j, (node_j, t_j) in enumerate(cascade.events):
            best_w, best_parent = None, None
            for node_i, t_i in cascade.events[:j]:
                if t_i >= t_j:
                    continue
                dt = t_j - t_i
                if (node_i, node_j) in edge_set:
                    w = model.log_edge_weight(dt)
                else:
                    w = model.log_background_weight(dt)
                if best_w is None or w > best_w:   # ties keep the lowest site index
                    best_w, best_parent = w, node_i
            if best_parent is not None and (best_parent, node_j) in edge_set:
                key = (best_parent, node_j)
                copies[key] = copies.get(key, 0) + 1
                delays[key] = delays.get(key, 0.0) + (t_j - time_of[best_parent])
    for e in graph.edges:
        key = (e.src, e.dst)
        e.copies = copies.get(key, 0)
        e.mean_delay_days = delays[key] / e.copies if e.copies else 0.0


def ecosystem_copy_matrix(graph: InfluenceGraph, sites: Sequence[Site]):
    """3x3 ecosystem copy shares and copy-weighted delay matrices.

    Rows are destination ecosystems in (reliable, mixed, unreliable) order and
    sum to 1 where the destination received any copies; the delta matrix is
    each cell's mean delay minus the global copy-weighted mean.
    """
    eco_of = {i: s.reliability for i, s in enumerate(sites)}
    idx = {eco: k for k, eco in enumerate(RELIABILITIES)}
    copies = np.zeros((3, 3), dtype=np.float64)
    delay_sum = np.zeros((3, 3), dtype=np.float64)
    for e in graph.edges:
        if e.copies == 0:
            continue
        r, c = idx[eco_of[e.dst]], idx[eco_of[e.src]]
        copies[r, c] += e.copies
        delay_sum[r, c] += e.copies * e.mean_delay_days
    row_totals = copies.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        share = np.where(row_totals > 0, copies / row_totals, 0.0)
        delay = np.where(copies > 0, delay_sum / np.where(copies > 0, copies, 1.0), np.nan)
    zero_rows = [RELIABILITIES[r] for r in range(3) if row_totals[r, 0] == 0]
    for eco in zero_rows:
        log.warning("ecosystem %s received no copies; share row is zero", eco)
    total_copies = copies.sum()
    global_mean = delay_sum.sum() / total_copies if total_copies else float("nan")
    delta = delay - global_mean
    return share, delay, delta, zero_rows


def write_influence_graph(path, graph: InfluenceGraph):
    """TSV: src, dst, marginal_gain, copies, mean_delay_days, cum_gain_frac."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("src\tdst\tmarginal_gain\tcopies\tmean_delay_days\tcum_gain_frac\n")
        for e in graph.edges:
            fh.write("\t".join([
                graph.nodes[e.src],
                graph.nodes[e.dst],
                format(e.marginal_gain, ".12g"),
                str(e.copies),
                format(e.mean_delay_days, ".12g"),
                format(e.cum_gain_frac, ".12g"),
            ]) + "\n")


def load_influence_graph(path, node_names: Optional[Iterable[str]] = None) -> InfluenceGraph:
    names = list(node_names) if node_names is not None else []
    index = {d: i for i, d in enumerate(names)}
    edges = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("src\tdst"):
            raise ValueError(f"{path}: not an influence graph TSV")
        for line in fh:
            src, dst, gain, copies, delay, cum = line.rstrip("\n").split("\t")
            for d in (src, dst):
                if d not in index:
                    index[d] = len(names)
                    names.append(d)
            edges.append(InfluenceEdge(index[src], index[dst], float(gain),
                                       int(copies), float(delay), float(cum)))
    return InfluenceGraph(nodes=names, edges=edges,
                          total_gain=sum(e.marginal_gain for e in edges))
