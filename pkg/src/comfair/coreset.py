"""Fairness-aware coreset selection: a community- and subgroup-stratified
subset of training nodes ranked by homophily extremes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .clustering import CommunityAssignment
from .errors import ConfigError, EmptyTrainingSplit
from .graph import Graph, NodeSplit
from .homophily import HomophilyProfile

STRATEGIES = ("extremal", "random")


@dataclass(frozen=True)
class CoresetEntry:
    node_id: int
    community_id: int
    sensitive_bit: int
    homophily_ratio: float
    weight: float = 1.0


@dataclass
class Coreset:
    entries: list
    total_budget: int
    strategy: str
    shortfalls: dict = field(default_factory=dict)   # (community, group) -> missing count
    warnings: list = field(default_factory=list)

    @property
    def node_ids(self) -> np.ndarray:
        return np.array([e.node_id for e in self.entries], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.entries)


def community_budget(community_size: int, total_nodes: int, k_total: int) -> int:
    """Proportional budget floor(k_total * community_size / total_nodes)."""
    return (k_total * community_size) // total_nodes


def _pick_extremal(pool: list, b: int) -> list:
    """Take the ceil(b/2) highest and floor(b/2) lowest ratios from the pool.

    pool items are (ratio, node_id); ties break toward the smaller node id.
    """
    ordered = sorted(pool)
    if len(ordered) <= b:
        return ordered
    n_low = b // 2
    n_high = b - n_low
    return ordered[:n_low] + ordered[len(ordered) - n_high:]


def select_coreset(graph: Graph, communities: CommunityAssignment,
                   profile: HomophilyProfile, split: NodeSplit, k_total: int,
                   strategy: str = "extremal", seed: int = 0,
                   per_community: int | None = None) -> Coreset:
    """Select coreset nodes per community and sensitive subgroup.

    Per community the budget is proportional (or `per_community` when given);
    floor(budget/2) nodes come from each sensitive group, chosen by homophily
    extremes ("extremal") or uniformly ("random"). Pools smaller than their
    quota are recorded as shortfalls, never fatal. Initial weights are 1.
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown coreset strategy {strategy!r}")
    if len(split.train) == 0:
        raise EmptyTrainingSplit("no training nodes")
    rng = np.random.default_rng(seed)
    train_mask = np.zeros(graph.num_nodes, dtype=bool)
    train_mask[split.train] = True

    entries = []
    shortfalls = {}
    warnings = []
    for k in range(communities.num_communities):
        members = communities.members(k)
        n_k = per_community if per_community is not None else community_budget(
            len(members), graph.num_nodes, k_total)
        b = n_k // 2
        present = set()
        for g in (0, 1):
            pool = [
                (float(profile.ratio[v]), int(v))
                for v in members
                if train_mask[v] and graph.sensitive[v] == g and not math.isnan(profile.ratio[v])
            ]
            if pool:
                present.add(g)
            if b == 0:
                continue
            if strategy == "extremal":
                chosen = _pick_extremal(pool, b)
            else:
                idx = rng.permutation(len(pool))[:b]
                chosen = [pool[i] for i in sorted(idx)]
            if len(chosen) < b:
                shortfalls[(k, g)] = b - len(chosen)
            entries.extend(
                CoresetEntry(node, k, g, ratio) for ratio, node in chosen
            )
        if len(present) < 2:
            warnings.append(f"community {k} lacks both sensitive groups in its pool")
    return Coreset(entries, k_total, strategy, shortfalls, warnings)
