"""Utility and fairness metrics at graph and community scope, plus the
community-level paradox detector."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyScope, MissingGroup, MissingPositives, SingleClassScope

ABS_METRICS = ("sp_abs", "eo_abs")


@dataclass
class ScopeRecord:
    scope: str                       # "graph" or "community:<id>"
    size: int
    group_counts: dict               # sensitive bit -> count
    acc: Optional[float] = None
    auc: Optional[float] = None
    sp_signed: Optional[float] = None
    sp_abs: Optional[float] = None
    eo_signed: Optional[float] = None
    eo_abs: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "scope": self.scope,
            "size": self.size,
            "group_counts": {str(k): v for k, v in self.group_counts.items()},
            "acc": self.acc,
            "auc": self.auc,
            "sp_signed": self.sp_signed,
            "sp_abs": self.sp_abs,
            "eo_signed": self.eo_signed,
            "eo_abs": self.eo_abs,
        }


@dataclass
class FairnessReport:
    records: list                    # ScopeRecord, graph scope first
    metadata: dict = field(default_factory=dict)

    def scope(self, name: str) -> ScopeRecord:
        for rec in self.records:
            if rec.scope == name:
                return rec
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {
            "schema_version": 1,
            "metadata": self.metadata,
            "records": [r.as_dict() for r in self.records],
        }


def accuracy(pred_labels: np.ndarray, labels: np.ndarray, node_set: np.ndarray) -> float:
    if len(node_set) == 0:
        raise EmptyScope("accuracy over an empty node set")
    return float((pred_labels[node_set] == labels[node_set]).mean())


def auc(scores: np.ndarray, labels: np.ndarray, node_set: np.ndarray) -> float:
    """Probability a random positive outscores a random negative; ties 1/2.

    Rank-based (Mann-Whitney) computation.
    """
    s = np.asarray(scores)[node_set]
    y = np.asarray(labels)[node_set]
    pos = y == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassScope("AUC needs at least one positive and one negative")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s))
    sorted_s = s[order]
    # average ranks for ties
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum = ranks[pos].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def statistical_parity(pred_labels: np.ndarray, sensitive: np.ndarray,
                       node_set: np.ndarray):
    """Signed and absolute positive-rate gap P(y^=1|s=0) - P(y^=1|s=1)."""
    p = np.asarray(pred_labels)[node_set]
    s = np.asarray(sensitive)[node_set]
    g0, g1 = s == 0, s == 1
    if not g0.any() or not g1.any():
        raise MissingGroup("both sensitive groups required for statistical parity")
    signed = float((p[g0] == 1).mean() - (p[g1] == 1).mean())
    return signed, abs(signed)


def equal_opportunity(pred_labels: np.ndarray, labels: np.ndarray,
                      sensitive: np.ndarray, node_set: np.ndarray):
    """Signed and absolute true-positive-rate gap between sensitive groups."""
    p = np.asarray(pred_labels)[node_set]
    y = np.asarray(labels)[node_set]
    s = np.asarray(sensitive)[node_set]
    tprs = []
    for g in (0, 1):
        pos = (s == g) & (y == 1)
        if not pos.any():
            raise MissingPositives(g)
        tprs.append(float((p[pos] == 1).mean()))
    signed = tprs[0] - tprs[1]
    return signed, abs(signed)


def _scope_record(name, pred_labels, scores, labels, sensitive, node_set) -> ScopeRecord:
    s = np.asarray(sensitive)[node_set]
    rec = ScopeRecord(
        scope=name,
        size=len(node_set),
        group_counts={0: int((s == 0).sum()), 1: int((s == 1).sum())},
    )
    rec.acc = accuracy(pred_labels, labels, node_set)
    try:
        rec.auc = auc(scores, labels, node_set)
    except SingleClassScope:
        pass
    try:
        rec.sp_signed, rec.sp_abs = statistical_parity(pred_labels, sensitive, node_set)
    except MissingGroup:
        pass
    try:
        rec.eo_signed, rec.eo_abs = equal_opportunity(pred_labels, labels, sensitive, node_set)
    except (MissingGroup, MissingPositives):
        pass
    return rec


def community_report(pred_labels, scores, labels, sensitive, communities,
                     node_set=None, metadata=None) -> FairnessReport:
    """One record for the pooled graph scope plus one per community.

    `communities` is a per-node community id array; `node_set` restricts the
    evaluation (e.g. to the test split). Metrics whose preconditions fail in
    a scope are left as explicit None markers, never silent zeros.
    """
    communities = np.asarray(communities)
    if node_set is None:
        node_set = np.arange(len(communities))
    node_set = np.asarray(node_set)
    if len(node_set) == 0:
        raise EmptyScope("community report needs a non-empty node set")
    records = [_scope_record("graph", pred_labels, scores, labels, sensitive, node_set)]
    for k in np.unique(communities[node_set]):
        members = node_set[communities[node_set] == k]
        records.append(
            _scope_record(f"community:{k}", pred_labels, scores, labels, sensitive, members)
        )
    return FairnessReport(records, metadata or {})


def detect_paradox(report: FairnessReport, margin: float = 0.0) -> list:
    """Communities whose absolute bias exceeds the graph-level value + margin.

    Returns (community scope, metric, community_abs, graph_abs) tuples.
    """
    graph_rec = report.scope("graph")
    flags = []
    for rec in report.records:
        if rec.scope == "graph":
            continue
        for metric in ABS_METRICS:
            comm_val = getattr(rec, metric)
            graph_val = getattr(graph_rec, metric)
            if comm_val is None or graph_val is None:
                continue
            if comm_val > graph_val + margin:
                flags.append((rec.scope, metric, comm_val, graph_val))
    return flags
