"""Per-node edge-homophily ratios: the fraction of a node's incident edges
joining neighbors with the same label. Isolated nodes have no ratio."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graph import Graph


@dataclass(frozen=True)
class HomophilyProfile:
    ratio: np.ndarray    # NaN marks isolated nodes
    degree: np.ndarray

    def defined(self) -> np.ndarray:
        """Boolean mask of nodes with a defined ratio."""
        return ~np.isnan(self.ratio)


def node_homophily(graph: Graph, node: int) -> Optional[float]:
    """Fraction of `node`'s neighbors sharing its label; None if isolated."""
    nbrs = graph.neighbors(node)
    if len(nbrs) == 0:
        return None
    same = int((graph.labels[nbrs] == graph.labels[node]).sum())
    return same / len(nbrs)


def homophily_profile(graph: Graph) -> HomophilyProfile:
    """Vectorized homophily ratio for every node in one pass over the CSR."""
    deg = graph.degrees
    src = np.repeat(np.arange(graph.num_nodes), deg)
    same_label = graph.labels[graph.indices] == graph.labels[src]
    same_counts = np.bincount(src, weights=same_label, minlength=graph.num_nodes)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = same_counts / deg
    ratio[deg == 0] = np.nan
    return HomophilyProfile(ratio, deg.astype(np.int64))
