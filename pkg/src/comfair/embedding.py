"""Structural node embeddings: second-order biased random walks plus
skip-gram training with negative sampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EmptyCorpus, NoNeighbors
from .graph import Graph


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 10
    walk_length: int = 40
    p: float = 1.0
    q: float = 1.0


@dataclass(frozen=True)
class SkipgramConfig:
    dim: int = 64
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    batch_size: int = 512


@dataclass
class WalkCorpus:
    walks: list
    walks_per_node: int
    walk_length: int


def walk_step(graph: Graph, prev: Optional[int], cur: int, p: float, q: float,
              rng: np.random.Generator) -> int:
    """Sample the next node of a second-order walk.

    Unnormalized weights: 1/p to return to prev, 1 for common neighbors of
    prev and cur, 1/q otherwise. With prev None the choice is uniform.
    """
    nbrs = graph.neighbors(cur)
    if len(nbrs) == 0:
        raise NoNeighbors(f"node {cur} has no neighbors")
    if prev is None:
        return int(nbrs[rng.integers(len(nbrs))])
    prev_nbrs = graph.neighbors(prev)
    weights = np.full(len(nbrs), 1.0 / q)
    weights[np.isin(nbrs, prev_nbrs)] = 1.0
    weights[nbrs == prev] = 1.0 / p
    cum = np.cumsum(weights)
    idx = np.searchsorted(cum, rng.random() * cum[-1], side="right")
    return int(nbrs[min(idx, len(nbrs) - 1)])


def generate_walks(graph: Graph, r: int, l: int, p: float, q: float, seed: int) -> WalkCorpus:
    """r walks of length up to l from every node; walks truncate at dead ends."""
    rng = np.random.default_rng(seed)
    walks = []
    for _ in range(r):
        for start in range(graph.num_nodes):
            walk = [start]
            while len(walk) < l:
                prev = walk[-2] if len(walk) >= 2 else None
                try:
                    walk.append(walk_step(graph, prev, walk[-1], p, q, rng))
                except NoNeighbors:
                    break
            walks.append(walk)
    return WalkCorpus(walks, r, l)


def unigram_noise(corpus: WalkCorpus, num_nodes: int, power: float = 0.75) -> np.ndarray:
    """Noise distribution proportional to corpus frequency ** power."""
    counts = np.zeros(num_nodes)
    for walk in corpus.walks:
        np.add.at(counts, walk, 1.0)
    weights = counts ** power
    total = weights.sum()
    if total == 0:
        raise EmptyCorpus("corpus contains no nodes")
    return weights / total


def _skipgram_pairs(corpus: WalkCorpus, window: int) -> np.ndarray:
    pairs = []
    for walk in corpus.walks:
        length = len(walk)
        for i, center in enumerate(walk):
            lo, hi = max(0, i - window), min(length, i + window + 1)
            for j in range(lo, hi):
                if j != i:
                    pairs.append((center, walk[j]))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def train_skipgram(corpus: WalkCorpus, num_nodes: int, d: int, window: int,
                   negatives: int, epochs: int, lr: float, seed: int,
                   batch_size: int = 512):
    """Skip-gram with negative sampling over (center, context) pairs.

    Mini-batched SGD with a linearly decaying learning rate; single-threaded
    and deterministic for a fixed seed. Returns (embeddings, per-epoch loss).
    """
    if not corpus.walks:
        raise EmptyCorpus("empty walk corpus")
    rng = np.random.default_rng(seed)
    pairs = _skipgram_pairs(corpus, window)
    if len(pairs) == 0:
        raise EmptyCorpus("corpus has no context pairs (all walks length 1)")
    noise = unigram_noise(corpus, num_nodes)

    w_in = (rng.random((num_nodes, d)) - 0.5) / d
    w_out = np.zeros((num_nodes, d))

    total_steps = epochs * len(pairs)
    step = 0
    epoch_losses = []
    for _ in range(epochs):
        order = rng.permutation(len(pairs))
        loss_sum = 0.0
        for start in range(0, len(order), batch_size):
            batch = pairs[order[start:start + batch_size]]
            centers, contexts = batch[:, 0], batch[:, 1]
            b = len(batch)
            neg = rng.choice(num_nodes, size=(b, negatives), p=noise)
            # never use the positive context as its own negative
            clash = neg == contexts[:, None]
            while clash.any():
                neg[clash] = rng.choice(num_nodes, size=int(clash.sum()), p=noise)
                clash = neg == contexts[:, None]

            cur_lr = lr * max(1e-4, 1.0 - step / total_steps)
            step += b

            vc = w_in[centers]                      # (b, d)
            uo = w_out[contexts]                    # (b, d)
            un = w_out[neg]                         # (b, neg, d)

            pos_score = 1.0 / (1.0 + np.exp(-np.einsum("bd,bd->b", vc, uo)))
            neg_score = 1.0 / (1.0 + np.exp(-np.einsum("bd,bnd->bn", vc, un)))
            loss_sum += float(
                -np.log(np.clip(pos_score, 1e-12, None)).sum()
                - np.log(np.clip(1.0 - neg_score, 1e-12, None)).sum()
            )

            g_pos = pos_score - 1.0                 # (b,)
            g_neg = neg_score                       # (b, neg)
            grad_vc = g_pos[:, None] * uo + np.einsum("bn,bnd->bd", g_neg, un)
            np.add.at(w_in, centers, -cur_lr * grad_vc)
            np.add.at(w_out, contexts, -cur_lr * g_pos[:, None] * vc)
            np.add.at(w_out, neg.ravel(),
                      (-cur_lr * g_neg[:, :, None] * vc[:, None, :]).reshape(-1, d))
        epoch_losses.append(loss_sum / len(pairs))
    return w_in, epoch_losses
