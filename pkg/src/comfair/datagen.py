"""Synthetic polarized graphs: stochastic block model with controllable
sensitive-attribute alignment and per-block label homophily."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .graph import Graph


@dataclass(frozen=True)
class SbmConfig:
    block_sizes: Sequence[int]
    p_in: float
    p_out: float
    sens_alignment: float = 1.0
    label_homophily: Sequence[float] | float = 0.5
    feature_dim: int = 8
    feature_signal: float = 1.0
    label_balance: float = 0.5

    def __post_init__(self):
        if not self.block_sizes or any(b < 2 for b in self.block_sizes):
            raise ConfigError("block_sizes must all be >= 2")
        if not (0.0 <= self.p_in <= 1.0 and 0.0 <= self.p_out <= 1.0):
            raise ConfigError("p_in/p_out must lie in [0,1]")
        if not 0.5 <= self.sens_alignment <= 1.0:
            raise ConfigError("sens_alignment must lie in [0.5,1]")
        th = self.homophily_targets
        if len(th) != len(self.block_sizes):
            raise ConfigError("label_homophily must be scalar or one value per block")
        if any(not 0.0 <= t <= 1.0 for t in th):
            raise ConfigError("label_homophily values must lie in [0,1]")
        if self.feature_dim < 1 or self.feature_signal < 0:
            raise ConfigError("feature_dim >= 1 and feature_signal >= 0 required")

    @property
    def homophily_targets(self) -> list:
        if isinstance(self.label_homophily, (int, float)):
            return [float(self.label_homophily)] * len(self.block_sizes)
        return [float(t) for t in self.label_homophily]

    @property
    def num_nodes(self) -> int:
        return int(sum(self.block_sizes))

    @staticmethod
    def from_dict(d: dict) -> "SbmConfig":
        try:
            return SbmConfig(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def _pair_probabilities(target: float, p_in: float, balance: float) -> tuple:
    """Within-block edge probabilities for (same-label, cross-label) pairs.

    With Bernoulli(balance) labels, same-label pairs have nominal mass
    q = balance^2 + (1-balance)^2. Splitting p_in as (t*p/q, (1-t)*p/(1-q))
    keeps the expected edge count at p_in per pair while driving the
    same-label edge fraction toward the target.
    """
    q = balance ** 2 + (1.0 - balance) ** 2
    return min(1.0, target * p_in / q), min(1.0, (1.0 - target) * p_in / (1.0 - q))


def generate_sbm(config: SbmConfig, seed: int) -> Graph:
    """Generate a polarized SBM graph, deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    n = config.num_nodes
    sizes = list(config.block_sizes)
    block = np.repeat(np.arange(len(sizes)), sizes)

    labels = (rng.random(n) < config.label_balance).astype(np.int64)

    # sensitive bit: block majority (blocks alternate 0/1), flipped with
    # probability 1 - sens_alignment
    majority = block % 2
    keep = rng.random(n) < config.sens_alignment
    sensitive = np.where(keep, majority, 1 - majority).astype(np.int64)

    targets = config.homophily_targets
    rows, cols = np.triu_indices(n, k=1)
    same_block = block[rows] == block[cols]
    same_label = labels[rows] == labels[cols]
    prob = np.full(len(rows), config.p_out)
    for b, t in enumerate(targets):
        p_same, p_cross = _pair_probabilities(t, config.p_in, config.label_balance)
        in_b = (block[rows] == b) & same_block
        prob[in_b & same_label] = p_same
        prob[in_b & ~same_label] = p_cross
    keep_edge = rng.random(len(rows)) < prob
    edges = list(zip(rows[keep_edge].tolist(), cols[keep_edge].tolist()))

    means = np.zeros((2, config.feature_dim))
    means[0, 0] = -config.feature_signal / 2.0
    means[1, 0] = config.feature_signal / 2.0
    features = means[labels] + rng.standard_normal((n, config.feature_dim))

    return Graph.from_edges(n, edges, features, labels, sensitive)
