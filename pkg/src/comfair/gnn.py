"""Two-layer graph convolutional encoder + linear predictor, trained by
full-batch gradient descent on cross-entropy plus a similarity-parity
fairness loss over coreset embeddings. Gradients are hand-derived."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .coreset import Coreset
from .errors import DimensionMismatch, EmptyMask
from .graph import Graph, NodeSplit, SparseOperator, normalized_adjacency

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


@dataclass
class ModelParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    Wp: np.ndarray
    bp: np.ndarray

    FIELDS = ("W1", "b1", "W2", "b2", "Wp", "bp")

    def copy(self) -> "ModelParams":
        return ModelParams(*(getattr(self, f).copy() for f in self.FIELDS))

    @staticmethod
    def init(num_features: int, d1: int, d2: int, num_classes: int, seed: int) -> "ModelParams":
        rng = np.random.default_rng(seed)

        def glorot(fan_in, fan_out):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-limit, limit, size=(fan_in, fan_out))

        return ModelParams(
            W1=glorot(num_features, d1), b1=np.zeros(d1),
            W2=glorot(d1, d2), b2=np.zeros(d2),
            Wp=glorot(d2, num_classes), bp=np.zeros(num_classes),
        )


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 400
    lr: float = 0.01
    lam: float = 1.0
    weight_decay: float = 5e-4
    d1: int = 64
    d2: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.lr <= 0 or self.lam < 0 or self.weight_decay < 0:
            raise ValueError("invalid training configuration")


@dataclass
class TrainHistory:
    task_loss: list = field(default_factory=list)
    fair_loss: list = field(default_factory=list)
    total_loss: list = field(default_factory=list)
    train_acc: list = field(default_factory=list)
    val_acc: list = field(default_factory=list)

    def as_rows(self):
        return list(zip(self.task_loss, self.fair_loss, self.total_loss,
                        self.train_acc, self.val_acc))


@dataclass
class Forward:
    A1: np.ndarray   # normalized-adjacency-aggregated input features
    Z1: np.ndarray
    H1: np.ndarray
    A2: np.ndarray
    Z2: np.ndarray
    H2: np.ndarray
    logits: np.ndarray
    probs: np.ndarray


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(params: ModelParams, op: SparseOperator, X: np.ndarray) -> Forward:
    """H1 = relu(Â X W1 + b1), H2 = relu(Â H1 W2 + b2), logits = H2 Wp + bp."""
    if X.shape[1] != params.W1.shape[0]:
        raise DimensionMismatch(
            f"feature dim {X.shape[1]} != W1 rows {params.W1.shape[0]}")
    A1 = op.matmul(X)
    Z1 = A1 @ params.W1 + params.b1
    H1 = np.maximum(Z1, 0.0)
    A2 = op.matmul(H1)
    Z2 = A2 @ params.W2 + params.b2
    H2 = np.maximum(Z2, 0.0)
    logits = H2 @ params.Wp + params.bp
    return Forward(A1, Z1, H1, A2, Z2, H2, logits, softmax_rows(logits))


def task_loss(probs: np.ndarray, labels: np.ndarray, mask: np.ndarray,
              sample_weights: Optional[np.ndarray] = None) -> float:
    """Mean (optionally weighted) cross-entropy over masked nodes."""
    if len(mask) == 0:
        raise EmptyMask("task loss needs a non-empty node mask")
    p = np.clip(probs[mask, labels[mask]], PROB_FLOOR, None)
    if sample_weights is None:
        return float(-np.log(p).mean())
    return float(-(sample_weights * np.log(p)).sum() / sample_weights.sum())


def _group_similarity(Z: np.ndarray):
    """Average pairwise cosine similarity within a group and its gradient.

    Returns (avg, d avg / dZ). Groups with fewer than two members contribute
    average 0 and zero gradient. Zero vectors have similarity 0 by convention.
    """
    m = Z.shape[0]
    if m < 2:
        return 0.0, np.zeros_like(Z)
    norms = np.sqrt((Z ** 2).sum(axis=1))
    nonzero = norms > 0
    inv = np.where(nonzero, 1.0 / np.where(nonzero, norms, 1.0), 0.0)
    Zn = Z * inv[:, None]
    C = Zn @ Zn.T
    diag = np.where(nonzero, 1.0, 0.0)
    pair_sum = C.sum() - diag.sum()              # ordered pairs i != j
    avg = pair_sum / (m * (m - 1))
    # d avg / dz_i = 2/(m(m-1)) * [ (sum_j!=i zn_j)/|z_i| - (sum_j!=i cos_ij) z_i/|z_i|^2 ]
    sum_zn = Zn.sum(axis=0)
    row_cos = C.sum(axis=1) - diag
    grad = (sum_zn[None, :] - Zn) * inv[:, None] - row_cos[:, None] * Z * (inv ** 2)[:, None]
    grad *= 2.0 / (m * (m - 1))
    grad[~nonzero] = 0.0
    return float(avg), grad


def fairness_loss(embeddings: np.ndarray, labels: np.ndarray) -> float:
    """Gap in average intra-group pairwise cosine similarity between the two
    label groups of the coreset."""
    value, _ = fairness_loss_and_grad(embeddings, labels)
    return value


def fairness_loss_and_grad(embeddings: np.ndarray, labels: np.ndarray):
    """Returns (loss, d loss / d embeddings)."""
    g0 = labels == 0
    g1 = labels == 1
    for name, g in (("y=0", g0), ("y=1", g1)):
        if g.sum() < 2:
            logger.warning("coreset label group %s has fewer than 2 members; "
                           "it contributes average similarity 0", name)
    a0, da0 = _group_similarity(embeddings[g0])
    a1, da1 = _group_similarity(embeddings[g1])
    sign = np.sign(a0 - a1)
    grad = np.zeros_like(embeddings)
    grad[g0] = sign * da0
    grad[g1] = -sign * da1
    return float(abs(a0 - a1)), grad


def total_loss(task: float, fair: float, lam: float) -> float:
    return task + lam * fair


@dataclass
class Grads:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    Wp: np.ndarray
    bp: np.ndarray


def loss_value(params: ModelParams, op: SparseOperator, X: np.ndarray,
               labels: np.ndarray, mask: np.ndarray, coreset_nodes: np.ndarray,
               lam: float, sample_weights: Optional[np.ndarray] = None) -> float:
    """Scalar total loss; the quantity `gradients` differentiates."""
    fw = forward(params, op, X)
    task = task_loss(fw.probs, labels, mask, sample_weights)
    fair = 0.0
    if lam > 0 and len(coreset_nodes):
        fair, _ = fairness_loss_and_grad(fw.H2[coreset_nodes], labels[coreset_nodes])
    return total_loss(task, fair, lam)


def gradients(params: ModelParams, op: SparseOperator, X: np.ndarray,
              labels: np.ndarray, mask: np.ndarray, coreset_nodes: np.ndarray,
              lam: float, sample_weights: Optional[np.ndarray] = None) -> Grads:
    """Analytic gradients of total_loss w.r.t. every parameter."""
    fw = forward(params, op, X)
    n, num_classes = fw.probs.shape

    dlogits = np.zeros_like(fw.logits)
    if sample_weights is None:
        w = np.full(len(mask), 1.0 / len(mask))
    else:
        w = sample_weights / sample_weights.sum()
    p = fw.probs[mask].copy()
    p[np.arange(len(mask)), labels[mask]] -= 1.0
    # the probability floor clips the loss; clipped rows have zero gradient
    floored = fw.probs[mask, labels[mask]] < PROB_FLOOR
    p[floored] = 0.0
    dlogits[mask] = w[:, None] * p

    dH2 = dlogits @ params.Wp.T
    if lam > 0 and len(coreset_nodes):
        _, dfair = fairness_loss_and_grad(fw.H2[coreset_nodes], labels[coreset_nodes])
        dH2[coreset_nodes] += lam * dfair

    dWp = fw.H2.T @ dlogits
    dbp = dlogits.sum(axis=0)

    dZ2 = dH2 * (fw.Z2 > 0)
    dW2 = fw.A2.T @ dZ2
    db2 = dZ2.sum(axis=0)
    dH1 = op.matmul(dZ2 @ params.W2.T)    # op is symmetric

    dZ1 = dH1 * (fw.Z1 > 0)
    dW1 = fw.A1.T @ dZ1
    db1 = dZ1.sum(axis=0)
    return Grads(dW1, db1, dW2, db2, dWp, dbp)


def predict(params: ModelParams, op: SparseOperator, X: np.ndarray):
    """Returns (predicted labels, positive-class scores)."""
    fw = forward(params, op, X)
    return fw.logits.argmax(axis=1), fw.probs[:, 1]


def train(graph: Graph, split: NodeSplit, coreset: Optional[Coreset],
          config: TrainConfig):
    """Full-batch gradient descent; returns best-validation params + history.

    Deterministic for a fixed seed. Weight decay applies to weight matrices
    only, outside the differentiated loss.
    """
    op = normalized_adjacency(graph)
    X = graph.features
    labels = graph.labels
    params = ModelParams.init(graph.num_features, config.d1, config.d2,
                              graph.num_classes, config.seed)
    coreset_nodes = coreset.node_ids if coreset is not None else np.empty(0, dtype=np.int64)
    if len(coreset_nodes) and not np.isin(coreset_nodes, split.train).all():
        raise ValueError("coreset nodes must lie in the training split")

    history = TrainHistory()
    best = params.copy()
    best_val = -1.0
    for _ in range(config.epochs):
        fw = forward(params, op, X)
        task = task_loss(fw.probs, labels, split.train)
        fair = 0.0
        if config.lam > 0 and len(coreset_nodes):
            fair = fairness_loss(fw.H2[coreset_nodes], labels[coreset_nodes])
        tot = total_loss(task, fair, config.lam)
        preds = fw.logits.argmax(axis=1)
        tr_acc = float((preds[split.train] == labels[split.train]).mean())
        va_acc = float((preds[split.val] == labels[split.val]).mean())
        history.task_loss.append(task)
        history.fair_loss.append(fair)
        history.total_loss.append(tot)
        history.train_acc.append(tr_acc)
        history.val_acc.append(va_acc)
        # ties prefer the later, more-trained parameters
        if va_acc >= best_val:
            best_val = va_acc
            best = params.copy()

        g = gradients(params, op, X, labels, split.train, coreset_nodes, config.lam)
        for name in ModelParams.FIELDS:
            grad = getattr(g, name)
            value = getattr(params, name)
            if name.startswith("W"):
                grad = grad + config.weight_decay * value
            setattr(params, name, value - config.lr * grad)
    return best, history
