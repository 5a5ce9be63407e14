"""Community detection: k-means with k-means++ initialization over
structural embeddings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import KTooLarge


@dataclass(frozen=True)
class CommunityAssignment:
    assignment: np.ndarray
    centroids: np.ndarray
    wcss: float
    iterations_run: int

    @property
    def num_communities(self) -> int:
        return self.centroids.shape[0]

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == k)


def wcss(embeddings: np.ndarray, assignment: np.ndarray) -> float:
    """Within-cluster sum of squares (squared Euclidean to cluster means)."""
    total = 0.0
    for k in np.unique(assignment):
        pts = embeddings[assignment == k]
        mu = pts.mean(axis=0)
        total += float(((pts - mu) ** 2).sum())
    return total


def _sq_dists(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def _plusplus_init(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((K, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    closest = ((X - centroids[0]) ** 2).sum(axis=1)
    for i in range(1, K):
        total = closest.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=closest / total)
        centroids[i] = X[idx]
        closest = np.minimum(closest, ((X - centroids[i]) ** 2).sum(axis=1))
    return centroids


def kmeans(embeddings: np.ndarray, K: int, max_iter: int = 100, tol: float = 1e-6,
           seed: int = 0) -> CommunityAssignment:
    """Lloyd iterations from a k-means++ start.

    Stops when the centroid shift drops below tol or max_iter is reached;
    empty clusters are reseeded to the point farthest from its centroid.
    The k-means objective is non-increasing across iterations by construction
    (asserted each iteration).
    """
    X = np.asarray(embeddings, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= K <= n:
        raise KTooLarge(f"K={K} outside 1..{n}")
    rng = np.random.default_rng(seed)
    centroids = _plusplus_init(X, K, rng)
    assignment = np.argmin(_sq_dists(X, centroids), axis=1)
    prev_obj = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        new_centroids = centroids.copy()
        for k in range(K):
            members = assignment == k
            if members.any():
                new_centroids[k] = X[members].mean(axis=0)
        d = _sq_dists(X, new_centroids)
        assignment = np.argmin(d, axis=1)
        for k in range(K):
            if not (assignment == k).any():
                far = int(np.argmax(d[np.arange(n), assignment]))
                new_centroids[k] = X[far]
                d = _sq_dists(X, new_centroids)
                assignment = np.argmin(d, axis=1)
        obj = wcss(X, assignment)
        assert obj <= prev_obj + 1e-9, "k-means objective increased"
        prev_obj = obj
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if shift < tol:
            break
    # report means of final assignment as centroids
    final = centroids.copy()
    for k in range(K):
        members = assignment == k
        if members.any():
            final[k] = X[members].mean(axis=0)
    return CommunityAssignment(assignment.astype(np.int64), final, wcss(X, assignment), iterations)
