"""Undirected attributed graphs in CSR form, loading, validation and the
symmetric normalized adjacency operator used by the GCN."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import (
    ClassTooSmall,
    DataError,
    DimensionMismatch,
    FractionSumInvalid,
    MalformedLine,
    NodeIdOutOfRange,
    NonBinarySensitive,
)

BUNDLE_FILES = {
    "edges": "edges.tsv",
    "features": "features.csv",
    "labels": "labels.txt",
    "sensitive": "sensitive.txt",
}


@dataclass(frozen=True)
class Graph:
    """Immutable undirected attributed graph.

    Adjacency is CSR (row offsets + sorted column indices) over deduplicated,
    self-loop-free undirected edges; every edge is stored in both directions.
    """

    num_nodes: int
    indptr: np.ndarray
    indices: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    sensitive: np.ndarray

    def __post_init__(self):
        n = self.num_nodes
        if len(self.indptr) != n + 1:
            raise DimensionMismatch("indptr length must be num_nodes + 1")
        if self.features.shape[0] != n or len(self.labels) != n or len(self.sensitive) != n:
            raise DimensionMismatch(
                f"features/labels/sensitive rows must equal n={n}: "
                f"{self.features.shape[0]}/{len(self.labels)}/{len(self.sensitive)}"
            )
        if not np.isin(self.sensitive, [0, 1]).all():
            raise NonBinarySensitive("sensitive attribute must be 0/1")
        if self.labels.min(initial=0) < 0:
            raise DataError("labels must be non-negative class ids")
        for u in range(n):
            row = self.indices[self.indptr[u]:self.indptr[u + 1]]
            if (u == row).any():
                raise DataError(f"self-loop stored at node {u}")
            if (np.diff(row) <= 0).any():
                raise DataError(f"column indices not strictly increasing in row {u}")
        # symmetry: (u,v) stored iff (v,u) stored
        adj = self.to_scipy()
        if (adj != adj.T).nnz != 0:
            raise DataError("adjacency not symmetric")

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return len(self.indices) // 2

    @property
    def num_features(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.num_nodes else 0

    def degree(self, u: int) -> int:
        return int(self.indptr[u + 1] - self.indptr[u])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        i = np.searchsorted(row, v)
        return i < len(row) and row[i] == v

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (np.ones(len(self.indices)), self.indices, self.indptr),
            shape=(self.num_nodes, self.num_nodes),
        )

    @staticmethod
    def from_edges(num_nodes, edges, features, labels, sensitive) -> "Graph":
        """Build a Graph from an iterable of (u, v) pairs.

        Duplicate and reversed pairs collapse to one undirected edge.
        """
        features = np.ascontiguousarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        sensitive = np.asarray(sensitive, dtype=np.int64)
        pairs = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise DataError(f"self-loop edge ({u},{v}) rejected")
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise NodeIdOutOfRange(f"edge ({u},{v}) outside 0..{num_nodes - 1}")
            pairs.add((min(u, v), max(u, v)))
        if pairs:
            arr = np.array(sorted(pairs), dtype=np.int64)
            src = np.concatenate([arr[:, 0], arr[:, 1]])
            dst = np.concatenate([arr[:, 1], arr[:, 0]])
            order = np.lexsort((dst, src))
            src, dst = src[order], dst[order]
            indptr = np.zeros(num_nodes + 1, dtype=np.int64)
            np.add.at(indptr, src + 1, 1)
            indptr = np.cumsum(indptr)
            indices = dst
        else:
            indptr = np.zeros(num_nodes + 1, dtype=np.int64)
            indices = np.empty(0, dtype=np.int64)
        return Graph(num_nodes, indptr, indices, features, labels, sensitive)


@dataclass(frozen=True)
class SparseOperator:
    """Symmetric non-negative sparse operator (CSR, float64), shape n x n."""

    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    shape: tuple

    def __post_init__(self):
        if not np.isfinite(self.values).all() or (self.values < 0).any():
            raise DataError("operator values must be finite and non-negative")
        m = self.to_scipy()
        if abs(m - m.T).max() > 1e-12:
            raise DataError("operator not symmetric within 1e-12")

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, self.indices, self.indptr), shape=self.shape)

    def matmul(self, X: np.ndarray) -> np.ndarray:
        return self.to_scipy() @ X

    __matmul__ = matmul


@dataclass(frozen=True)
class NodeSplit:
    """Pairwise-disjoint train / validation / test node index sets."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        parts = [self.train, self.val, self.test]
        if any(len(p) == 0 for p in parts):
            raise DataError("every split must be non-empty")
        allidx = np.concatenate(parts)
        if len(np.unique(allidx)) != len(allidx):
            raise DataError("splits must be pairwise disjoint")


def normalized_adjacency(graph: Graph) -> SparseOperator:
    """Renormalized operator D^(-1/2) (A + I) D^(-1/2).

    Entry (u, v) is 1/sqrt((deg(u)+1)(deg(v)+1)) for each edge and diagonal;
    isolated nodes get a lone diagonal 1.
    """
    n = graph.num_nodes
    inv_sqrt = 1.0 / np.sqrt(graph.degrees + 1.0)
    a = graph.to_scipy().tolil()
    a.setdiag(1.0)
    a = a.tocsr()
    a = a.multiply(inv_sqrt[:, None]).multiply(inv_sqrt[None, :]).tocsr()
    a.sort_indices()
    return SparseOperator(a.indptr, a.indices, np.asarray(a.data, dtype=np.float64), (n, n))


def _read_int_file(path: Path) -> np.ndarray:
    out = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            out.append(int(line))
        except ValueError:
            raise MalformedLine(path, lineno, line) from None
    return np.array(out, dtype=np.int64)


def _read_edges(path: Path):
    edges = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split("\t")
        if len(parts) != 2:
            raise MalformedLine(path, lineno, line)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise MalformedLine(path, lineno, line) from None
        edges.append((u, v))
    return edges


def load_graph(edges_path, features_path, labels_path, sensitive_path) -> Graph:
    """Load and validate a Graph from the four-file on-disk format."""
    features = np.loadtxt(features_path, delimiter=",", dtype=np.float64, ndmin=2)
    labels = _read_int_file(Path(labels_path))
    sensitive = _read_int_file(Path(sensitive_path))
    n = features.shape[0]
    if len(labels) != n or len(sensitive) != n:
        raise DimensionMismatch(
            f"feature rows ({n}) != labels ({len(labels)}) or sensitive ({len(sensitive)})"
        )
    edges = _read_edges(Path(edges_path))
    return Graph.from_edges(n, edges, features, labels, sensitive)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def save_bundle(graph: Graph, out_dir) -> Path:
    """Write a graph bundle: four data files plus a JSON manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    for u in range(graph.num_nodes):
        for v in graph.neighbors(u):
            if u < v:
                lines.append(f"{u}\t{v}")
    (out / BUNDLE_FILES["edges"]).write_text("\n".join(lines) + ("\n" if lines else ""))
    np.savetxt(out / BUNDLE_FILES["features"], graph.features, delimiter=",", fmt="%.17g")
    (out / BUNDLE_FILES["labels"]).write_text("".join(f"{y}\n" for y in graph.labels))
    (out / BUNDLE_FILES["sensitive"]).write_text("".join(f"{s}\n" for s in graph.sensitive))
    manifest = {
        "n": graph.num_nodes,
        "k": graph.num_features,
        "num_classes": graph.num_classes,
        "checksums": {name: _sha256(out / fname) for name, fname in BUNDLE_FILES.items()},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return out


def load_bundle(bundle_dir) -> Graph:
    """Load a graph bundle, verifying the manifest checksums."""
    d = Path(bundle_dir)
    manifest = json.loads((d / "manifest.json").read_text())
    for name, fname in BUNDLE_FILES.items():
        actual = _sha256(d / fname)
        if actual != manifest["checksums"][name]:
            raise DataError(f"checksum mismatch for {fname} in {d}")
    graph = load_graph(
        d / BUNDLE_FILES["edges"],
        d / BUNDLE_FILES["features"],
        d / BUNDLE_FILES["labels"],
        d / BUNDLE_FILES["sensitive"],
    )
    if graph.num_nodes != manifest["n"] or graph.num_features != manifest["k"]:
        raise DimensionMismatch("bundle manifest disagrees with data files")
    return graph


def _allocate(total: int, fractions) -> list:
    """Largest-remainder allocation of `total` items over fractions."""
    raw = [total * f for f in fractions]
    counts = [int(np.floor(r)) for r in raw]
    rem = total - sum(counts)
    order = np.argsort([c - r for c, r in zip(counts, raw)])
    for i in range(rem):
        counts[order[i]] += 1
    return counts


def split_nodes(graph: Graph, fractions, seed: int, stratify_by_label: bool = False) -> NodeSplit:
    """Deterministic train/val/test split, optionally stratified by label."""
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise FractionSumInvalid("need three positive fractions")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise FractionSumInvalid(f"fractions sum to {sum(fractions)}, expected 1")
    rng = np.random.default_rng(seed)
    n = graph.num_nodes
    if stratify_by_label:
        buckets = [[], [], []]
        for cls in range(graph.num_classes):
            members = np.flatnonzero(graph.labels == cls)
            if len(members) < 3:
                raise ClassTooSmall(f"class {cls} has {len(members)} nodes, needs >= 3")
            members = rng.permutation(members)
            counts = _allocate(len(members), fractions)
            offs = np.cumsum([0] + counts)
            for i in range(3):
                buckets[i].append(members[offs[i]:offs[i + 1]])
        train, val, test = (np.sort(np.concatenate(b)) for b in buckets)
    else:
        perm = rng.permutation(n)
        counts = _allocate(n, fractions)
        offs = np.cumsum([0] + counts)
        train, val, test = (np.sort(perm[offs[i]:offs[i + 1]]) for i in range(3))
    return NodeSplit(train, val, test)
