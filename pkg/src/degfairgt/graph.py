"""Undirected node-attributed graphs: loading, CSR adjacency, k-hop reach,
and random-walk transition powers."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "GraphFormatError",
    "Graph",
    "KHopIndex",
    "build_graph",
    "load_graph",
    "build_khop_index",
    "transition_powers",
]


class GraphFormatError(ValueError):
    """Malformed or inconsistent graph input files."""


@dataclass
class Graph:
    """Simple undirected graph with dense features and optional labels.

    Adjacency is kept in CSR form with sorted neighbor lists; ``edges`` stores
    each undirected edge once as (u, v) with u < v. Node ids are dense
    0-based integers. Instances are immutable by convention.
    """

    n: int
    edges: np.ndarray          # (m, 2) int64, u < v
    features: np.ndarray       # (n, d0) float64
    labels: np.ndarray | None  # (n,) int64 or None
    indptr: np.ndarray = field(repr=False, default=None)
    indices: np.ndarray = field(repr=False, default=None)

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        pos = np.searchsorted(nb, v)
        return pos < nb.size and nb[pos] == v

    def adjacency_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.float64)
        if self.num_edges:
            a[self.edges[:, 0], self.edges[:, 1]] = 1.0
            a[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return a


def build_graph(edges, features, labels=None) -> Graph:
    """Validate raw arrays and assemble a Graph (rejects loops/duplicates)."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise GraphFormatError(f"features must be 2-d, got shape {features.shape}")
    n = features.shape[0]
    if n == 0:
        raise GraphFormatError("graph needs at least one node")

    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size:
        if edges.min() < 0:
            raise GraphFormatError("negative node id in edges")
        if edges.max() >= n:
            raise GraphFormatError(
                f"edge references node {int(edges.max())} but only {n} feature rows exist")
        if np.any(edges[:, 0] == edges[:, 1]):
            bad = edges[edges[:, 0] == edges[:, 1]][0]
            raise GraphFormatError(f"self-loop on node {int(bad[0])} rejected")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        edges = np.stack([lo, hi], axis=1)
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        edges = edges[order]
        if edges.shape[0] > 1 and np.any(np.all(edges[1:] == edges[:-1], axis=1)):
            dup = edges[1:][np.all(edges[1:] == edges[:-1], axis=1)][0]
            raise GraphFormatError(f"duplicate edge ({int(dup[0])}, {int(dup[1])})")
    else:
        edges = edges.reshape(0, 2)

    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64).reshape(-1)
        if labels.shape[0] != n:
            raise GraphFormatError(
                f"label count {labels.shape[0]} != node count {n}")
        if labels.size and labels.min() < 0:
            raise GraphFormatError("negative class id in labels")

    # CSR with sorted neighbor lists.
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    return Graph(n=n, edges=edges, features=features, labels=labels,
                 indptr=indptr, indices=dst.astype(np.int64))


def load_graph(edge_path, feature_path, label_path=None) -> Graph:
    """Load a graph from the documented text formats.

    Edges: one "u v" pair per line, '#' lines ignored, each undirected edge
    listed once. Features: headerless CSV of n rows. Labels: one class id
    per line.
    """
    edge_path, feature_path = Path(edge_path), Path(feature_path)
    edges = []
    for lineno, raw in enumerate(edge_path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(
                f"{edge_path}:{lineno}: expected two node ids, got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(
                f"{edge_path}:{lineno}: non-integer node id in {raw!r}") from None
        if u < 0 or v < 0:
            raise GraphFormatError(f"{edge_path}:{lineno}: negative node id")
        edges.append((u, v))

    try:
        features = np.loadtxt(feature_path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise GraphFormatError(f"{feature_path}: malformed CSV row ({exc})") from None

    labels = None
    if label_path is not None:
        label_path = Path(label_path)
        rows = [ln.strip() for ln in label_path.read_text().splitlines() if ln.strip()]
        try:
            labels = np.array([int(r) for r in rows], dtype=np.int64)
        except ValueError:
            raise GraphFormatError(f"{label_path}: non-integer label") from None

    return build_graph(np.array(edges, dtype=np.int64).reshape(-1, 2), features, labels)


@dataclass
class KHopIndex:
    """Cumulative k-hop neighborhoods from per-source BFS.

    ``within[l-1][v]`` is the boolean mask of nodes at distance 1..l from v
    (v itself excluded), so the masks are nested across steps. ``reach``
    equals the step-k mask and is symmetric.
    """

    k: int
    within: np.ndarray  # (k, n, n) bool, cumulative, diagonal False

    @property
    def reach(self) -> np.ndarray:
        return self.within[-1]

    def neighborhood(self, v: int, step: int) -> np.ndarray:
        """Sorted node indices at distance 1..step from v."""
        return np.flatnonzero(self.within[step - 1][v])


def bfs_distances(g: Graph, source: int, cap: int | None = None) -> np.ndarray:
    """Hop distances from ``source``; unreachable nodes get -1."""
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[source] = 0
    q = deque([source])
    while q:
        u = q.popleft()
        if cap is not None and dist[u] >= cap:
            continue
        for w in g.neighbors(u):
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                q.append(w)
    return dist


def build_khop_index(g: Graph, k: int) -> KHopIndex:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    within = np.zeros((k, g.n, g.n), dtype=bool)
    for v in range(g.n):
        dist = bfs_distances(g, v, cap=k)
        for l in range(1, k + 1):
            within[l - 1, v] = (dist >= 1) & (dist <= l)
    return KHopIndex(k=k, within=within)


def transition_powers(g: Graph, p_max: int) -> list[np.ndarray]:
    """Dense powers T^1..T^p_max of the row-normalized adjacency.

    Rows of isolated nodes are all-zero, every other row of each power sums
    to 1 (up to float round-off).
    """
    if p_max < 1:
        raise ValueError(f"p_max must be >= 1, got {p_max}")
    a = g.adjacency_dense()
    deg = a.sum(axis=1)
    t = np.divide(a, deg[:, None], out=np.zeros_like(a), where=deg[:, None] > 0)
    powers = [t]
    for _ in range(1, p_max):
        powers.append(powers[-1] @ t)
    return powers
