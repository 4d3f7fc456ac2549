"""Classical embedding baselines: Torgerson MDS and Isomap.

Both are deterministic spectral methods. Isomap replaces Euclidean
distances with shortest-path (geodesic) distances over a kNN graph before
applying classical MDS, so it unrolls curved manifolds.
"""

from __future__ import annotations

import heapq
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .ndmath import symmetric_eig
from .spectral import build_knn


@dataclass
class DistanceMatrix:
    d: np.ndarray  # (n, n) symmetric, nonnegative, zero diagonal

    def __post_init__(self):
        m = np.asarray(self.d, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputError(f"DistanceMatrix must be square, got {m.shape}")
        if np.max(np.abs(m - m.T)) > 1e-10 * max(1.0, float(np.abs(m).max() if m.size else 0.0)):
            raise InputError("DistanceMatrix must be symmetric")
        if np.any(np.diag(m) != 0.0):
            raise InputError("DistanceMatrix diagonal must be zero")
        if m.size and m.min() < 0.0:
            raise InputError("DistanceMatrix entries must be nonnegative")
        self.d = m

    @property
    def n(self) -> int:
        return self.d.shape[0]


@dataclass
class Embedding2D:
    points: np.ndarray  # (n, dim)
    method: str


def euclidean_distances(x: np.ndarray) -> DistanceMatrix:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    sq = np.sum(x**2, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0)
    np.fill_diagonal(d2, 0.0)
    d = np.sqrt(d2)
    return DistanceMatrix(0.5 * (d + d.T))


def stress(d: DistanceMatrix, points: np.ndarray) -> float:
    """Raw stress: sum over pairs of squared distance mismatch (diagnostic only)."""
    rec = euclidean_distances(points).d
    diff = d.d - rec
    return float(np.sum(np.triu(diff, 1) ** 2))


def classical_mds(d: DistanceMatrix, dim: int, method: str = "mds") -> Embedding2D:
    """Torgerson's classical MDS: double-center the squared distances,
    eigendecompose, and scale the top eigenvectors.

    Exact for Euclidean distance matrices. If fewer than `dim` positive
    eigenvalues exist, missing coordinates are zero-padded with a warning.
    """
    if dim < 1:
        raise InputError(f"classical_mds: dim must be >= 1, got {dim}")
    n = d.n
    j = np.eye(n) - np.ones((n, n)) / n
    b = -0.5 * (j @ (d.d**2) @ j)
    b = 0.5 * (b + b.T)
    w, v = symmetric_eig(b)
    w, v = w[::-1], v[:, ::-1]  # descending
    tiny = 1e-12 * max(float(np.abs(w).max()) if w.size else 0.0, 1e-300)
    n_pos = int(np.sum(w > tiny))
    use = min(dim, n_pos)
    if use < dim:
        warnings.warn(f"classical_mds: only {n_pos} positive eigenvalues for dim={dim}; "
                      "padding remaining coordinates with zeros")
    points = np.zeros((n, dim))
    if use > 0:
        points[:, :use] = v[:, :use] * np.sqrt(w[:use])
    return Embedding2D(points=points, method=method)


def _dijkstra_row(indptr, indices, weights, n, source) -> np.ndarray:
    dist = np.full(n, np.inf)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        du, u = heapq.heappop(heap)
        if du > dist[u]:
            continue
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            alt = du + weights[e]
            if alt < dist[v]:
                dist[v] = alt
                heapq.heappush(heap, (alt, v))
    return dist


def geodesic_distances(points: np.ndarray, k: int) -> DistanceMatrix:
    """All-pairs shortest paths over the Euclidean-weighted kNN graph.

    Raises on a disconnected graph, naming the component sizes.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = points.shape[0]
    graph = build_knn(points, k)
    sizes = graph.component_sizes()
    if len(sizes) > 1:
        raise InputError(f"isomap: kNN graph is disconnected (component sizes {sizes}); "
                         "increase k")
    edge = euclidean_distances(points).d * graph.adjacency
    # CSR-ish flattening of the neighbor lists for the Dijkstra inner loop
    neighbor_lists = [np.nonzero(graph.adjacency[u])[0] for u in range(n)]
    indptr = np.zeros(n + 1, dtype=int)
    indptr[1:] = np.cumsum([len(nb) for nb in neighbor_lists])
    indices = np.concatenate(neighbor_lists) if n else np.zeros(0, dtype=int)
    weights = np.concatenate([edge[u, nb] for u, nb in enumerate(neighbor_lists)])
    g = np.vstack([_dijkstra_row(indptr, indices, weights, n, s) for s in range(n)])
    g = 0.5 * (g + g.T)
    np.fill_diagonal(g, 0.0)
    return DistanceMatrix(g)


def isomap(points: np.ndarray, k: int, dim: int) -> Embedding2D:
    """Classical MDS on geodesic distances over the kNN graph."""
    emb = classical_mds(geodesic_distances(points, k), dim, method="isomap")
    return emb
