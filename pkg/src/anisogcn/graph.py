"""Sparse graph representation and the spectral quantities built from it.

A `Graph` stores a symmetric, self-loop-free weighted adjacency in
compressed-row form. `normalize` derives the four matrices every diffusion
step consumes: the self-looped adjacency, its degree vector, the
symmetrically normalized adjacency, and the combinatorial Laplacian of the
self-looped graph.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sparse import CsrMatrix

# Entry blocks are sized so the (entries, F) difference temporaries in the
# smoothness sum stay around 32 MB regardless of feature width.
_SMOOTHNESS_BLOCK_ELEMENTS = 4_000_000


class GraphError(ValueError):
    """Invalid graph construction input."""


class EdgeIndexError(GraphError):
    """Edge endpoint outside [0, n)."""


class SelfLoopError(GraphError):
    """Input edge connects a node to itself."""


class DuplicateEdgeError(GraphError):
    """The same undirected pair appears more than once."""


class EdgeWeightError(GraphError):
    """Edge weight is not a positive finite number."""


@dataclass(frozen=True)
class Graph:
    """Symmetric weighted graph with zero diagonal."""

    n: int
    adjacency: CsrMatrix

    @property
    def num_edges(self) -> int:
        """Number of undirected edges (each stored twice in `adjacency`)."""
        return self.adjacency.nnz // 2


@dataclass(frozen=True)
class NormalizedGraph:
    """Graph plus its derived diffusion operators.

    self_looped: adjacency with +1 added to every diagonal entry.
    degree:      row sums of `self_looped` (always >= 1).
    sym_norm:    self_looped entries divided by sqrt(deg_i * deg_j).
    laplacian:   diag(degree) - self_looped, diagonal stored explicitly.
    """

    base: Graph
    self_looped: CsrMatrix
    degree: np.ndarray
    sym_norm: CsrMatrix
    laplacian: CsrMatrix

    @property
    def n(self) -> int:
        return self.base.n


def build_graph(n: int, edges: list[tuple[int, int, float]]) -> Graph:
    """Construct a Graph from undirected (i, j, weight) triples.

    Each undirected pair may be listed once; it is stored in both
    directions. Self-loops, duplicates, out-of-range endpoints, and
    nonpositive or non-finite weights are rejected.
    """
    if n < 1:
        raise GraphError(f"node count must be positive, got {n}")
    seen: set[tuple[int, int]] = set()
    rows = np.empty(2 * len(edges), dtype=np.int64)
    cols = np.empty(2 * len(edges), dtype=np.int64)
    vals = np.empty(2 * len(edges), dtype=np.float64)
    for k, (i, j, w) in enumerate(edges):
        i, j, w = int(i), int(j), float(w)
        if not (0 <= i < n and 0 <= j < n):
            raise EdgeIndexError(f"edge ({i}, {j}) out of range for n={n}")
        if i == j:
            raise SelfLoopError(f"self-loop at node {i} not allowed")
        if not np.isfinite(w) or w <= 0.0:
            raise EdgeWeightError(f"edge ({i}, {j}) has invalid weight {w}")
        key = (i, j) if i < j else (j, i)
        if key in seen:
            raise DuplicateEdgeError(f"duplicate undirected edge ({key[0]}, {key[1]})")
        seen.add(key)
        rows[2 * k], cols[2 * k], vals[2 * k] = i, j, w
        rows[2 * k + 1], cols[2 * k + 1], vals[2 * k + 1] = j, i, w
    return Graph(n, CsrMatrix.from_coo((n, n), rows, cols, vals))


def normalize(g: Graph) -> NormalizedGraph:
    """Derive self-looped, degree, symmetric-normalized, and Laplacian forms."""
    n = g.n
    adj = g.adjacency
    diag = np.arange(n, dtype=np.int64)
    ones = np.ones(n)

    base_rows = adj.row_indices()
    self_looped = CsrMatrix.from_coo(
        (n, n),
        np.concatenate([base_rows, diag]),
        np.concatenate([adj.indices, diag]),
        np.concatenate([adj.data, ones]),
    )
    degree = self_looped.row_sums()

    inv_sqrt = 1.0 / np.sqrt(degree)
    sl_rows = self_looped.row_indices()
    sym_norm = self_looped.scale_entries(inv_sqrt[sl_rows] * inv_sqrt[self_looped.indices])

    # L = D - A~: off-diagonal entries are -A_ij, diagonal is degree - 1
    # (the self-loop contributes 1 to both D and A~). The diagonal is kept
    # even when it is exactly zero so no Laplacian row is structurally empty.
    laplacian = CsrMatrix.from_coo(
        (n, n),
        np.concatenate([base_rows, diag]),
        np.concatenate([adj.indices, diag]),
        np.concatenate([-adj.data, degree - 1.0]),
    )
    return NormalizedGraph(g, self_looped, degree, sym_norm, laplacian)


def smoothness_trace(ng: NormalizedGraph, h: np.ndarray) -> float:
    """Laplacian smoothness of node features.

    Evaluates 0.5 * sum_ij A~_ij * ||h_i - h_j||^2 as a sum over stored
    adjacency entries, which costs O(|E| F). Self-loop terms vanish, so the
    sum runs over the base adjacency only.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.shape[0] != ng.n:
        raise ValueError(f"feature rows ({h.shape[0]}) != node count ({ng.n})")
    adj = ng.base.adjacency
    nnz = adj.nnz
    if nnz == 0 or h.size == 0:
        return 0.0
    width = h.shape[1] if h.ndim == 2 else 1
    rows = adj.row_indices()
    block = max(1, _SMOOTHNESS_BLOCK_ELEMENTS // max(1, width))
    total = 0.0
    for start in range(0, nnz, block):
        stop = min(start + block, nnz)
        diff = h[rows[start:stop]] - h[adj.indices[start:stop]]
        sq = np.einsum("ij,ij->i", diff, diff) if diff.ndim == 2 else diff * diff
        total += float(adj.data[start:stop] @ sq)
    return 0.5 * total


def smoothness_trace_gradient(ng: NormalizedGraph, h: np.ndarray) -> np.ndarray:
    """Gradient of `smoothness_trace` with respect to h: 2 * L * h."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape[0] != ng.n:
        raise ValueError(f"feature rows ({h.shape[0]}) != node count ({ng.n})")
    return 2.0 * ng.laplacian.matmul_dense(h)


def knn_graph(x: np.ndarray, k: int) -> Graph:
    """Euclidean k-nearest-neighbor graph, symmetrized by union.

    Each node links to its k nearest other nodes (distance ties broken by
    the smaller candidate index); the directed lists are merged into an
    undirected unit-weight graph.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise GraphError("feature matrix must be 2-D")
    n = x.shape[0]
    if not np.all(np.isfinite(x)):
        raise GraphError("features contain non-finite values")
    if k < 1:
        raise GraphError(f"k must be positive, got {k}")
    if k >= n:
        raise GraphError(f"k={k} must be smaller than the number of points n={n}")

    sq_norms = np.einsum("ij,ij->i", x, x)
    pairs: set[tuple[int, int]] = set()
    block = max(1, 2**25 // max(1, n))
    for start in range(0, n, block):
        stop = min(start + block, n)
        # squared distances via the Gram expansion; ordering is all that matters
        d = sq_norms[start:stop, None] - 2.0 * (x[start:stop] @ x.T) + sq_norms[None, :]
        d[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
        # stable sort keeps equal distances in index order, the tie rule
        order = np.argsort(d, axis=1, kind="stable")[:, :k]
        for local, row in enumerate(order):
            i = start + local
            for j in row:
                pairs.add((i, int(j)) if i < j else (int(j), i))

    pair_arr = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    rows = np.concatenate([pair_arr[:, 0], pair_arr[:, 1]])
    cols = np.concatenate([pair_arr[:, 1], pair_arr[:, 0]])
    vals = np.ones(rows.shape[0])
    return Graph(n, CsrMatrix.from_coo((n, n), rows, cols, vals))
