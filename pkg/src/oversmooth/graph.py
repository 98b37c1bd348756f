"""Immutable undirected graphs in compressed adjacency form, synthetic
generators, and the sparse operators every other module is built on."""

from __future__ import annotations

import hashlib
import re

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph


class Graph:
    """Undirected simple graph with sorted, deduplicated CSR adjacency.

    Self-loops are never stored; operators that need them (the normalized
    propagation matrix) inject them on the fly.  Instances are immutable
    after construction and safe to share across threads.
    """

    def __init__(self, node_count: int, indptr: np.ndarray, indices: np.ndarray):
        node_count = int(node_count)
        if node_count < 1:
            raise ValueError("graph needs at least one node")
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        if indptr.shape != (node_count + 1,) or indptr[0] != 0 or indptr[-1] != indices.size:
            raise ValueError("malformed adjacency index")
        if np.any(np.diff(indptr) < 0):
            raise ValueError("adjacency row pointers must be non-decreasing")
        rows = np.repeat(np.arange(node_count, dtype=np.int64), np.diff(indptr))
        if indices.size:
            if indices.min() < 0 or indices.max() >= node_count:
                raise ValueError("neighbor id out of range")
            if np.any(indices == rows):
                raise ValueError("self-loops are not stored in a Graph")
            # strictly increasing within each row: sorted and deduplicated
            inner = np.diff(indices) <= 0
            bounds = indptr[1:-1]
            bounds = bounds[(bounds > 0) & (bounds < indices.size)]
            inner[bounds - 1] = False
            if np.any(inner):
                raise ValueError("neighbor lists must be sorted and deduplicated")
            # symmetry: the multiset of (i, j) equals the multiset of (j, i)
            fwd = rows * node_count + indices
            bwd = indices * node_count + rows
            if not np.array_equal(np.sort(fwd), np.sort(bwd)):
                raise ValueError("adjacency is not symmetric")
        if indices.size % 2:
            raise ValueError("directed entry count must be even")

        self.node_count = node_count
        self.edge_count = indices.size // 2
        self.indptr = indptr
        self.indices = indices
        self.degrees = np.diff(indptr)
        self._rows = rows
        for arr in (self.indptr, self.indices, self.degrees, self._rows):
            arr.setflags(write=False)
        self._adj = None
        self._norm_op = None
        self._lap = None

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def directed_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """All ordered pairs (i, j) with j a neighbor of i; each edge twice."""
        return self._rows, self.indices

    def undirected_edges(self) -> np.ndarray:
        """Unique undirected edges as an (e, 2) array with u < v."""
        mask = self._rows < self.indices
        return np.column_stack((self._rows[mask], self.indices[mask]))

    def adjacency(self) -> sparse.csr_matrix:
        """Binary adjacency matrix A (no self-loops), float64 CSR."""
        if self._adj is None:
            data = np.ones(self.indices.size, dtype=np.float64)
            self._adj = sparse.csr_matrix(
                (data, self.indices.copy(), self.indptr.copy()),
                shape=(self.node_count, self.node_count),
            )
        return self._adj

    def __repr__(self) -> str:
        return f"Graph(v={self.node_count}, e={self.edge_count})"


def build_from_edges(edges, node_count: int) -> Graph:
    """Build a Graph from an iterable of (u, v) pairs.

    Duplicate edges and both orientations are deduplicated silently;
    self-edges and out-of-range ids are errors.
    """
    v = int(node_count)
    if v < 1:
        raise ValueError("node_count must be positive")
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                     dtype=np.int64)
    if arr.size == 0:
        arr = arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("edges must be pairs of node ids")
    if arr.size and (arr.min() < 0 or arr.max() >= v):
        raise ValueError("edge endpoint out of range")
    if np.any(arr[:, 0] == arr[:, 1]):
        raise ValueError("self-edges are not allowed")
    both = np.concatenate([arr, arr[:, ::-1]], axis=0)
    codes = np.unique(both[:, 0] * v + both[:, 1])
    rows = codes // v
    cols = codes % v
    indptr = np.zeros(v + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=v), out=indptr[1:])
    return Graph(v, indptr, cols)


def grid2d(height: int, width: int) -> Graph:
    """4-neighbor lattice on height x width nodes, row-major ids."""
    if height < 1 or width < 1:
        raise ValueError("grid dimensions must be positive")
    ids = np.arange(height * width).reshape(height, width)
    horiz = np.column_stack((ids[:, :-1].ravel(), ids[:, 1:].ravel()))
    vert = np.column_stack((ids[:-1, :].ravel(), ids[1:, :].ravel()))
    return build_from_edges(np.concatenate([horiz, vert]), height * width)


def ring(v: int) -> Graph:
    """Cycle graph on v >= 2 nodes (v = 2 degenerates to a single edge)."""
    if v < 2:
        raise ValueError("ring needs at least two nodes")
    i = np.arange(v)
    return build_from_edges(np.column_stack((i, (i + 1) % v)), v)


def complete(v: int) -> Graph:
    if v < 1:
        raise ValueError("complete graph needs a positive node count")
    iu = np.triu_indices(v, k=1)
    return build_from_edges(np.column_stack(iu), v)


def star(v: int) -> Graph:
    """Hub node 0 connected to v - 1 spokes."""
    if v < 1:
        raise ValueError("star needs a positive node count")
    spokes = np.arange(1, v)
    return build_from_edges(np.column_stack((np.zeros_like(spokes), spokes)), v)


def barbell(k: int) -> Graph:
    """Two k-cliques joined by a single bridge edge; 2k nodes."""
    if k < 1:
        raise ValueError("barbell clique size must be positive")
    iu = np.triu_indices(k, k=1)
    left = np.column_stack(iu)
    right = left + k
    bridge = np.array([[k - 1, k]])
    return build_from_edges(np.concatenate([left, right, bridge]), 2 * k)


_GENERATORS = {
    "grid": lambda a: grid2d(*a),
    "grid2d": lambda a: grid2d(*a),
    "ring": lambda a: ring(*a),
    "complete": lambda a: complete(*a),
    "star": lambda a: star(*a),
    "barbell": lambda a: barbell(*a),
}


def generate(spec: str) -> Graph:
    """Build a synthetic graph from a spec string like ``grid:10x10`` or ``ring:50``."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    if kind not in _GENERATORS:
        raise ValueError(f"unknown graph kind {kind!r}")
    parts = [p for p in re.split(r"[x,]", rest) if p != ""]
    try:
        args = tuple(int(p) for p in parts)
    except ValueError:
        raise ValueError(f"bad size parameters in graph spec {spec!r}") from None
    if not args:
        raise ValueError(f"graph spec {spec!r} is missing size parameters")
    return _GENERATORS[kind](args)


def normalized_operator(g: Graph) -> sparse.csr_matrix:
    """Symmetric propagation matrix D^{-1/2} (A + I) D^{-1/2} with the
    degree matrix taken after adding self-loops."""
    if g._norm_op is None:
        inv_sqrt = 1.0 / np.sqrt(g.degrees + 1.0)
        rows, cols = g.directed_pairs()
        diag = np.arange(g.node_count, dtype=np.int64)
        data = np.concatenate([inv_sqrt[rows] * inv_sqrt[cols], inv_sqrt * inv_sqrt])
        coo = sparse.coo_matrix(
            (data, (np.concatenate([rows, diag]), np.concatenate([cols, diag]))),
            shape=(g.node_count, g.node_count),
        )
        g._norm_op = coo.tocsr()
    return g._norm_op


def combinatorial_laplacian(g: Graph) -> sparse.csr_matrix:
    """L = D - A with integer degrees, float64 CSR."""
    if g._lap is None:
        deg = sparse.diags(g.degrees.astype(np.float64), format="csr")
        g._lap = (deg - g.adjacency()).tocsr()
    return g._lap


def connected_components(g: Graph) -> list[np.ndarray]:
    """Maximal connected components as sorted id arrays, ordered by smallest member."""
    n, labels = csgraph.connected_components(g.adjacency(), directed=False)
    comps = [np.flatnonzero(labels == c) for c in range(n)]
    comps.sort(key=lambda c: int(c[0]))
    return comps


def induced_subgraph(g: Graph, nodes: np.ndarray) -> Graph:
    """Subgraph on the given nodes, relabeled to dense 0-based ids.

    ``nodes`` must be sorted and unique; the relabeling is order-preserving,
    so features restrict by plain row indexing X[nodes].
    """
    nodes = np.asarray(nodes, dtype=np.int64)
    mask = np.zeros(g.node_count, dtype=bool)
    mask[nodes] = True
    lookup = np.full(g.node_count, -1, dtype=np.int64)
    lookup[nodes] = np.arange(nodes.size)
    rows, cols = g.directed_pairs()
    keep = mask[rows] & mask[cols]
    new_rows = lookup[rows[keep]]
    new_cols = lookup[cols[keep]]
    indptr = np.zeros(nodes.size + 1, dtype=np.int64)
    np.cumsum(np.bincount(new_rows, minlength=nodes.size), out=indptr[1:])
    return Graph(nodes.size, indptr, new_cols)


def spectral_radius(matrix, n_iter: int = 200, seed: int = 0) -> float:
    """Power-iteration estimate of the largest |eigenvalue| of a symmetric operator."""
    n = matrix.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(n_iter):
        y = matrix @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        lam = float(x @ y)
        x = y / norm
    return abs(lam)


def graph_hash(g: Graph) -> str:
    """Short stable digest of the edge set, used to label output files."""
    h = hashlib.sha256()
    h.update(str(g.node_count).encode())
    h.update(g.undirected_edges().tobytes())
    return h.hexdigest()[:12]
