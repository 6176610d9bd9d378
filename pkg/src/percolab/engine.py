"""Bond percolation under the simultaneous coupling.

A configuration at ``p`` is the set of edges whose coupling value is below
``p``.  Clusters come from union-find (union by size, path halving); single
clusters and intrinsic balls come from BFS over a CSR of the open edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .graphs import Complete, TransitiveGraph
from .rng import EdgeRandomness


# --- kernels ----------------------------------------------------------------

@nb.njit(cache=True, inline="always")
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@nb.njit(cache=True)
def _union_all(V, u, v):
    parent = np.arange(V, dtype=np.int64)
    size = np.ones(V, dtype=np.int64)
    for k in range(u.shape[0]):
        a = _find(parent, u[k])
        b = _find(parent, v[k])
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
    return parent, size


@nb.njit(cache=True)
def _label(parent, size):
    """Component label per vertex, ordered by minimum vertex; plus sizes."""
    V = parent.shape[0]
    first = -np.ones(V, dtype=np.int64)
    label = np.empty(V, dtype=np.int64)
    comp_sizes = np.empty(V, dtype=np.int64)
    n = 0
    for x in range(V):
        r = _find(parent, x)
        if first[r] < 0:
            first[r] = n
            comp_sizes[n] = size[r]
            n += 1
        label[x] = first[r]
    return label, comp_sizes[:n]


@nb.njit(cache=True)
def _sweep_kernel(V, u, v, vals, grid, ks, want_c2, trace):
    """Add edges in order of value; report statistics at each grid point.

    Edges must be sorted by value.  At grid point p all edges with value < p
    have been added.
    """
    parent = np.arange(V, dtype=np.int64)
    size = np.ones(V, dtype=np.int64)
    G = grid.shape[0]
    nk = ks.shape[0]
    s2_out = np.empty(G, dtype=np.int64)
    c1_out = np.empty(G, dtype=np.int64)
    c2_out = np.empty(G, dtype=np.int64)
    z_out = np.empty((G, nk), dtype=np.int64)
    cnt = np.zeros(V + 1, dtype=np.int64)
    if want_c2:
        cnt[1] = V
    z = np.zeros(nk, dtype=np.int64)
    for j in range(nk):
        if ks[j] <= 1:
            z[j] = V
    s2 = np.int64(V)
    c1 = np.int64(1)
    n_events = 0
    tr_val = np.empty(V if trace else 0, dtype=np.float64)
    tr_s2 = np.empty(V if trace else 0, dtype=np.int64)
    tr_c1 = np.empty(V if trace else 0, dtype=np.int64)
    k = 0
    E = u.shape[0]
    for g in range(G):
        p = grid[g]
        while k < E and vals[k] < p:
            a = _find(parent, u[k])
            b = _find(parent, v[k])
            if a != b:
                sa = size[a]
                sb = size[b]
                if sa < sb:
                    a, b = b, a
                parent[b] = a
                ns = sa + sb
                size[a] = ns
                s2 += 2 * sa * sb
                if ns > c1:
                    c1 = ns
                if want_c2:
                    cnt[sa] -= 1
                    cnt[sb] -= 1
                    cnt[ns] += 1
                for j in range(nk):
                    kk = ks[j]
                    dz = 0
                    if ns >= kk:
                        dz += ns
                    if sa >= kk:
                        dz -= sa
                    if sb >= kk:
                        dz -= sb
                    z[j] += dz
                if trace:
                    tr_val[n_events] = vals[k]
                    tr_s2[n_events] = s2
                    tr_c1[n_events] = c1
                n_events += 1
            k += 1
        s2_out[g] = s2
        c1_out[g] = c1
        for j in range(nk):
            z_out[g, j] = z[j]
        if want_c2:
            if cnt[c1] >= 2:
                c2_out[g] = c1
            else:
                s = c1 - 1
                while s > 0 and cnt[s] == 0:
                    s -= 1
                c2_out[g] = s
        else:
            c2_out[g] = -1
    return s2_out, c1_out, c2_out, z_out, tr_val[:n_events], tr_s2[:n_events], tr_c1[:n_events]


@nb.njit(cache=True)
def _csr(V, u, v):
    deg = np.zeros(V + 1, dtype=np.int64)
    for k in range(u.shape[0]):
        deg[u[k] + 1] += 1
        deg[v[k] + 1] += 1
    for x in range(V):
        deg[x + 1] += deg[x]
    fill = deg[:-1].copy()
    nbr = np.empty(2 * u.shape[0], dtype=np.int64)
    for k in range(u.shape[0]):
        nbr[fill[u[k]]] = v[k]
        fill[u[k]] += 1
        nbr[fill[v[k]]] = u[k]
        fill[v[k]] += 1
    return deg, nbr


@nb.njit(cache=True)
def _bfs_cluster(indptr, nbr, V, start):
    seen = np.zeros((V + 63) // 64, dtype=np.uint64)
    queue = np.empty(V, dtype=np.int64)
    queue[0] = start
    seen[start >> 6] |= np.uint64(1) << np.uint64(start & 63)
    head = 0
    tail = 1
    while head < tail:
        x = queue[head]
        head += 1
        for t in range(indptr[x], indptr[x + 1]):
            y = nbr[t]
            w = y >> 6
            bit = np.uint64(1) << np.uint64(y & 63)
            if (seen[w] & bit) == 0:
                seen[w] |= bit
                queue[tail] = y
                tail += 1
    return queue[:tail]


# --- public API -------------------------------------------------------------

class Configuration:
    """The open subgraph of ``g`` at ``p`` under coupling ``rand``.

    Holds the open edges (``u < v``) and their coupling values, and builds
    the CSR adjacency lazily.
    """

    def __init__(self, g: TransitiveGraph, rand: EdgeRandomness, p: float):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        if rand.n_edges != g.edge_count:
            raise ValueError("edge randomness was built for a different edge count")
        self.g = g
        self.rand = rand
        self.p = float(p)
        self.index, self.values = rand.open_edges(self.p)
        self.u, self.v = g.endpoints(self.index)
        self._csr = None

    @classmethod
    def from_edges(cls, g, u, v, p=float("nan")):
        """Configuration with an explicit open-edge list (e.g. a union of layers)."""
        self = cls.__new__(cls)
        self.g, self.rand, self.p = g, None, p
        self.index = None
        self.values = None
        self.u = np.asarray(u, dtype=np.int64)
        self.v = np.asarray(v, dtype=np.int64)
        self._csr = None
        return self

    @property
    def n_open(self) -> int:
        return int(self.u.shape[0])

    @property
    def csr(self):
        if self._csr is None:
            self._csr = _csr(self.g.V, self.u, self.v)
        return self._csr


@dataclass
class ClusterDecomposition:
    """Components of one configuration.

    ``component_id[v]`` is the rank of v's component in ``sizes``; rank 0 is
    C1.  Components are ordered by size descending, then by smallest vertex.
    """

    component_id: np.ndarray
    sizes: np.ndarray
    p: float

    @property
    def C1(self) -> int:
        return int(self.sizes[0])

    @property
    def C2(self) -> int:
        return int(self.sizes[1]) if self.sizes.shape[0] > 1 else 0

    def size_of(self, v: int) -> int:
        return int(self.sizes[self.component_id[v]])

    def sum_sq(self) -> int:
        return int(np.sum(self.sizes.astype(np.int64) ** 2))

    def members(self, rank: int) -> np.ndarray:
        return np.flatnonzero(self.component_id == rank)


def decompose_edges(V: int, u, v, p: float = float("nan")) -> ClusterDecomposition:
    parent, size = _union_all(V, np.asarray(u, dtype=np.int64), np.asarray(v, dtype=np.int64))
    label, comp_sizes = _label(parent, size)
    # label order is ascending minimum vertex, so a stable sort on -size
    # gives the (size desc, min vertex asc) tie-break
    order = np.argsort(-comp_sizes, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.shape[0])
    return ClusterDecomposition(rank[label], comp_sizes[order], p)


def decompose(g: TransitiveGraph, rand: EdgeRandomness, p: float) -> ClusterDecomposition:
    """Cluster decomposition of the p-open subgraph."""
    conf = Configuration(g, rand, p)
    return decompose_edges(g.V, conf.u, conf.v, p)


@dataclass
class SweepResult:
    p_grid: np.ndarray
    sum_sq: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    ks: np.ndarray
    Z: np.ndarray  # shape (len(p_grid), len(ks))
    trace_values: np.ndarray | None = None
    trace_sum_sq: np.ndarray | None = None
    trace_C1: np.ndarray | None = None


def sweep(g: TransitiveGraph, rand: EdgeRandomness, p_grid, ks=(), want_c2=True, trace=False) -> SweepResult:
    """Statistics along an ascending grid of p from one pass over the edges.

    Only edges with value below ``max(p_grid)`` are generated and sorted.
    """
    grid = np.asarray(p_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("p_grid must be a non-empty 1-d sequence")
    if np.any(np.diff(grid) < 0):
        raise ValueError("p_grid must be ascending")
    if grid[0] < 0 or grid[-1] > 1:
        raise ValueError("p_grid must lie in [0, 1]")
    ks_arr = np.asarray(ks, dtype=np.int64).reshape(-1)
    if np.any(ks_arr < 1):
        raise ValueError("k must be >= 1")
    conf = Configuration(g, rand, float(grid[-1]))
    # every generated edge is below grid[-1], so the last grid point needs no
    # comparison (this also covers p = 1)
    kernel_grid = grid.copy()
    kernel_grid[-1] = 2.0
    if grid.size == 1 and not trace:
        u, v, vals = conf.u, conf.v, conf.values
    else:
        order = np.argsort(conf.values, kind="stable")
        u, v, vals = conf.u[order], conf.v[order], conf.values[order]
    s2, c1, c2, z, tv, ts, tc = _sweep_kernel(g.V, u, v, vals, kernel_grid, ks_arr, want_c2, trace)
    res = SweepResult(grid, s2, c1, c2 if want_c2 else None, ks_arr, z)
    if trace:
        res.trace_values, res.trace_sum_sq, res.trace_C1 = tv, ts, tc
    return res


def cluster_of(g: TransitiveGraph, rand: EdgeRandomness, p: float, v: int, conf: Configuration | None = None) -> np.ndarray:
    """Vertices of the p-open cluster of ``v`` (BFS order)."""
    g._check_vertex(v)
    if conf is None:
        conf = Configuration(g, rand, p)
    indptr, nbr = conf.csr
    return _bfs_cluster(indptr, nbr, g.V, int(v))


def count_at_least(decomp: ClusterDecomposition, k: int) -> int:
    """Z_{>=k}: number of vertices in components of size at least k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    s = decomp.sizes
    return int(s[s >= k].sum())


def edges_between(g: TransitiveGraph, A, B) -> int:
    """Number of edges of g with one endpoint in A and the other in B (A, B disjoint)."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if isinstance(g, Complete):
        return int(A.size) * int(B.size)
    inB = np.zeros(g.V, dtype=bool)
    inB[B] = True
    small, other = (A, inB)
    total = 0
    for chunk in np.array_split(small, max(1, small.size // 65536)):
        if chunk.size == 0:
            continue
        nbrs = neighbor_matrix(g, chunk)
        total += int(other[nbrs].sum())
    return total


def neighbor_matrix(g: TransitiveGraph, vertices: np.ndarray) -> np.ndarray:
    """Array of shape (len(vertices), degree) of neighbours."""
    from .graphs import Hypercube, RandomRegular

    vertices = np.asarray(vertices, dtype=np.int64)
    if isinstance(g, Hypercube):
        return vertices[:, None] ^ (np.int64(1) << np.arange(g.m, dtype=np.int64))[None, :]
    if isinstance(g, RandomRegular):
        return g.adjacency()[vertices]
    return np.stack([g.neighbors(int(x)) for x in vertices]) if vertices.size else np.empty((0, g.degree), np.int64)


def closed_boundary_edges(g: TransitiveGraph, rand: EdgeRandomness, p: float, A, B, conf: Configuration | None = None) -> int:
    """Edges with one endpoint in A, the other in B, and coupling value >= p."""
    A = np.unique(np.asarray(A, dtype=np.int64))
    B = np.unique(np.asarray(B, dtype=np.int64))
    if np.intersect1d(A, B).size:
        raise ValueError("A and B must be disjoint")
    if conf is None:
        conf = Configuration(g, rand, p)
    return edges_between(g, A, B) - open_edges_between(conf, A, B)


def open_edges_between(conf: Configuration, A, B) -> int:
    lab = np.zeros(conf.g.V, dtype=np.int8)
    lab[np.asarray(A, dtype=np.int64)] = 1
    lab[np.asarray(B, dtype=np.int64)] = 2
    a = lab[conf.u]
    b = lab[conf.v]
    return int(np.count_nonzero(a * b == 2))
