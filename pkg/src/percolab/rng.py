"""Counter-based randomness for the simultaneous coupling.

Every edge ``e`` of a graph receives a value ``U(e)`` in ``[0, 1)`` that is a
pure function of ``(root_seed, e)``.  Edge ``e`` is ``p``-open iff
``U(e) < p``, so configurations at different ``p`` are nested.

Edge indices are split into blocks of ``BLOCK`` consecutive indices.  Inside a
block the values are produced as ascending order statistics (Renyi's
exponential-spacings representation) and each order statistic is assigned a
uniformly random free position of the block.  The joint law is that of
i.i.d. uniforms, but listing the edges with ``U(e) < p`` costs time
proportional to their number instead of to the number of edges.  This is what
makes ``Complete(10**5)`` (5e9 edges) usable at ``p = O(1/n)``.
"""

from __future__ import annotations

import numba as nb
import numpy as np

BLOCK = 4096
_MASK_WORDS = BLOCK // 64

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)


@nb.njit(cache=True, inline="always")
def splitmix64(x):
    z = x + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True)
def mix(a, b):
    """Combine two 64-bit words into one well-mixed word."""
    return splitmix64(splitmix64(np.uint64(a)) ^ np.uint64(b))


@nb.njit(cache=True, inline="always")
def _unit(h):
    # 53-bit uniform in (0, 1]
    return (float(h >> np.uint64(11)) + 1.0) * 1.1102230246251565e-16


@nb.njit(cache=True)
def _block_key(seed, block):
    return splitmix64(splitmix64(np.uint64(seed)) ^ splitmix64(np.uint64(block) + np.uint64(0x632BE59BD9B4E019)))


@nb.njit(cache=True)
def _open_edges_kernel(seed, n_edges, p, out_idx, out_val):
    """Write every edge with value < p into the output buffers.

    Returns the number written, or -1 when the buffers are too small.
    """
    if p <= 0.0:
        return 0
    n_blocks = (n_edges + BLOCK - 1) // BLOCK
    mask = np.zeros(_MASK_WORDS, dtype=np.uint64)
    count = 0
    cap = out_idx.shape[0]
    for b in range(n_blocks):
        size = min(BLOCK, n_edges - b * BLOCK)
        key = _block_key(seed, b)
        s = 0.0
        pos_ctr = np.uint64(0)
        touched = False
        for i in range(size):
            e = _unit(splitmix64(key ^ (np.uint64(2 * i + 1) * _GOLDEN)))
            s += -np.log(e) / (size - i)
            u = -np.expm1(-s)
            if u >= p:
                break
            if not touched:
                mask[:] = 0
                touched = True
            while True:
                pos_ctr += np.uint64(1)
                h = splitmix64(key ^ (pos_ctr * _M1) ^ np.uint64(0xD1B54A32D192ED03))
                pos = int(_unit(h) * size)
                if pos >= size:
                    pos = size - 1
                w = pos >> 6
                bit = np.uint64(1) << np.uint64(pos & 63)
                if (mask[w] & bit) == 0:
                    mask[w] |= bit
                    break
            if count >= cap:
                return -1
            out_idx[count] = b * BLOCK + pos
            out_val[count] = u
            count += 1
    return count


@nb.njit(cache=True)
def _value_kernel(seed, n_edges, edge):
    b = edge // BLOCK
    target = edge - b * BLOCK
    size = min(BLOCK, n_edges - b * BLOCK)
    key = _block_key(seed, b)
    mask = np.zeros(_MASK_WORDS, dtype=np.uint64)
    s = 0.0
    pos_ctr = np.uint64(0)
    for i in range(size):
        e = _unit(splitmix64(key ^ (np.uint64(2 * i + 1) * _GOLDEN)))
        s += -np.log(e) / (size - i)
        u = -np.expm1(-s)
        while True:
            pos_ctr += np.uint64(1)
            h = splitmix64(key ^ (pos_ctr * _M1) ^ np.uint64(0xD1B54A32D192ED03))
            pos = int(_unit(h) * size)
            if pos >= size:
                pos = size - 1
            w = pos >> 6
            bit = np.uint64(1) << np.uint64(pos & 63)
            if (mask[w] & bit) == 0:
                mask[w] |= bit
                break
        if pos == target:
            return u
    return 1.0  # unreachable


_MASK = 0xFFFFFFFFFFFFFFFF


def _splitmix64_py(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(root_seed: int, *tags) -> int:
    """Deterministic child seed from a root seed and a sequence of int/str tags.

    Same arithmetic as ``mix``, done on Python ints so that no jit dispatch
    on integer signedness is involved.
    """
    h = int(root_seed) & _MASK
    for tag in tags:
        if isinstance(tag, str):
            t = 0
            for ch in tag.encode():
                t = (t * 1099511628211 + ch) & _MASK
            tag = t
        h = _splitmix64_py(_splitmix64_py(h) ^ (int(tag) & _MASK))
    return h


class EdgeRandomness:
    """Pure map ``edge index -> U(edge)`` for one root seed.

    Parameters
    ----------
    root_seed : int
        64-bit seed; any Python int is reduced modulo 2**64.
    n_edges : int
        Number of edges of the graph the values are attached to.  The block
        layout depends on it, so the same seed on graphs with different edge
        counts gives unrelated values.
    """

    def __init__(self, root_seed: int, n_edges: int):
        self.root_seed = int(root_seed) & 0xFFFFFFFFFFFFFFFF
        self.n_edges = int(n_edges)

    def __repr__(self):
        return f"EdgeRandomness(root_seed={self.root_seed}, n_edges={self.n_edges})"

    def value(self, edge: int) -> float:
        if not 0 <= edge < self.n_edges:
            raise IndexError(f"edge index {edge} outside [0, {self.n_edges})")
        return float(_value_kernel(np.uint64(self.root_seed), self.n_edges, int(edge)))

    def values(self) -> np.ndarray:
        """All edge values in index order (small graphs only)."""
        idx, val = self.open_edges(1.0)
        out = np.empty(self.n_edges)
        out[idx] = val
        return out

    def open_edges(self, p: float) -> tuple[np.ndarray, np.ndarray]:
        """Indices and values of all edges with ``U(e) < p``, unsorted."""
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        if p >= 1.0:
            p = np.nextafter(1.0, 2.0)  # every u < 1 is open
        mean = p * self.n_edges
        cap = int(mean + 8.0 * np.sqrt(mean + 1.0) + 64)
        cap = min(cap, self.n_edges)
        while True:
            idx = np.empty(cap, dtype=np.int64)
            val = np.empty(cap, dtype=np.float64)
            n = _open_edges_kernel(np.uint64(self.root_seed), self.n_edges, float(p), idx, val)
            if n >= 0:
                return idx[:n], val[:n]
            cap = min(2 * cap, self.n_edges)
