"""Intrinsic-metric exploration: balls, shells and survival events."""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .engine import Configuration
from .graphs import TransitiveGraph
from .rng import EdgeRandomness

MAX_RADIUS = 2**16


@nb.njit(cache=True)
def _bfs_levels(indptr, nbr, V, start, radius, forbidden, use_forbidden):
    seen = np.zeros((V + 63) // 64, dtype=np.uint64)
    order = np.empty(V, dtype=np.int64)
    starts = np.zeros(radius + 2, dtype=np.int64)
    order[0] = start
    seen[start >> 6] |= np.uint64(1) << np.uint64(start & 63)
    head = 0
    tail = 1
    starts[0] = 0
    starts[1] = 1
    depth = 0
    while depth < radius and head < tail:
        level_end = tail
        while head < level_end:
            x = order[head]
            head += 1
            for t in range(indptr[x], indptr[x + 1]):
                y = nbr[t]
                w = y >> 6
                bit = np.uint64(1) << np.uint64(y & 63)
                if (seen[w] & bit) != 0:
                    continue
                if use_forbidden and (forbidden[w] & bit) != 0:
                    continue
                seen[w] |= bit
                order[tail] = y
                tail += 1
        depth += 1
        starts[depth + 1] = tail
    for d in range(depth + 2, radius + 2):
        starts[d] = tail
    return order[:tail], starts


def _bitset(V, vertices):
    bits = np.zeros((V + 63) // 64, dtype=np.uint64)
    vertices = np.asarray(vertices, dtype=np.int64)
    if vertices.size:
        np.bitwise_or.at(bits, vertices >> 6, np.left_shift(np.uint64(1), (vertices & 63).astype(np.uint64)))
    return bits


@dataclass
class BallProfile:
    """Intrinsic ball ``B_x(r)`` split into shells by exact distance."""

    center: int
    radius: int
    shell_sizes: np.ndarray
    vertices: np.ndarray  # BFS order: shell t is vertices[offsets[t]:offsets[t+1]]
    offsets: np.ndarray
    forbidden: np.ndarray | None = None

    @property
    def total(self) -> int:
        return int(self.shell_sizes.sum())

    @property
    def survived(self) -> bool:
        return bool(self.shell_sizes[self.radius] > 0)

    def shell(self, t: int) -> np.ndarray:
        return self.vertices[self.offsets[t]:self.offsets[t + 1]]


def ball(
    g: TransitiveGraph,
    rand: EdgeRandomness,
    p: float,
    x: int,
    r: int,
    forbidden=None,
    conf: Configuration | None = None,
) -> BallProfile:
    """BFS ball of intrinsic radius ``r`` around ``x``, optionally off ``forbidden``.

    With a forbidden set A the exploration never enters A, which is the ball
    in the configuration where every edge touching A is closed.
    """
    g._check_vertex(x)
    if r < 0:
        raise ValueError(f"radius must be >= 0, got {r}")
    if r > MAX_RADIUS:
        raise ValueError(f"radius {r} exceeds {MAX_RADIUS}; use cluster_of for full clusters")
    forb = None
    if forbidden is not None:
        forb = np.unique(np.asarray(list(forbidden) if not isinstance(forbidden, np.ndarray) else forbidden, dtype=np.int64))
        if np.any(forb == x):
            raise ValueError("center lies in the forbidden set")
    if conf is None:
        conf = Configuration(g, rand, p)
    indptr, nbr = conf.csr
    use = forb is not None and forb.size > 0
    bits = _bitset(g.V, forb) if use else np.zeros(1, dtype=np.uint64)
    order, starts = _bfs_levels(indptr, nbr, g.V, int(x), int(r), bits, use)
    shells = np.diff(starts)[: r + 1]
    return BallProfile(int(x), int(r), shells, order, starts, forb)


def survival_event(g, rand, p, x, r, conf=None) -> bool:
    """True iff some vertex lies at intrinsic distance exactly r from x."""
    return ball(g, rand, p, x, r, conf=conf).survived


def disjoint_survival(g, rand, p, x, y, jx, jy, conf=None) -> bool:
    """Both balls survive to their radii and are vertex-disjoint.

    Both balls are grown on the same, unrestricted configuration.
    """
    if x == y:
        raise ValueError("x and y must differ")
    if conf is None:
        conf = Configuration(g, rand, p)
    bx = ball(g, rand, p, x, jx, conf=conf)
    if not bx.survived:
        return False
    by = ball(g, rand, p, y, jy, conf=conf)
    if not by.survived:
        return False
    return np.intersect1d(bx.vertices, by.vertices, assume_unique=True).size == 0
