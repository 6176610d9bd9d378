"""Vertex-transitive graph families with dense integer vertex codes.

Vertices are integers ``0 <= v < V``.  Each undirected edge is stored once in
canonical form and receives a canonical index in ``[0, E)``; that index is
what the edge randomness is keyed on.

Hypercube adjacency is never materialized: neighbours are ``v ^ (1 << i)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .rng import derive_seed, splitmix64

MAX_HYPERCUBE_DIM = 30
MAX_EDGES = 2**33

FAMILIES = ("hypercube", "hamming", "torus", "complete", "regular")


class GraphError(ValueError):
    """Invalid graph parameters."""


@dataclass(frozen=True)
class GraphSpec:
    """A graph family instance, e.g. ``GraphSpec("hamming", n=10, d=3)``.

    Round-trips through the config-string form ``family:k=v,k=v``.
    """

    family: str
    params: tuple = field(default=())

    def __init__(self, family: str, **params):
        family = family.lower()
        if family not in FAMILIES:
            raise GraphError(f"unknown graph family {family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", tuple(sorted((k, int(v)) for k, v in params.items())))

    def __getitem__(self, key):
        return dict(self.params)[key]

    def get(self, key, default=None):
        return dict(self.params).get(key, default)

    @classmethod
    def parse(cls, text: str) -> "GraphSpec":
        m = re.fullmatch(r"\s*([a-zA-Z]+)\s*:\s*(.*?)\s*", text)
        if not m:
            raise GraphError(f"cannot parse graph spec {text!r}; expected e.g. 'hypercube:m=20'")
        params = {}
        for part in filter(None, (s.strip() for s in m.group(2).split(","))):
            if "=" not in part:
                raise GraphError(f"bad parameter {part!r} in {text!r}")
            k, v = (s.strip() for s in part.split("=", 1))
            try:
                params[k] = int(v)
            except ValueError:
                raise GraphError(f"parameter {k} must be an integer, got {v!r}") from None
        return cls(m.group(1), **params)

    def __str__(self):
        order = _PARAM_ORDER[self.family]
        d = dict(self.params)
        return f"{self.family}:" + ",".join(f"{k}={d[k]}" for k in order if k in d)


_PARAM_ORDER = {
    "hypercube": ("m",),
    "hamming": ("n", "d"),
    "torus": ("n", "d"),
    "complete": ("n",),
    "regular": ("n", "m", "seed"),
}


@dataclass(frozen=True)
class EdgeRef:
    """Directed edge ``tail -> neighbors(tail)[direction]``."""

    tail: int
    direction: int


# --- endpoint kernels -------------------------------------------------------

@nb.njit(cache=True)
def _hypercube_endpoints(m, idx):
    half = np.int64(1) << (m - 1)
    u = np.empty(idx.shape[0], dtype=np.int64)
    v = np.empty(idx.shape[0], dtype=np.int64)
    for k in range(idx.shape[0]):
        e = idx[k]
        i = e // half
        c = e - i * half
        low = c & ((np.int64(1) << i) - 1)
        high = c >> i
        a = low | (high << (i + 1))
        u[k] = a
        v[k] = a | (np.int64(1) << i)
    return u, v


@nb.njit(cache=True)
def _torus_endpoints(n, d, idx):
    V = n**d
    u = np.empty(idx.shape[0], dtype=np.int64)
    v = np.empty(idx.shape[0], dtype=np.int64)
    for k in range(idx.shape[0]):
        e = idx[k]
        i = e // V
        a = e - i * V
        w = np.int64(n) ** i
        digit = (a // w) % n
        u[k] = a
        v[k] = a + w if digit < n - 1 else a - (n - 1) * w
    return u, v


@nb.njit(cache=True)
def _pair_decode(c):
    # c = b*(b-1)/2 + a with 0 <= a < b
    b = np.int64((1.0 + math.sqrt(1.0 + 8.0 * c)) / 2.0)
    while b * (b - 1) // 2 > c:
        b -= 1
    while (b + 1) * b // 2 <= c:
        b += 1
    return c - b * (b - 1) // 2, b


@nb.njit(cache=True)
def _complete_endpoints(idx):
    u = np.empty(idx.shape[0], dtype=np.int64)
    v = np.empty(idx.shape[0], dtype=np.int64)
    for k in range(idx.shape[0]):
        a, b = _pair_decode(idx[k])
        u[k] = a
        v[k] = b
    return u, v


@nb.njit(cache=True)
def _hamming_endpoints(n, d, idx):
    P = n * (n - 1) // 2
    rest = np.int64(n) ** (d - 1)
    u = np.empty(idx.shape[0], dtype=np.int64)
    v = np.empty(idx.shape[0], dtype=np.int64)
    for k in range(idx.shape[0]):
        e = idx[k]
        pair = e % P
        q = e // P
        r = q % rest
        i = q // rest
        a, b = _pair_decode(pair)
        w = np.int64(n) ** i
        low = r % w
        high = r // w
        base = low + high * w * n
        u[k] = base + a * w
        v[k] = base + b * w
    return u, v


@nb.njit(cache=True)
def _random_regular_pairs(n, m, seed):
    """Pairing model with pair-level rejection of loops and multi-edges.

    Returns (u, v) arrays of the E = n*m/2 edges, or empty arrays when the
    pairing got stuck (caller restarts with the next attempt seed).
    """
    E = n * m // 2
    points = np.empty(n * m, dtype=np.int64)
    for x in range(n):
        for j in range(m):
            points[x * m + j] = x
    adj = -np.ones((n, m), dtype=np.int64)
    deg = np.zeros(n, dtype=np.int64)
    us = np.empty(E, dtype=np.int64)
    vs = np.empty(E, dtype=np.int64)
    remaining = n * m
    ctr = np.uint64(0)
    key = splitmix64(np.uint64(seed))
    k = 0
    fails = 0
    while remaining > 0:
        ctr += np.uint64(1)
        h1 = splitmix64(key ^ (ctr * np.uint64(0x9E3779B97F4A7C15)))
        h2 = splitmix64(h1 ^ np.uint64(0xD1B54A32D192ED03))
        i = np.int64(h1 % np.uint64(remaining))
        j = np.int64(h2 % np.uint64(remaining))
        a = points[i]
        b = points[j]
        ok = i != j and a != b
        if ok:
            for t in range(deg[a]):
                if adj[a, t] == b:
                    ok = False
                    break
        if not ok:
            fails += 1
            if fails > 64 * remaining + 1000:
                # exhaustive check for any admissible pair among the leftovers
                found = False
                for s in range(remaining):
                    for t in range(s + 1, remaining):
                        x = points[s]
                        y = points[t]
                        if x == y:
                            continue
                        dup = False
                        for q in range(deg[x]):
                            if adj[x, q] == y:
                                dup = True
                                break
                        if not dup:
                            found = True
                            break
                    if found:
                        break
                if not found:
                    return us[:0], vs[:0]
                fails = 0
            continue
        fails = 0
        adj[a, deg[a]] = b
        deg[a] += 1
        adj[b, deg[b]] = a
        deg[b] += 1
        us[k] = min(a, b)
        vs[k] = max(a, b)
        k += 1
        # remove the two points (larger index first)
        hi = max(i, j)
        lo = min(i, j)
        points[hi] = points[remaining - 1]
        remaining -= 1
        points[lo] = points[remaining - 1]
        remaining -= 1
    return us, vs


# --- graph classes ----------------------------------------------------------

class TransitiveGraph:
    """Common interface; instances are immutable after construction."""

    spec: GraphSpec
    V: int
    degree: int
    edge_count: int

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec} V={self.V} degree={self.degree} E={self.edge_count}>"

    def _check_vertex(self, v):
        if not 0 <= v < self.V:
            raise IndexError(f"vertex {v} outside [0, {self.V})")

    def neighbors(self, v: int) -> np.ndarray:
        raise NotImplementedError

    def endpoints(self, idx) -> tuple[np.ndarray, np.ndarray]:
        """Endpoints ``(u, v)`` with ``u < v`` of canonical edges ``idx``."""
        raise NotImplementedError

    def edge_index(self, ref: EdgeRef) -> int:
        """Canonical index of the undirected edge ``ref`` (either orientation)."""
        self._check_vertex(ref.tail)
        if not 0 <= ref.direction < self.degree:
            raise IndexError(f"direction {ref.direction} outside [0, {self.degree})")
        return self._edge_index(ref.tail, int(self.neighbors(ref.tail)[ref.direction]))

    def _edge_index(self, a: int, b: int) -> int:
        raise NotImplementedError

    def edge_ref(self, index: int) -> EdgeRef:
        """Canonical ``EdgeRef`` of edge ``index``."""
        u, v = self.endpoints(np.array([index], dtype=np.int64))
        u, v = int(u[0]), int(v[0])
        for tail, head in ((u, v), (v, u)):
            nb_ = self.neighbors(tail)
            for direction, w in enumerate(nb_):
                if w == head and self.is_canonical(EdgeRef(tail, direction)):
                    return EdgeRef(tail, direction)
        raise AssertionError("no canonical orientation")  # pragma: no cover

    def is_canonical(self, ref: EdgeRef) -> bool:
        return ref.tail < int(self.neighbors(ref.tail)[ref.direction])

    def canonical_edges(self):
        """Iterate over canonical ``EdgeRef``s (small graphs)."""
        for v in range(self.V):
            for direction in range(self.degree):
                ref = EdgeRef(v, direction)
                if self.is_canonical(ref):
                    yield ref

    def all_edges(self) -> tuple[np.ndarray, np.ndarray]:
        return self.endpoints(np.arange(self.edge_count, dtype=np.int64))

    def graph_distance(self, x: int, y: int) -> int:
        self._check_vertex(x)
        self._check_vertex(y)
        return self._distance(x, y)

    def _distance(self, x, y):
        # BFS on the full graph
        if x == y:
            return 0
        dist = {x: 0}
        frontier = [x]
        while frontier:
            nxt = []
            for a in frontier:
                for b in self.neighbors(a):
                    b = int(b)
                    if b not in dist:
                        dist[b] = dist[a] + 1
                        if b == y:
                            return dist[b]
                        nxt.append(b)
            frontier = nxt
        return -1

    def memory_estimate(self, buffers: int = 6) -> int:
        """Rough peak bytes of one replicate.

        ``buffers`` int64 arrays per vertex plus about 48 bytes per open edge
        near criticality (index, value, endpoints and a sorted copy), with
        roughly ``V / 2`` open edges.
        """
        return 8 * self.V * buffers + 24 * self.V


class Hypercube(TransitiveGraph):
    def __init__(self, m: int):
        if not 1 <= m <= MAX_HYPERCUBE_DIM:
            raise GraphError(f"hypercube dimension must be in [1, {MAX_HYPERCUBE_DIM}], got {m}")
        self.spec = GraphSpec("hypercube", m=m)
        self.m = m
        self.V = 1 << m
        self.degree = m
        self.edge_count = m << (m - 1)

    def neighbors(self, v):
        self._check_vertex(v)
        return np.array([v ^ (1 << i) for i in range(self.m)], dtype=np.int64)

    def is_canonical(self, ref):
        return not (ref.tail >> ref.direction) & 1

    def _edge_index(self, a, b):
        x = a ^ b
        i = x.bit_length() - 1
        lo = min(a, b)
        c = (lo & ((1 << i) - 1)) | ((lo >> (i + 1)) << i)
        return (i << (self.m - 1)) + c

    def endpoints(self, idx):
        return _hypercube_endpoints(self.m, np.asarray(idx, dtype=np.int64))

    def _distance(self, x, y):
        return bin(x ^ y).count("1")


class Torus(TransitiveGraph):
    def __init__(self, n: int, d: int):
        if n < 3:
            raise GraphError(f"torus side must be >= 3 (no multi-edges), got n={n}")
        if d < 1:
            raise GraphError(f"torus dimension must be >= 1, got d={d}")
        self.spec = GraphSpec("torus", n=n, d=d)
        self.n, self.d = n, d
        self.V = n**d
        self.degree = 2 * d
        self.edge_count = d * self.V
        if self.edge_count > MAX_EDGES:
            raise GraphError(f"{self.spec} has {self.edge_count} edges > {MAX_EDGES}")

    def digits(self, v):
        return [(v // self.n**i) % self.n for i in range(self.d)]

    def encode(self, digits):
        return sum(int(x) * self.n**i for i, x in enumerate(digits))

    def neighbors(self, v):
        self._check_vertex(v)
        out = []
        for i in range(self.d):
            w = self.n**i
            digit = (v // w) % self.n
            out.append(v + w if digit < self.n - 1 else v - (self.n - 1) * w)
            out.append(v - w if digit > 0 else v + (self.n - 1) * w)
        return np.array(out, dtype=np.int64)

    def is_canonical(self, ref):
        return ref.direction % 2 == 0

    def _edge_index(self, a, b):
        for i in range(self.d):
            w = self.n**i
            da, db = (a // w) % self.n, (b // w) % self.n
            if da != db:
                if (da + 1) % self.n == db:
                    return i * self.V + a
                return i * self.V + b
        raise ValueError(f"{a} and {b} are not adjacent")

    def endpoints(self, idx):
        u, v = _torus_endpoints(self.n, self.d, np.asarray(idx, dtype=np.int64))
        return np.minimum(u, v), np.maximum(u, v)

    def _distance(self, x, y):
        return sum(min(abs(a - b), self.n - abs(a - b)) for a, b in zip(self.digits(x), self.digits(y)))


class Hamming(TransitiveGraph):
    """Product of ``d`` complete graphs ``K_n``."""

    def __init__(self, n: int, d: int):
        if n < 2 or d < 1:
            raise GraphError(f"hamming graph needs n >= 2, d >= 1, got n={n}, d={d}")
        self.spec = GraphSpec("hamming", n=n, d=d)
        self.n, self.d = n, d
        self.V = n**d
        self.degree = d * (n - 1)
        self.edge_count = self.V * self.degree // 2
        if self.edge_count > MAX_EDGES:
            raise GraphError(f"{self.spec} has {self.edge_count} edges > {MAX_EDGES}")

    def digits(self, v):
        return [(v // self.n**i) % self.n for i in range(self.d)]

    def neighbors(self, v):
        self._check_vertex(v)
        out = []
        for i in range(self.d):
            w = self.n**i
            a = (v // w) % self.n
            for s in range(1, self.n):
                out.append(v + (((a + s) % self.n) - a) * w)
        return np.array(out, dtype=np.int64)

    def is_canonical(self, ref):
        i, s = divmod(ref.direction, self.n - 1)
        a = (ref.tail // self.n**i) % self.n
        return a + s + 1 < self.n

    def _edge_index(self, a, b):
        for i in range(self.d):
            w = self.n**i
            da, db = (a // w) % self.n, (b // w) % self.n
            if da != db:
                lo, hi = min(da, db), max(da, db)
                low = a % w
                high = a // (w * self.n)
                r = low + high * w
                P = self.n * (self.n - 1) // 2
                return ((i * self.n ** (self.d - 1) + r) * P) + hi * (hi - 1) // 2 + lo
        raise ValueError(f"{a} and {b} are not adjacent")

    def endpoints(self, idx):
        return _hamming_endpoints(self.n, self.d, np.asarray(idx, dtype=np.int64))

    def _distance(self, x, y):
        return sum(a != b for a, b in zip(self.digits(x), self.digits(y)))


class Complete(TransitiveGraph):
    def __init__(self, n: int):
        if n < 2:
            raise GraphError(f"complete graph needs n >= 2, got {n}")
        self.spec = GraphSpec("complete", n=n)
        self.n = n
        self.V = n
        self.degree = n - 1
        self.edge_count = n * (n - 1) // 2
        if self.edge_count > MAX_EDGES:
            raise GraphError(f"{self.spec} has {self.edge_count} edges > {MAX_EDGES}")

    def neighbors(self, v):
        self._check_vertex(v)
        return (v + 1 + np.arange(self.n - 1, dtype=np.int64)) % self.n

    def is_canonical(self, ref):
        return ref.tail + ref.direction + 1 < self.n

    def _edge_index(self, a, b):
        lo, hi = min(a, b), max(a, b)
        return hi * (hi - 1) // 2 + lo

    def endpoints(self, idx):
        return _complete_endpoints(np.asarray(idx, dtype=np.int64))

    def _distance(self, x, y):
        return int(x != y)


class RandomRegular(TransitiveGraph):
    """Uniform-ish simple ``m``-regular graph on ``n`` vertices (not transitive).

    Girth is not checked; see ``girth_status``.
    """

    girth_status = "unchecked"

    def __init__(self, n: int, m: int, seed: int = 0):
        if m < 1 or m >= n:
            raise GraphError(f"random regular graph needs 1 <= degree < vertices, got n={n}, m={m}")
        if (n * m) % 2:
            raise GraphError(f"n*m must be even, got n={n}, m={m}")
        self.spec = GraphSpec("regular", n=n, m=m, seed=seed)
        self.V = n
        self.degree = m
        self.edge_count = n * m // 2
        for attempt in range(1000):
            u, v = _random_regular_pairs(n, m, np.uint64(derive_seed(seed, "regular", attempt)))
            if u.shape[0] == self.edge_count:
                break
        else:  # pragma: no cover
            raise GraphError(f"pairing model failed for n={n}, m={m}")
        order = np.lexsort((v, u))
        self._u = u[order]
        self._v = v[order]
        # adjacency sorted by neighbour
        both_a = np.concatenate([self._u, self._v])
        both_b = np.concatenate([self._v, self._u])
        order = np.lexsort((both_b, both_a))
        self._adj = both_b[order].reshape(n, m)
        self._adj.setflags(write=False)
        self._u.setflags(write=False)
        self._v.setflags(write=False)

    def neighbors(self, v):
        self._check_vertex(v)
        return self._adj[v].copy()

    def _edge_index(self, a, b):
        lo, hi = min(a, b), max(a, b)
        start = np.searchsorted(self._u, lo, side="left")
        stop = np.searchsorted(self._u, lo, side="right")
        k = start + np.searchsorted(self._v[start:stop], hi)
        if k >= stop or self._v[k] != hi:
            raise ValueError(f"{a} and {b} are not adjacent")
        return int(k)

    def endpoints(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return self._u[idx], self._v[idx]

    def adjacency(self) -> np.ndarray:
        return self._adj


def build(spec) -> TransitiveGraph:
    """Construct a graph from a ``GraphSpec`` or its config string."""
    if isinstance(spec, str):
        spec = GraphSpec.parse(spec)
    p = dict(spec.params)
    try:
        if spec.family == "hypercube":
            return Hypercube(p["m"])
        if spec.family == "hamming":
            return Hamming(p["n"], p["d"])
        if spec.family == "torus":
            return Torus(p["n"], p["d"])
        if spec.family == "complete":
            return Complete(p["n"])
        if spec.family == "regular":
            return RandomRegular(p["n"], p["m"], p.get("seed", 0))
    except KeyError as exc:
        raise GraphError(f"{spec.family} graph is missing parameter {exc.args[0]!r}") from None
    raise GraphError(f"unknown family {spec.family!r}")  # pragma: no cover
