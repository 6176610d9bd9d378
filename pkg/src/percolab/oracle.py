"""Exact percolation quantities on small graphs by exhaustive enumeration.

All ``2**E`` configurations are enumerated once and bucketed by their number
of open edges, so every quantity becomes an explicit polynomial in ``p``:

    P_p(event) = sum_o N_o(event) p**o (1-p)**(E-o)
"""

from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from .graphs import TransitiveGraph

MAX_ORACLE_EDGES = 22


class OracleRefusal(ValueError):
    """Graph too large for exhaustive enumeration."""


@nb.njit(cache=True)
def _enumerate(V, u, v):
    E = u.shape[0]
    size_counts = np.zeros((E + 1, V + 1), dtype=np.int64)
    conn_counts = np.zeros((E + 1, V, V), dtype=np.int64)
    parent = np.empty(V, dtype=np.int64)
    root = np.empty(V, dtype=np.int64)
    for mask in range(1 << E):
        for x in range(V):
            parent[x] = x
        o = 0
        for e in range(E):
            if (mask >> e) & 1:
                o += 1
                a = u[e]
                while parent[a] != a:
                    a = parent[a]
                b = v[e]
                while parent[b] != b:
                    b = parent[b]
                if a != b:
                    parent[b] = a
        for x in range(V):
            r = x
            while parent[r] != r:
                r = parent[r]
            root[x] = r
        s0 = 0
        for x in range(V):
            if root[x] == root[0]:
                s0 += 1
        size_counts[o, s0] += 1
        for x in range(V):
            rx = root[x]
            for y in range(V):
                if root[y] == rx:
                    conn_counts[o, x, y] += 1
    return size_counts, conn_counts


def _weights(E, p):
    o = np.arange(E + 1)
    return p**o * (1.0 - p) ** (E - o)


def _dweights(E, p):
    o = np.arange(E + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(o > 0, o * p ** np.maximum(o - 1, 0), 0.0) * (1.0 - p) ** (E - o)
        b = np.where(E - o > 0, (E - o) * (1.0 - p) ** np.maximum(E - o - 1, 0), 0.0) * p**o
    return a - b


@dataclass
class MagnetizationPoint:
    p: float
    gamma: float
    M: float
    method: str
    std_error: float = 0.0
    replicates: int = 0


class ExactOracle:
    """Enumeration tables of one small graph; evaluate at any ``p``."""

    def __init__(self, g: TransitiveGraph):
        if g.edge_count > MAX_ORACLE_EDGES:
            raise OracleRefusal(f"{g.spec} has {g.edge_count} edges; exhaustive enumeration is limited to {MAX_ORACLE_EDGES}")
        self.g = g
        self.E = g.edge_count
        u, v = g.all_edges()
        self.size_counts, self.conn_counts = _enumerate(g.V, u, v)

    def cluster_law(self, p: float) -> np.ndarray:
        """``law[k] = P_p(|C(0)| = k)`` for ``k = 0..V`` (``law[0] = 0``)."""
        return _weights(self.E, p) @ self.size_counts

    def tau(self, p: float) -> np.ndarray:
        """Two-point function matrix ``P_p(x <-> y)``."""
        return np.tensordot(_weights(self.E, p), self.conn_counts, axes=1)

    def connection(self, p: float, x: int, y: int) -> float:
        return float(_weights(self.E, p) @ self.conn_counts[:, x, y])

    def chi(self, p: float) -> float:
        law = self.cluster_law(p)
        return float(np.arange(law.size) @ law)

    def nabla(self, p: float) -> np.ndarray:
        t = self.tau(p)
        return t @ t @ t

    def nabla_max(self, p: float) -> float:
        n = self.nabla(p)
        off = ~np.eye(n.shape[0], dtype=bool)
        return float(n[off].max())

    def magnetization(self, p: float, gamma: float) -> float:
        law = self.cluster_law(p)
        k = np.arange(law.size)
        return float((1.0 - (1.0 - gamma) ** k) @ law)

    def dM_dgamma(self, p: float, gamma: float) -> float:
        law = self.cluster_law(p)
        k = np.arange(law.size)
        return float((k * (1.0 - gamma) ** np.maximum(k - 1, 0)) @ law)

    def dM_dp(self, p: float, gamma: float) -> float:
        dlaw = _dweights(self.E, p) @ self.size_counts
        k = np.arange(dlaw.size)
        return float((1.0 - (1.0 - gamma) ** k) @ dlaw)


def exact_small_oracle(g_small: TransitiveGraph, p: float, gamma: float):
    """Exact magnetization point and cluster-size law at ``(p, gamma)``."""
    orc = ExactOracle(g_small)
    return MagnetizationPoint(p, gamma, orc.magnetization(p, gamma), "exact-enumeration"), orc.cluster_law(p)


class DerivativeDiagnostic(ArithmeticError):
    """Finite differences disagree with the exact polynomial derivative."""


@dataclass
class InequalityRow:
    p: float
    gamma: float
    M: float
    dM_dp: float
    dM_dgamma: float
    nabla_max: float
    alpha: float
    slack_ineq1: float
    slack_ineq2: float
    slack_rdi: float


def check_differential_inequalities(g_small, p_grid, gamma_grid, h=1e-5, oracle=None) -> list[InequalityRow]:
    """Slack of the three magnetization differential inequalities on a grid.

    Slack is ``rhs - lhs`` oriented so that a holding inequality has slack
    ``>= 0``.  Derivatives are central differences on the exact polynomial,
    cross-checked against its analytic derivative.
    """
    orc = oracle or ExactOracle(g_small)
    m = g_small.degree
    rows = []
    for p in p_grid:
        if not 0 < p < 1:
            raise ValueError("p grid must lie in (0, 1)")
        nmax = orc.nabla_max(p)
        for gamma in gamma_grid:
            if not 0 < gamma < 1:
                raise ValueError("gamma grid must lie in (0, 1)")
            M = orc.magnetization(p, gamma)
            Mp = (orc.magnetization(p + h, gamma) - orc.magnetization(p - h, gamma)) / (2 * h)
            Mg = (orc.magnetization(p, gamma + h) - orc.magnetization(p, gamma - h)) / (2 * h)
            for fd, exact in ((Mp, orc.dM_dp(p, gamma)), (Mg, orc.dM_dgamma(p, gamma))):
                if abs(fd - exact) > 1e-6 * max(1.0, abs(exact)):
                    raise DerivativeDiagnostic(f"finite difference {fd} vs exact {exact} at p={p}, gamma={gamma}")
            mp = m * p
            alpha = (1 - 2 * p) ** 2 - (1 + mp + 2 * mp**2) * nmax - mp * M - mp**2 * M**2
            s1 = m * (1 - gamma) * M * Mg - (1 - p) * Mp
            rhs2 = gamma * Mg + (0.5 * mp * M**2 + gamma * M) + (0.5 * mp * M + gamma) * p * Mp
            s2 = rhs2 - M
            rhs3 = mp * (gamma + (1 - gamma) * 0.5 * m * (m - 1) * p**2 * alpha * M**2) * Mg
            s3 = M - rhs3
            rows.append(InequalityRow(p, gamma, M, Mp, Mg, nmax, alpha, s1, s2, s3))
    return rows
