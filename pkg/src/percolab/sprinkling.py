"""Two-round sprinkling: ``G_p`` as the union of independent ``G_{p1}`` and ``G_{p2}``.

The first round produces many large clusters; the second, much sparser
round is expected to merge them into one giant component.  The boundary
experiment measures how many closed edges separate two halves of the large
clusters, which is what makes the merging likely.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .engine import Configuration, closed_boundary_edges, decompose_edges
from .estimators import k0_threshold
from .graphs import TransitiveGraph
from .parallel import map_replicates, replicate_seeds
from .rng import EdgeRandomness, derive_seed


class NothingToPartition(ValueError):
    pass


@dataclass(frozen=True)
class SprinklePlan:
    epsilon: float
    theta: float
    p: float
    p1: float
    p2: float
    k0: int

    @classmethod
    def make(cls, g: TransitiveGraph, p_hat_c: float, epsilon: float, theta: float) -> "SprinklePlan":
        if not 0 < theta < 1 / 3:
            raise ValueError(f"theta must lie in (0, 1/3), got {theta}")
        if not 0 < epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
        p = p_hat_c * (1 + epsilon)
        if not 0 < p <= 1:
            raise ValueError(f"target p = {p} outside (0, 1]")
        p2 = theta * epsilon / g.degree
        if p2 >= p:
            raise ValueError(f"p2 = {p2} >= p = {p}: theta too large for epsilon")
        p1 = (p - p2) / (1 - p2)
        return cls(epsilon, theta, p, p1, p2, k0_threshold(epsilon, g.V))

    @property
    def composed(self) -> float:
        """``p1 + (1 - p1) p2``, equal to ``p`` up to rounding."""
        return self.p1 + (1 - self.p1) * self.p2


def plan(g, p_hat_c, epsilon, theta) -> SprinklePlan:
    return SprinklePlan.make(g, p_hat_c, epsilon, theta)


@dataclass
class SprinkleOutcome:
    seed: int
    Z_at_p1: int
    C1_at_p1: int
    C1_after: int
    merge_fraction: float  # C1_after / Z_at_p1 (nan if Z_at_p1 == 0)
    union_open_edges: int
    boundary_closed_edges: int | None  # None if fewer than 2 clusters >= k0
    ratio: float | None

    def as_dict(self):
        return asdict(self)


def balanced_partition(sizes: np.ndarray, k0: int) -> tuple[np.ndarray, np.ndarray]:
    """Split the ranks of clusters of size >= k0 into two groups of near-equal volume.

    Clusters are taken in decreasing size (rank order, which breaks ties by
    smallest vertex) and each goes to the currently lighter side.
    """
    big = np.flatnonzero(sizes >= k0)
    if big.size < 2:
        raise NothingToPartition(f"nothing to partition: {big.size} cluster(s) of size >= {k0}")
    side = np.zeros(big.size, dtype=np.int8)
    w = [0, 0]
    for i, r in enumerate(big):
        s = 0 if w[0] <= w[1] else 1
        side[i] = s
        w[s] += int(sizes[r])
    return big[side == 0], big[side == 1]


def _boundary(g, plan_, conf, decomp):
    left, right = balanced_partition(decomp.sizes, plan_.k0)
    inL = np.isin(decomp.component_id, left)
    inR = np.isin(decomp.component_id, right)
    count = closed_boundary_edges(g, None, plan_.p1, np.flatnonzero(inL), np.flatnonzero(inR), conf=conf)
    return count, count / (plan_.epsilon**2 * g.degree * g.V)


def boundary_experiment(g: TransitiveGraph, plan_: SprinklePlan, seed: int) -> tuple[int, float]:
    """Closed edges between two balanced halves of the large ``p1``-clusters.

    Returns ``(count, count / (eps**2 m V))``.
    """
    r1 = EdgeRandomness(derive_seed(seed, 0), g.edge_count)
    conf = Configuration(g, r1, plan_.p1)
    return _boundary(g, plan_, conf, decompose_edges(g.V, conf.u, conf.v, plan_.p1))


def run(g: TransitiveGraph, plan_: SprinklePlan, seed: int) -> SprinkleOutcome:
    r1 = EdgeRandomness(derive_seed(seed, 0), g.edge_count)
    r2 = EdgeRandomness(derive_seed(seed, 1), g.edge_count)
    conf1 = Configuration(g, r1, plan_.p1)
    d1 = decompose_edges(g.V, conf1.u, conf1.v, plan_.p1)
    Z = int(d1.sizes[d1.sizes >= plan_.k0].sum())
    idx2, _ = r2.open_edges(plan_.p2)
    idx = np.union1d(conf1.index, idx2)
    u, v = g.endpoints(idx)
    du = decompose_edges(g.V, u, v, plan_.p)
    try:
        count, ratio = _boundary(g, plan_, conf1, d1)
    except NothingToPartition:
        count, ratio = None, None
    return SprinkleOutcome(
        seed=int(seed),
        Z_at_p1=Z,
        C1_at_p1=d1.C1,
        C1_after=du.C1,
        merge_fraction=du.C1 / Z if Z else math.nan,
        union_open_edges=int(idx.size),
        boundary_closed_edges=count,
        ratio=ratio,
    )


def _run_worker(g, s, plan_):
    return run(g, plan_, s)


def run_many(g, plan_: SprinklePlan, replicates: int, seed: int, workers: int = 1) -> list[SprinkleOutcome]:
    seeds = replicate_seeds(seed, "sprinkle", replicates)
    return map_replicates(_run_worker, g, seeds, workers, plan_=plan_)


def union_density_z(g, plan_: SprinklePlan, outcomes) -> float:
    """Standardized deviation of the mean union edge density from ``p``."""
    n = len(outcomes)
    E = g.edge_count
    dens = np.mean([o.union_open_edges for o in outcomes]) / E
    se = math.sqrt(plan_.p * (1 - plan_.p) / (E * n))
    return (dens - plan_.p) / se
