"""Monte Carlo estimators of percolation observables.

Every estimator takes a root seed and a replicate count; replicate ``j``
uses ``derive_seed(seed, <estimator tag>, j)`` so estimators that share a
tag share their configurations (this is how ``estimate_pc`` keeps its
probes coupled).
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .engine import Configuration, cluster_of, decompose_edges, sweep
from .graphs import TransitiveGraph
from .intrinsic import ball
from .oracle import MagnetizationPoint
from .parallel import map_replicates, replicate_seeds
from .rng import EdgeRandomness, derive_seed

CONFIG_TAG = "config"  # replicate stream shared by all single-layer estimators


@dataclass
class EstimateReport:
    name: str
    graph: str
    p: float
    replicates: int
    mean: float
    std_error: float
    seed: int
    elapsed_s: float
    gamma: float | None = None
    k: int | None = None
    r: int | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, name, g, p, samples, seed, started, **kw):
        x = np.asarray(samples, dtype=np.float64)
        if x.size < 2:
            raise ValueError("need at least 2 replicates")
        return cls(
            name=name,
            graph=str(g.spec),
            p=float(p),
            replicates=int(x.size),
            mean=float(x.mean()),
            std_error=float(x.std(ddof=1) / math.sqrt(x.size)),
            seed=int(seed),
            elapsed_s=time.perf_counter() - started,
            **kw,
        )

    def as_dict(self):
        return asdict(self)


def _rand(g, s):
    return EdgeRandomness(s, g.edge_count)


# --- per-replicate workers (module level so they pickle) ---------------------

def _stats_worker(g, s, p, ks=()):
    res = sweep(g, _rand(g, s), [p], ks=ks)
    return res.sum_sq[0], res.C1[0], res.C2[0], tuple(res.Z[0])


def _origin_cluster_worker(g, s, p):
    return len(cluster_of(g, _rand(g, s), p, 0))


def _ball_worker(g, s, p, r):
    return ball(g, _rand(g, s), p, 0, r).shell_sizes


def _sweep_s2_worker(g, s, grid):
    return sweep(g, _rand(g, s), grid, want_c2=False).sum_sq


# --- estimators -------------------------------------------------------------

def cluster_statistics(g: TransitiveGraph, p: float, replicates: int, seed: int, ks=(), workers: int = 1) -> dict:
    """Per-replicate ``sum |C|^2``, ``|C1|``, ``|C2|`` and ``Z_{>=k}`` at ``p``.

    Returns a dict of arrays keyed ``sum_sq``, ``C1``, ``C2``, ``Z`` (shape
    ``(replicates, len(ks))``).
    """
    seeds = replicate_seeds(seed, CONFIG_TAG, replicates)
    rows = map_replicates(_stats_worker, g, seeds, workers, p=p, ks=tuple(int(k) for k in ks))
    return {
        "sum_sq": np.array([r[0] for r in rows], dtype=np.float64),
        "C1": np.array([r[1] for r in rows], dtype=np.int64),
        "C2": np.array([r[2] for r in rows], dtype=np.int64),
        "Z": np.array([r[3] for r in rows], dtype=np.int64).reshape(replicates, len(ks)),
    }


def chi(g: TransitiveGraph, p: float, replicates: int, seed: int, workers: int = 1) -> EstimateReport:
    """Expected cluster size, estimated by ``sum_j |C_j|^2 / V`` per configuration."""
    t0 = time.perf_counter()
    st = cluster_statistics(g, p, replicates, seed, workers=workers)
    return EstimateReport.from_samples("chi", g, p, st["sum_sq"] / g.V, seed, t0)


@dataclass
class PcEstimate:
    lam: float
    target: float
    bracket: tuple
    p_hat: float
    chi_at_p_hat: EstimateReport
    chi_lo: EstimateReport
    chi_hi: EstimateReport
    passes: int

    @property
    def width(self):
        return self.bracket[1] - self.bracket[0]


class TargetUnreachable(ValueError):
    pass


def _mean_curve(g, seeds, grid, workers):
    curves = map_replicates(_sweep_s2_worker, g, seeds, workers, grid=np.asarray(grid))
    return np.asarray(curves, dtype=np.float64) / g.V


def estimate_pc(
    g: TransitiveGraph,
    lam: float = 0.1,
    tolerance: float | None = None,
    replicates: int = 20,
    seed: int = 0,
    workers: int = 1,
    grid_points: int = 257,
) -> PcEstimate:
    """Solve ``chi_hat(p) = lam * V**(1/3)`` on coupled samples.

    All probes reuse the same replicate configurations, so the empirical
    curve is non-decreasing in ``p`` and the root is bracketed exactly.  Each
    pass evaluates the curve on ``grid_points`` points in a single sweep per
    replicate and keeps the grid cell containing the crossing (a k-ary
    bisection).
    """
    t0 = time.perf_counter()
    if lam <= 0:
        raise ValueError("lambda must be positive")
    target = lam * g.V ** (1.0 / 3.0)
    if target >= g.V:
        raise TargetUnreachable(f"target {target} >= V = {g.V}: no p reaches it")
    if tolerance is None:
        tolerance = 1e-3 / g.degree**3
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    seeds = replicate_seeds(seed, CONFIG_TAG, replicates)
    lo = 0.0
    hi = min(1.0, 2.0 / max(g.degree - 1, 1))
    while True:
        c = _mean_curve(g, seeds, [hi], workers).mean()
        if c > target:
            break
        if hi >= 1.0:
            raise TargetUnreachable("chi_hat(1) does not exceed the target")
        lo, hi = hi, min(1.0, 2 * hi)
    passes = 0
    while hi - lo > tolerance:
        grid = np.linspace(lo, hi, grid_points)
        curve = _mean_curve(g, seeds, grid, workers).mean(axis=0)
        i = int(np.argmax(curve > target))  # curve[-1] > target holds
        if i == 0:  # pragma: no cover - curve[0] <= target by construction
            i = 1
        lo, hi = float(grid[i - 1]), float(grid[i])
        passes += 1
    p_hat = 0.5 * (lo + hi)
    reports = []
    for p in (p_hat, lo, hi):
        vals = _mean_curve(g, seeds, [p], workers)[:, 0]
        reports.append(EstimateReport.from_samples("chi", g, p, vals, seed, t0))
    return PcEstimate(lam, target, (lo, hi), p_hat, reports[0], reports[1], reports[2], passes)


def cluster_tail(g: TransitiveGraph, p: float, k: int, replicates: int, seed: int, workers: int = 1,
                 method: str = "z") -> EstimateReport:
    """Estimate ``P(|C(0)| >= k)``.

    ``method="z"`` averages ``Z_{>=k} / V`` over configurations, which has the
    same mean on a transitive graph and far smaller variance.
    ``method="origin"`` averages the indicator ``|C(0)| >= k``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    t0 = time.perf_counter()
    if method == "z":
        st = cluster_statistics(g, p, replicates, seed, ks=(k,), workers=workers)
        samples = st["Z"][:, 0] / g.V
    elif method == "origin":
        seeds = replicate_seeds(seed, CONFIG_TAG, replicates)
        sizes = np.array(map_replicates(_origin_cluster_worker, g, seeds, workers, p=p))
        samples = (sizes >= k).astype(float)
    else:
        raise ValueError(f"unknown method {method!r}")
    rep = EstimateReport.from_samples("tail", g, p, samples, seed, t0, k=int(k))
    rep.extra["method"] = method
    return rep


def survival_probability(g: TransitiveGraph, p: float, r: int, replicates: int, seed: int, workers: int = 1) -> EstimateReport:
    """Fraction of replicates whose intrinsic shell at distance r is non-empty."""
    if r < 1:
        raise ValueError("r must be >= 1")
    t0 = time.perf_counter()
    seeds = replicate_seeds(seed, CONFIG_TAG, replicates)
    shells = map_replicates(_ball_worker, g, seeds, workers, p=p, r=r)
    hit = np.array([float(s[r] > 0) for s in shells])
    return EstimateReport.from_samples("survival", g, p, hit, seed, t0, r=int(r))


@dataclass
class BallVolumes:
    graph: str
    p: float
    r: int
    replicates: int
    shell_mean: np.ndarray
    shell_se: np.ndarray
    ball_mean: np.ndarray
    ball_se: np.ndarray
    seed: int


def ball_volumes(g: TransitiveGraph, p: float, r: int, replicates: int, seed: int, workers: int = 1) -> BallVolumes:
    """Level-wise ``E|dB(t)|`` and cumulative ``E|B(t)|`` for ``t = 0..r``."""
    if r < 0:
        raise ValueError("r must be >= 0")
    if replicates < 2:
        raise ValueError("need at least 2 replicates")
    seeds = replicate_seeds(seed, CONFIG_TAG, replicates)
    shells = np.array(map_replicates(_ball_worker, g, seeds, workers, p=p, r=r), dtype=np.float64)
    balls = np.cumsum(shells, axis=1)
    n = math.sqrt(replicates)
    return BallVolumes(
        str(g.spec), p, r, replicates,
        shells.mean(0), shells.std(0, ddof=1) / n,
        balls.mean(0), balls.std(0, ddof=1) / n,
        seed,
    )


class ReplicateAborted(RuntimeError):
    pass


def _triangle_worker(g, s, p, x, y, cost_cap):
    r1 = EdgeRandomness(derive_seed(s, 1), g.edge_count)
    r2 = EdgeRandomness(derive_seed(s, 2), g.edge_count)
    r3 = EdgeRandomness(derive_seed(s, 3), g.edge_count)
    c1 = cluster_of(g, r1, p, x)
    c3 = cluster_of(g, r3, p, y)
    if cost_cap is not None and len(c1) * len(c3) > cost_cap:
        return None
    conf2 = Configuration(g, r2, p)
    lab = decompose_edges(g.V, conf2.u, conf2.v, p).component_id
    n = lab.max() + 1
    n1 = np.bincount(lab[c1], minlength=n)
    n3 = np.bincount(lab[c3], minlength=n)
    return float(n1 @ n3)


def triangle_diagram(
    g: TransitiveGraph, p: float, x: int, y: int, replicates: int, seed: int,
    workers: int = 1, cost_cap: int | None = None,
) -> EstimateReport:
    """Unbiased estimate of ``sum_{u,v} tau(x,u) tau(u,v) tau(v,y)``.

    Each replicate uses three independent configurations and counts pairs
    ``(u, v)`` with ``u`` in ``C_1(x)``, ``v`` in ``C_2(u)`` and ``v`` in
    ``C_3(y)``.  Replicates whose ``|C_1(x)| * |C_3(y)|`` exceeds ``cost_cap``
    are aborted and counted in ``extra['aborted']``; if any are aborted the
    reported mean is over the completed ones and ``extra['biased']`` is set.
    """
    t0 = time.perf_counter()
    seeds = replicate_seeds(seed, "triangle", replicates)
    vals = map_replicates(_triangle_worker, g, seeds, workers, p=p, x=x, y=y, cost_cap=cost_cap)
    done = [v for v in vals if v is not None]
    aborted = len(vals) - len(done)
    if len(done) < 2:
        raise ReplicateAborted(f"{aborted} of {len(vals)} replicates exceeded the cost cap")
    rep = EstimateReport.from_samples("triangle", g, p, done, seed, t0)
    rep.extra.update(x=int(x), y=int(y), aborted=aborted, biased=aborted > 0)
    return rep


def magnetization(g: TransitiveGraph, p: float, gamma: float, replicates: int, seed: int, workers: int = 1) -> MagnetizationPoint:
    """``M(p, gamma)`` with the green field integrated out exactly.

    Per replicate the origin's cluster size ``k`` contributes
    ``1 - (1 - gamma)**k``, its conditional probability of containing a green
    vertex.
    """
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    if replicates < 2:
        raise ValueError("need at least 2 replicates")
    seeds = replicate_seeds(seed, CONFIG_TAG, replicates)
    sizes = np.array(map_replicates(_origin_cluster_worker, g, seeds, workers, p=p), dtype=np.float64)
    vals = 1.0 - (1.0 - gamma) ** sizes
    return MagnetizationPoint(
        p, gamma, float(vals.mean()), "monte-carlo",
        float(vals.std(ddof=1) / math.sqrt(replicates)), replicates,
    )


def magnetization_report(g, p, gamma, replicates, seed, workers=1) -> EstimateReport:
    t0 = time.perf_counter()
    pt = magnetization(g, p, gamma, replicates, seed, workers)
    return EstimateReport("magnetization", str(g.spec), p, replicates, pt.M, pt.std_error, seed,
                          time.perf_counter() - t0, gamma=gamma)


def connection_probability(g: TransitiveGraph, p: float, x: int, y: int, replicates: int, seed: int, workers: int = 1) -> EstimateReport:
    """Fraction of replicates with ``x <-> y``."""
    t0 = time.perf_counter()
    seeds = replicate_seeds(seed, CONFIG_TAG, replicates)
    hits = map_replicates(_connect_worker, g, seeds, workers, p=p, x=x, y=y)
    rep = EstimateReport.from_samples("connection", g, p, np.asarray(hits, dtype=float), seed, t0)
    rep.extra.update(x=int(x), y=int(y))
    return rep


def _connect_worker(g, s, p, x, y):
    return float(y in set(cluster_of(g, _rand(g, s), p, x).tolist()))


def k0_threshold(epsilon: float, V: int, exponent: float = 0.25) -> int:
    """Large-cluster threshold ``ceil(eps**-2 (eps**3 V)**exponent)``."""
    return math.ceil(epsilon**-2 * (epsilon**3 * V) ** exponent)
