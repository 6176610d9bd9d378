"""Acceptance checks with pinned seeds.

Each ``criterion_N`` function runs one experiment and returns a
``CriterionResult`` whose ``passed`` flag compares the measured values with
the band stated next to the function.  The suites in the CLI and the
acceptance tests both call these functions.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import nbw
from .engine import decompose, decompose_edges, sweep
from .estimators import (
    chi, cluster_statistics, estimate_pc, k0_threshold, magnetization, triangle_diagram,
)
from .graphs import build
from .oracle import ExactOracle, check_differential_inequalities
from .parallel import map_replicates, replicate_seeds
from .rng import EdgeRandomness, derive_seed
from .sprinkling import plan, run_many, union_density_z

SEED = 20240601
PC_REPLICATES = 20
LAMBDA = 0.1


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    summary: str
    values: dict = field(default_factory=dict)
    elapsed_s: float = 0.0

    def line(self) -> str:
        return f"criterion {self.id:>2} [{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.summary}"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.elapsed_s = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@lru_cache(maxsize=16)
def pc_estimate(spec: str, lam: float = LAMBDA, replicates: int = PC_REPLICATES, seed: int = SEED):
    return estimate_pc(build(spec), lam, replicates=replicates, seed=seed)


# --- 1 ----------------------------------------------------------------------

def _oracle_samples(g, p, n, seed, gammas):
    u, v = g.all_edges()
    tau = np.empty((n, g.V))
    size0 = np.empty(n)
    for j, s in enumerate(replicate_seeds(seed, "oracle-mc", n)):
        open_ = EdgeRandomness(s, g.edge_count).values() < p
        cid = decompose_edges(g.V, u[open_], v[open_]).component_id
        tau[j] = cid == cid[0]
        size0[j] = tau[j].sum()
    out = {f"tau(0,{y})": tau[:, y] for y in range(1, g.V)}
    out["chi"] = size0
    for gm in gammas:
        out[f"M(gamma={gm})"] = 1.0 - (1.0 - gm) ** size0
    return out


@_timed
def criterion_1(n: int = 4000, seed: int = SEED) -> CriterionResult:
    """Monte Carlo vs exhaustive enumeration, |diff| <= 4 standard errors."""
    worst = 0.0
    where = ""
    compared = 0
    gammas = (0.1, 0.5)
    for spec in ("hypercube:m=2", "hypercube:m=3", "complete:n=4"):
        g = build(spec)
        orc = ExactOracle(g)
        for pi, p in enumerate((0.2, 0.5, 0.8)):
            s = derive_seed(seed, spec, pi)
            samples = _oracle_samples(g, p, n, s, gammas)
            tau = orc.tau(p)
            exact = {f"tau(0,{y})": tau[0, y] for y in range(1, g.V)}
            exact["chi"] = orc.chi(p)
            for gm in gammas:
                exact[f"M(gamma={gm})"] = orc.magnetization(p, gm)
            tri = triangle_diagram(g, p, 0, 0, n, s)
            rows = [(k, samples[k].mean(), samples[k].std(ddof=1) / math.sqrt(n), exact[k]) for k in exact]
            rows.append(("nabla(0,0)", tri.mean, tri.std_error, orc.nabla(p)[0, 0]))
            for name, mean, se, ex in rows:
                compared += 1
                z = abs(mean - ex) / se if se > 0 else (0.0 if mean == ex else math.inf)
                if z > worst:
                    worst, where = z, f"{spec} p={p} {name}"
    return CriterionResult(1, "engine vs exact enumeration", worst <= 4.0,
                           f"{compared} comparisons, worst |z| = {worst:.2f} ({where})",
                           {"worst_z": worst, "compared": compared})


# --- 2 ----------------------------------------------------------------------

@_timed
def criterion_2(n: int = 10**5, eps: float = 0.1, reps: int = 20, seed: int = SEED) -> CriterionResult:
    """Complete graph at p = (1+eps)/n: mean |C1|/(2 eps n) in [0.9, 1.1]."""
    g = build(f"complete:n={n}")
    st = cluster_statistics(g, (1 + eps) / n, reps, seed)
    r = st["C1"] / (2 * eps * n)
    ratio = float(r.mean())
    return CriterionResult(2, "Erdos-Renyi giant component", 0.9 <= ratio <= 1.1,
                           f"mean |C1|/(2 eps n) = {ratio:.4f} +- {r.std(ddof=1) / math.sqrt(reps):.4f} (band [0.9, 1.1])",
                           {"ratio": ratio})


# --- 3, 4, 5 ----------------------------------------------------------------

@lru_cache(maxsize=4)
def _supercritical_stats(m: int = 20, eps: float = 0.1, reps: int = 20, seed: int = SEED):
    spec = f"hypercube:m={m}"
    g = build(spec)
    pc = pc_estimate(spec)
    p = pc.p_hat * (1 + eps)
    k0 = k0_threshold(eps, g.V)
    st = cluster_statistics(g, p, reps, derive_seed(seed, "supercritical"), ks=(k0,))
    return g, pc, p, k0, st


@_timed
def criterion_3(eps: float = 0.1) -> CriterionResult:
    """mean |C1|/(2 eps V) in [0.8, 1.2] and mean |C2|/|C1| <= 0.15."""
    g, pc, p, _, st = _supercritical_stats(eps=eps)
    r1 = float((st["C1"] / (2 * eps * g.V)).mean())
    r2 = float((st["C2"] / st["C1"]).mean())
    ok = 0.8 <= r1 <= 1.2 and r2 <= 0.15
    return CriterionResult(3, "hypercube giant component", ok,
                           f"p = {p:.6f}: mean |C1|/(2 eps V) = {r1:.4f} (band [0.8, 1.2]), mean |C2|/|C1| = {r2:.4f} (<= 0.15)",
                           {"p": p, "C1_ratio": r1, "C2_over_C1": r2})


@_timed
def criterion_4(eps: float = 0.1) -> CriterionResult:
    """chi_hat / (4 eps^2 V) in [0.75, 1.25]."""
    g, pc, p, _, st = _supercritical_stats(eps=eps)
    r = float(st["sum_sq"].mean() / g.V / (4 * eps**2 * g.V))
    return CriterionResult(4, "supercritical susceptibility", 0.75 <= r <= 1.25,
                           f"p = {p:.6f}: chi_hat/(4 eps^2 V) = {r:.4f} (band [0.75, 1.25])", {"ratio": r})


@_timed
def criterion_5(eps: float = 0.1) -> CriterionResult:
    """P(|C(0)| >= k0) in [1.5 eps, 2.5 eps], estimated as E[Z_{>=k0}]/V."""
    g, pc, p, k0, st = _supercritical_stats(eps=eps)
    tail = float(st["Z"][:, 0].mean() / g.V)
    return CriterionResult(5, "cluster tail at k0", 1.5 * eps <= tail <= 2.5 * eps,
                           f"k0 = {k0}: tail = {tail:.4f} = {tail / eps:.3f} eps (band [1.5, 2.5] eps)",
                           {"k0": k0, "tail": tail})


# --- 6 ----------------------------------------------------------------------

@_timed
def criterion_6(ms=(14, 16, 18, 20, 22)) -> CriterionResult:
    """(p_hat_c - 1/(m-1)) m^3 in [2, 5] for every m, without monotone divergence."""
    shifts = []
    for m in ms:
        pc = pc_estimate(f"hypercube:m={m}")
        shifts.append((pc.p_hat - 1.0 / (m - 1)) * m**3)
    dev = [abs(s - 3.5) for s in shifts]
    diverging = all(b > a for a, b in zip(dev, dev[1:]))
    in_band = all(2 <= s <= 5 for s in shifts)
    txt = ", ".join(f"m={m}: {s:.2f}" for m, s in zip(ms, shifts))
    return CriterionResult(6, "p_c expansion", in_band and not diverging,
                           f"{txt} (band [2, 5]; monotone divergence: {diverging})",
                           {"shifts": dict(zip(ms, shifts))})


# --- 7 ----------------------------------------------------------------------

def nbw_path_oracle(m: int, t: int) -> list[Fraction]:
    """``p^t(0, z)`` for ``|z| = w`` by enumerating all direction sequences."""
    counts = [0] * (m + 1)
    total = 0
    for seq in itertools.product(range(m), repeat=t):
        if any(a == b for a, b in zip(seq, seq[1:])):
            continue
        total += 1
        x = 0
        for i in seq:
            x ^= 1 << i
        counts[bin(x).count("1")] += 1
    return [Fraction(counts[w], total * math.comb(m, w)) for w in range(m + 1)]


@_timed
def criterion_7(walks: int = 10**6, seed: int = SEED) -> CriterionResult:
    errs = []
    for m in range(3, 21):
        spec = nbw.nbw_spectrum(m, 4)
        K = nbw.krawtchouk_table(m)
        errs.append(abs(nbw.nbw_transition(spec, K, 2, 0)))
        errs.append(abs(nbw.nbw_transition(spec, K, 4, 0) - 1.0 / (m - 1) ** 2))
    e_small = max(errs)
    e_enum = 0.0
    exact_ok = True
    for m in range(2, 5):
        K = nbw.krawtchouk_table(m)
        spec = nbw.nbw_spectrum(m, 6)
        ex = nbw.exact_transitions(m, 6)
        for t in range(7):
            ref = nbw_path_oracle(m, t)
            exact_ok &= ex[t] == ref
            for w in range(m + 1):
                e_enum = max(e_enum, abs(nbw.nbw_transition(spec, K, t, w) - float(ref[w])))
    m, T = 10, 20
    counts = nbw.hypercube_nbw_counts(m, T, walks, seed)
    table = nbw.transition_table(nbw.nbw_spectrum(m, T), nbw.krawtchouk_table(m))
    zmax = 0.0
    for t in range(T + 1):
        for w in range(m + 1):
            q = table[t, w] * math.comb(m, w)
            se = math.sqrt(max(q * (1 - q), 0.0) / walks)
            obs = counts[t, w] / walks
            z = abs(obs - q) / se if se > 0 else (0.0 if obs == q else math.inf)
            zmax = max(zmax, z)
    ok = e_small <= 1e-10 and e_enum <= 1e-12 and exact_ok and zmax <= 4
    return CriterionResult(7, "non-backtracking walk exactness", ok,
                           f"max error p^2, p^4 (m=3..20) = {e_small:.2e}; spectrum vs enumeration = {e_enum:.2e} "
                           f"(rational match: {exact_ok}); simulation worst |z| = {zmax:.2f}",
                           {"err_small": e_small, "err_enum": e_enum, "rational": exact_ok, "sim_z": zmax})


# --- 8 ----------------------------------------------------------------------

@_timed
def criterion_8() -> CriterionResult:
    ratios = {}
    for m in range(8, 21):
        T = nbw.uniform_mixing_time(m, math.log(m) / m)
        ratios[m] = T / (m * math.log(m))
    worst = max(ratios.values())
    return CriterionResult(8, "mixing time scaling", worst <= 3,
                           f"max T/(m ln m) = {worst:.3f} over m=8..20 (<= 3)", {"ratios": ratios})


# --- 9 ----------------------------------------------------------------------

@_timed
def criterion_9(ms=(12, 16, 20)) -> CriterionResult:
    """``(S - 2L^3/V) m^2 <= 10`` with S the supremum over pairs of the NBW triangle."""
    scaled = {}
    bulk = {}
    for m in ms:
        L = math.ceil(m * math.log(m))
        ts = nbw.triangle_sum(nbw.nbw_spectrum(m, L), nbw.krawtchouk_table(m), L)
        scaled[m] = (ts.sup - ts.k01_bound) * m**2
        bulk[m] = ts.bulk * m**2
    worst = max(scaled.values())
    txt = ", ".join(f"m={m}: {v:.1f}" for m, v in scaled.items())
    return CriterionResult(9, "NBW triangle sum", worst <= 10,
                           f"(S - 2L^3/V) m^2: {txt} (<= 10); bulk m^2: "
                           + ", ".join(f"{v:.1f}" for v in bulk.values()),
                           {"scaled": scaled, "bulk": bulk})


# --- 10 ---------------------------------------------------------------------

@_timed
def criterion_10(m: int = 18, reps: int = 200, seed: int = SEED) -> CriterionResult:
    spec = f"hypercube:m={m}"
    g = build(spec)
    pc = pc_estimate(spec)
    vals = {}
    ok = True
    for gm in (1e-4, 1e-3):
        pt = magnetization(g, pc.p_hat, gm, reps, derive_seed(seed, "magnetization"))
        vals[gm] = pt.M / math.sqrt(2 * gm)
        ok &= pt.M <= 1.3 * math.sqrt(2 * gm)
    m0 = magnetization(g, pc.p_hat, 0.0, 2, seed).M
    m1 = magnetization(g, pc.p_hat, 1.0, 2, seed).M
    small = ExactOracle(build("hypercube:m=3"))
    e0 = small.magnetization(0.5, 0.0)
    e1 = small.magnetization(0.5, 1.0)
    ok &= m0 == 0.0 and m1 == 1.0 and e0 == 0.0 and abs(e1 - 1.0) <= 1e-15
    return CriterionResult(10, "magnetization bound", bool(ok),
                           "M/sqrt(2 gamma): " + ", ".join(f"gamma={k:g}: {v:.4f}" for k, v in vals.items())
                           + f" (<= 1.3); M(p,0) = {m0}, M(p,1) = {m1}",
                           {"ratios": vals, "M0": m0, "M1": m1})


# --- 11 ---------------------------------------------------------------------

@_timed
def criterion_11() -> CriterionResult:
    grid = [i / 10 for i in range(1, 10)]
    worst = {}
    for spec in ("hypercube:m=2", "hypercube:m=3"):
        rows = check_differential_inequalities(build(spec), grid, grid)
        for name in ("slack_ineq1", "slack_ineq2", "slack_rdi"):
            worst[(spec, name)] = min(getattr(r, name) for r in rows)
    low = min(worst.values())
    return CriterionResult(11, "differential inequalities", low >= -1e-8,
                           f"minimum slack over 2 x 81 grid points x 3 inequalities = {low:.3e} (>= -1e-8)",
                           {"min_slack": low})


# --- 12 ---------------------------------------------------------------------

@_timed
def criterion_12(m: int = 20, eps: float = 0.1, theta: float = 0.05, reps: int = 50, seed: int = SEED) -> CriterionResult:
    spec = f"hypercube:m={m}"
    g = build(spec)
    pl = plan(g, pc_estimate(spec).p_hat, eps, theta)
    outs = run_many(g, pl, reps, seed)
    frac = np.array([o.merge_fraction for o in outs])
    hit = float(np.mean(np.nan_to_num(frac, nan=-1.0) >= 1 - 3 * theta))
    z = union_density_z(g, pl, outs)
    ok = hit >= 0.9 and abs(z) <= 4
    return CriterionResult(12, "sprinkling merge", ok,
                           f"merge_fraction >= {1 - 3 * theta:.2f} in {hit:.0%} of {reps} runs (>= 90%); "
                           f"median merge_fraction = {np.nanmedian(frac):.3f}; union density z = {z:.2f} (|z| <= 4)",
                           {"hit_rate": hit, "density_z": z, "median_merge": float(np.nanmedian(frac))})


# --- 13 ---------------------------------------------------------------------

def refinement_holds(g, seed, grid) -> bool:
    """Open sets nest and every cluster at p lies inside one cluster at q > p."""
    rand = EdgeRandomness(seed, g.edge_count)
    prev = None
    for p in grid:
        d = decompose(g, rand, p)
        idx, _ = rand.open_edges(p)
        if prev is not None:
            pidx, pd = prev
            if not np.isin(pidx, idx).all():
                return False
            # map each p-cluster to the q-cluster of its members: must be constant
            lo = np.full(pd.sizes.size, np.iinfo(np.int64).max)
            hi = np.full(pd.sizes.size, -1)
            np.minimum.at(lo, pd.component_id, d.component_id)
            np.maximum.at(hi, pd.component_id, d.component_id)
            if np.any(lo != hi):
                return False
        prev = (idx, d)
    return True


def sweep_matches_decompose(g, seed, grid, ks) -> bool:
    rand = EdgeRandomness(seed, g.edge_count)
    res = sweep(g, rand, grid, ks=ks)
    for i, p in enumerate(grid):
        d = decompose(g, rand, p)
        z = [int(d.sizes[d.sizes >= k].sum()) for k in ks]
        if (res.sum_sq[i], res.C1[i], res.C2[i], list(res.Z[i])) != (d.sum_sq(), d.C1, d.C2, z):
            return False
    return True


def krawtchouk_orthogonal(m: int) -> bool:
    K = nbw.krawtchouk_table(m)
    for j in range(m + 1):
        for k in range(m + 1):
            s = sum(math.comb(m, w) * K[j, w] * K[k, w] for w in range(m + 1))
            if s != (2**m * math.comb(m, j) if j == k else 0):
                return False
    return True


def mass_and_parity(m: int, tmax: int, exact: bool) -> float:
    """Largest violation of mass 1 and of the parity constraint."""
    if exact:
        rows = nbw.exact_transitions(m, tmax)
        bad = 0.0
        for t, row in enumerate(rows):
            if sum(math.comb(m, w) * row[w] for w in range(m + 1)) != 1:
                bad = max(bad, 1.0)
            if any(row[w] != 0 for w in range(m + 1) if (w - t) % 2):
                bad = max(bad, 1.0)
        return bad
    table = nbw.transition_table(nbw.nbw_spectrum(m, tmax), nbw.krawtchouk_table(m))
    binom = np.array([math.comb(m, w) for w in range(m + 1)], dtype=float)
    bad = float(np.abs(table @ binom - 1).max())
    for t in range(tmax + 1):
        wrong = [w for w in range(m + 1) if (w - t) % 2]
        bad = max(bad, float(np.abs(table[t, wrong]).max()) if wrong else 0.0)
    return bad


def _chi_samples_worker(g, s, p):
    return sweep(g, EdgeRandomness(s, g.edge_count), [p]).sum_sq[0]


def worker_invariant(g, p, reps, seed) -> bool:
    seeds = replicate_seeds(seed, "determinism", reps)
    a = map_replicates(_chi_samples_worker, g, seeds, 1, p=p)
    b = map_replicates(_chi_samples_worker, g, seeds, 2, p=p)
    c = chi(g, p, reps, seed, workers=1).as_dict()
    d = chi(g, p, reps, seed, workers=3).as_dict()
    c.pop("elapsed_s")
    d.pop("elapsed_s")
    return a == b and c == d


@_timed
def criterion_13(seed: int = SEED) -> CriterionResult:
    parts = {}
    small = [build(s) for s in ("hypercube:m=3", "hypercube:m=6", "torus:n=5,d=2", "complete:n=12", "hamming:n=3,d=3")]
    grid = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0]
    parts["refinement (small, all grid pairs)"] = all(
        refinement_holds(g, derive_seed(seed, "ref", str(g.spec), j), grid) for g in small for j in range(10))
    parts["refinement (hypercube m=18, sampled)"] = refinement_holds(
        build("hypercube:m=18"), derive_seed(seed, "ref-large"), [0.05, 0.055, 0.06])
    parts["sweep = decompose (small)"] = all(
        sweep_matches_decompose(g, derive_seed(seed, "sw", str(g.spec), j), grid, (1, 2, 5)) for g in small for j in range(10))
    parts["sweep = decompose (hypercube m=18, sampled)"] = sweep_matches_decompose(
        build("hypercube:m=18"), derive_seed(seed, "sw-large"), [0.05, 0.0555, 0.06], (10, 1000))
    parts["Krawtchouk orthogonality m=1..20"] = all(krawtchouk_orthogonal(m) for m in range(1, 21))
    parts["mass/parity exact m=2..8, t<=12"] = all(mass_and_parity(m, 12, True) == 0 for m in range(2, 9))
    parts["mass/parity float m=9..20, t<=3m"] = all(mass_and_parity(m, 3 * m, False) <= 1e-9 for m in range(9, 21))
    parts["worker-count invariance"] = worker_invariant(build("hypercube:m=10"), 0.11, 8, seed)
    ok = all(parts.values())
    failed = [k for k, v in parts.items() if not v]
    return CriterionResult(13, "property suites", ok,
                           f"{sum(parts.values())}/{len(parts)} properties hold" + (f"; failed: {failed}" if failed else ""),
                           {"parts": parts})


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 14)}


@_timed
def smoke_pc(m: int = 10, lam: float = 1.0, seed: int = SEED) -> CriterionResult:
    """Self-consistency of the p_c estimator on a small hypercube."""
    g = build(f"hypercube:m={m}")
    pc = estimate_pc(g, lam, replicates=PC_REPLICATES, seed=seed)
    rep = pc.chi_at_p_hat
    z = abs(rep.mean - pc.target) / rep.std_error
    return CriterionResult(0, f"p_c self-consistency on hypercube m={m}", z <= 2,
                           f"p_hat = {pc.p_hat:.6f}, chi_hat = {rep.mean:.4f} vs target {pc.target:.4f} ({z:.2f} stderr, <= 2)",
                           {"p_hat": pc.p_hat, "z": z})


SUITES = {
    "paper-checks": list(range(1, 14)),
    "smoke": [7, 8, 9, 11, 13],
}


def run_suite(name: str, progress=None) -> list[CriterionResult]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    out = []
    if name == "smoke":
        out.append(smoke_pc())
    for i in SUITES[name]:
        res = CRITERIA[i]()
        out.append(res)
        if progress:
            progress(res)
    return out
