"""Non-backtracking walks on the hypercube, exactly, via Fourier analysis.

The law of the walk after ``t`` steps is a function of the Hamming weight of
the endpoint only, so everything lives on weight classes ``0..m``:

* ``coeff[t][j]`` is the Fourier coefficient at any ``k`` of weight ``j``;
* ``K[j][w]`` (Krawtchouk) sums the characters of weight-``j`` frequencies
  at a point of weight ``w``;
* ``p^t(0, z) = 2**-m * sum_j K[j][w] coeff[t][j]`` for ``|z| = w``.

The coefficient recursion for ``t >= 1`` is

    coeff[t+1] = m/(m-1) * (1 - 2j/m) * coeff[t] - 1/(m-1) * coeff[t-1]

which follows from splitting a simple-random-walk step followed by a
``t``-step NBW according to whether the NBW's first step reverses the SRW
step.  It conserves total mass and is checked against brute-force path
enumeration in the test-suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numba as nb
import numpy as np

from .rng import splitmix64


class MixingError(RuntimeError):
    """The uniform mixing criterion was not met before the hard cap."""


class CancellationError(ArithmeticError):
    """Floating-point Krawtchouk inversion left a residue beyond tolerance."""


def krawtchouk_table(m: int) -> np.ndarray:
    """Exact ``K[j][w]`` for ``0 <= j, w <= m`` as an object array of Python ints.

    Three-term recurrence in ``j``:
    ``(j+1) K[j+1] = (m - 2w) K[j] - (m - j + 1) K[j-1]``.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    K = np.empty((m + 1, m + 1), dtype=object)
    for w in range(m + 1):
        K[0, w] = 1
        if m >= 1:
            K[1, w] = m - 2 * w
        for j in range(1, m):
            num = (m - 2 * w) * K[j, w] - (m - j + 1) * K[j - 1, w]
            q, r = divmod(num, j + 1)
            assert r == 0
            K[j + 1, w] = q
    return K


@dataclass
class NbwSpectrum:
    m: int
    tmax: int
    coeff: np.ndarray  # float, shape (tmax+1, m+1)

    def extended(self, tmax: int) -> "NbwSpectrum":
        return nbw_spectrum(self.m, tmax)


def _dhat(m):
    return 1.0 - 2.0 * np.arange(m + 1) / m


def nbw_spectrum(m: int, tmax: int) -> NbwSpectrum:
    if m < 2:
        raise ValueError(f"non-backtracking walk needs degree >= 2, got m={m}")
    if tmax < 0:
        raise ValueError("tmax must be >= 0")
    c = np.empty((tmax + 1, m + 1))
    c[0] = 1.0
    d = _dhat(m)
    if tmax >= 1:
        c[1] = d
    a = m / (m - 1)
    b = 1.0 / (m - 1)
    for t in range(1, tmax):
        c[t + 1] = a * d * c[t] - b * c[t - 1]
    return NbwSpectrum(m, tmax, c)


def exact_coefficients(m: int, tmax: int) -> list[list[Fraction]]:
    """Same recursion in rational arithmetic."""
    if m < 2:
        raise ValueError("m must be >= 2")
    d = [Fraction(m - 2 * j, m) for j in range(m + 1)]
    rows = [[Fraction(1)] * (m + 1)]
    if tmax >= 1:
        rows.append(list(d))
    a = Fraction(m, m - 1)
    b = Fraction(1, m - 1)
    for t in range(1, tmax):
        rows.append([a * d[j] * rows[t][j] - b * rows[t - 1][j] for j in range(m + 1)])
    return rows


def exact_transitions(m: int, tmax: int) -> list[list[Fraction]]:
    """``p^t(0, weight-w vertex)`` as Fractions for ``t <= tmax``."""
    K = krawtchouk_table(m)
    V = 2**m
    rows = exact_coefficients(m, tmax)
    return [[sum(K[j, w] * row[j] for j in range(m + 1)) / V for w in range(m + 1)] for row in rows]


def _tolerance(m):
    return 1e-10 * 2.0 ** (m / 2)


def nbw_transition(spec: NbwSpectrum, kraw: np.ndarray, t: int, w: int) -> float:
    """``p^t(0, z)`` for any ``z`` of Hamming weight ``w``."""
    m = spec.m
    if not 0 <= t <= spec.tmax:
        raise ValueError(f"t={t} outside [0, {spec.tmax}]")
    if not 0 <= w <= m:
        raise ValueError(f"weight {w} outside [0, {m}]")
    val = math.fsum(float(kraw[j, w]) * spec.coeff[t, j] for j in range(m + 1)) / 2.0**m
    tol = _tolerance(m)
    if val < -tol or val > 1 + tol:
        raise CancellationError(f"p^{t}(0,w={w}) = {val!r} outside [-{tol}, 1+{tol}]")
    return min(max(val, 0.0), 1.0)


def transition_table(spec: NbwSpectrum, kraw: np.ndarray) -> np.ndarray:
    """All ``p^t(0, w)`` as an array of shape ``(tmax+1, m+1)``."""
    m = spec.m
    Kf = np.array(kraw, dtype=np.float64)
    out = np.empty((spec.tmax + 1, m + 1))
    for t in range(spec.tmax + 1):
        row = spec.coeff[t]
        for w in range(m + 1):
            out[t, w] = math.fsum(Kf[:, w] * row)
    out /= 2.0**m
    tol = _tolerance(m)
    if out.min() < -tol or out.max() > 1 + tol:
        raise CancellationError("Krawtchouk inversion residue beyond tolerance")
    return np.clip(out, 0.0, 1.0)


def uniform_mixing_time(m: int, xi: float, tmax: int | None = None) -> int:
    """Smallest t with ``max_w (p^t + p^{t+1})/2 <= (1 + xi) / V``.

    The horizon doubles until the criterion is met; gives up at
    ``64 m log2 m`` steps.
    """
    if xi <= 0:
        raise ValueError("xi must be positive")
    if m < 2:
        raise ValueError("m must be >= 2")
    cap = int(64 * m * max(math.log2(m), 1.0))
    kraw = krawtchouk_table(m)
    bound = (1.0 + xi) / 2.0**m
    horizon = tmax or max(8, 2 * m)
    start = 0
    while True:
        horizon = min(horizon, cap + 1)
        table = transition_table(nbw_spectrum(m, horizon), kraw)
        avg = 0.5 * (table[:-1] + table[1:]).max(axis=1)
        hits = np.flatnonzero(avg[start:] <= bound)
        if hits.size:
            return int(start + hits[0])
        if horizon > cap:
            raise MixingError(
                f"m={m}, xi={xi}: criterion not met by t={cap}; "
                f"min over t of max_w avg * V = {avg.min() * 2.0**m:.6g}"
            )
        start = horizon - 1
        horizon *= 2


@dataclass
class TriangleSum:
    m: int
    L: int
    value: float  # at x = y
    sup: float  # over all pairs (x, y)
    k01: float  # exact contribution of the frequencies 0 and all-ones at x = y
    k01_bound: float  # 2 L^3 / V

    @property
    def bulk(self) -> float:
        return self.value - self.k01


def triangle_sum(spec: NbwSpectrum, kraw: np.ndarray, L: int) -> TriangleSum:
    """NBW triangle: triple convolution sum over ``t1+t2+t3 >= 3``, ``ti <= L``."""
    m = spec.m
    if not 0 <= L <= spec.tmax:
        raise ValueError(f"L={L} outside [0, {spec.tmax}]")
    V = 2.0**m
    if L == 0:
        return TriangleSum(m, 0, 0.0, 0.0, 0.0, 0.0)
    c = spec.coeff
    total = c[: L + 1].sum(axis=0)
    low = 1.0 + 3.0 * c[1] + 3.0 * c[1] ** 2
    if L >= 2:
        low = low + 3.0 * c[2]
    f = total**3 - low
    Kf = np.array(kraw, dtype=np.float64)
    per_w = np.array([math.fsum(Kf[:, w] * f) for w in range(m + 1)]) / V
    k01 = (f[0] + f[m]) / V
    return TriangleSum(m, L, float(per_w[0]), float(per_w.max()), float(k01), 2.0 * L**3 / V)


@dataclass
class ConditionReport:
    m: int
    p_hat_c: float
    alpha: float
    m0: int
    condition2: float  # [p(m-1)]^m0 - 1
    triangle: float
    condition3: float  # triangle * log V / alpha


def check_conditions(g, p_hat_c: float, alpha: float, m0: int) -> ConditionReport:
    """Raw quantities behind the random-walk conditions; no pass/fail."""
    m = g.degree
    cond2 = (p_hat_c * (m - 1)) ** m0 - 1.0
    spec = nbw_spectrum(m, max(m0, 1))
    tri = triangle_sum(spec, krawtchouk_table(m), m0).sup
    return ConditionReport(m, p_hat_c, alpha, m0, cond2, tri, tri * math.log(g.V) / alpha)


# --- simulation -------------------------------------------------------------

def simulate_nbw(g, start: int, steps: int, seed: int) -> np.ndarray:
    """Trajectory ``[x_0, ..., x_steps]`` of a non-backtracking walk on ``g``."""
    if g.degree < 2:
        raise ValueError("non-backtracking walk needs degree >= 2")
    g._check_vertex(start)
    traj = np.empty(steps + 1, dtype=np.int64)
    traj[0] = start
    prev = -1
    key = splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    for s in range(steps):
        nbrs = g.neighbors(int(traj[s]))
        if prev >= 0:
            nbrs = nbrs[nbrs != prev]
        h = int(splitmix64(key ^ np.uint64((s + 1) * 0x9E3779B97F4A7C15 & 0xFFFFFFFFFFFFFFFF)))
        pick = int(((h >> 11) * len(nbrs)) >> 53)
        prev = int(traj[s])
        traj[s + 1] = nbrs[pick]
    return traj


@nb.njit(cache=True)
def _hypercube_nbw_counts(m, tmax, walks, seed):
    counts = np.zeros((tmax + 1, m + 1), dtype=np.int64)
    key = splitmix64(np.uint64(seed))
    for w in range(walks):
        wk = splitmix64(key ^ (np.uint64(w) * np.uint64(0xD1B54A32D192ED03)))
        x = np.int64(0)
        weight = 0
        last = -1
        counts[0, 0] += 1
        for t in range(1, tmax + 1):
            h = splitmix64(wk ^ (np.uint64(t) * np.uint64(0x9E3779B97F4A7C15)))
            if last < 0:
                i = np.int64(((h >> np.uint64(11)) * np.uint64(m)) >> np.uint64(53))
            else:
                i = np.int64(((h >> np.uint64(11)) * np.uint64(m - 1)) >> np.uint64(53))
                if i >= last:
                    i += 1
            if (x >> i) & 1:
                weight -= 1
            else:
                weight += 1
            x ^= np.int64(1) << i
            last = i
            counts[t, weight] += 1
    return counts


def hypercube_nbw_counts(m: int, tmax: int, walks: int, seed: int) -> np.ndarray:
    """Counts of endpoint Hamming weight at each time, shape ``(tmax+1, m+1)``."""
    if m < 2:
        raise ValueError("m must be >= 2")
    return _hypercube_nbw_counts(m, tmax, walks, np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
