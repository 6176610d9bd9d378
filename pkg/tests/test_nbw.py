import math
from fractions import Fraction

import numpy as np
import pytest

from percolab import nbw
from percolab.checks import krawtchouk_orthogonal, mass_and_parity, nbw_path_oracle
from percolab.graphs import build


@pytest.mark.parametrize("m", [2, 3, 4])
def test_spectrum_matches_path_enumeration_exactly(m):
    exact = nbw.exact_transitions(m, 6)
    spec = nbw.nbw_spectrum(m, 6)
    K = nbw.krawtchouk_table(m)
    for t in range(7):
        ref = nbw_path_oracle(m, t)
        assert exact[t] == ref
        for w in range(m + 1):
            assert abs(nbw.nbw_transition(spec, K, t, w) - float(ref[w])) <= 1e-12


@pytest.mark.parametrize("m", range(3, 21))
def test_two_and_four_step_return(m):
    spec = nbw.nbw_spectrum(m, 4)
    K = nbw.krawtchouk_table(m)
    assert abs(nbw.nbw_transition(spec, K, 2, 0)) <= 1e-10
    assert abs(nbw.nbw_transition(spec, K, 4, 0) - 1 / (m - 1) ** 2) <= 1e-10
    assert nbw.exact_transitions(m, 4)[4][0] == Fraction(1, (m - 1) ** 2)


def test_krawtchouk_values_and_orthogonality():
    K = nbw.krawtchouk_table(4)
    # K_j(0) = C(m, j); K_1(w) = m - 2w
    assert [K[j, 0] for j in range(5)] == [1, 4, 6, 4, 1]
    assert [K[1, w] for w in range(5)] == [4, 2, 0, -2, -4]
    # direct character sums for m = 5
    m = 5
    K5 = nbw.krawtchouk_table(m)
    for w in range(m + 1):
        z = (1 << w) - 1
        for j in range(m + 1):
            direct = sum((-1) ** bin(k & z).count("1") for k in range(2**m) if bin(k).count("1") == j)
            assert K5[j, w] == direct
    assert all(krawtchouk_orthogonal(m) for m in range(1, 21))


def test_mass_and_parity():
    assert all(mass_and_parity(m, 12, True) == 0 for m in range(2, 9))
    assert all(mass_and_parity(m, 3 * m, False) <= 1e-9 for m in range(9, 21))


def test_simulation_matches_spectrum():
    m, T, walks = 6, 12, 200_000
    counts = nbw.hypercube_nbw_counts(m, T, walks, 3)
    table = nbw.transition_table(nbw.nbw_spectrum(m, T), nbw.krawtchouk_table(m))
    for t in range(T + 1):
        for w in range(m + 1):
            q = table[t, w] * math.comb(m, w)
            se = math.sqrt(max(q * (1 - q), 0.0) / walks)
            assert abs(counts[t, w] / walks - q) <= max(4 * se, 1e-12)


def test_simulate_nbw_never_backtracks():
    for spec in ("hypercube:m=5", "torus:n=5,d=2", "complete:n=6"):
        g = build(spec)
        traj = nbw.simulate_nbw(g, 0, 200, seed=1)
        for a, b in zip(traj, traj[1:]):
            assert b in g.neighbors(int(a))
        assert all(traj[i] != traj[i + 2] for i in range(len(traj) - 2))
        assert np.array_equal(traj, nbw.simulate_nbw(g, 0, 200, seed=1))


def test_mixing_time():
    # brute force: smallest t with max_w (p^t + p^{t+1}) / 2 <= (1 + xi) / V
    m, xi = 8, 0.1
    table = nbw.transition_table(nbw.nbw_spectrum(m, 200), nbw.krawtchouk_table(m))
    avg = 0.5 * (table[:-1] + table[1:]).max(axis=1)
    expect = int(np.flatnonzero(avg <= (1 + xi) / 2**m)[0])
    assert nbw.uniform_mixing_time(m, xi) == expect
    assert nbw.uniform_mixing_time(m, xi, tmax=3) == expect  # horizon doubling
    with pytest.raises(nbw.MixingError):
        nbw.uniform_mixing_time(2, 0.5)  # the walk on a 4-cycle rotates forever
    with pytest.raises(ValueError):
        nbw.uniform_mixing_time(8, 0.0)


def test_triangle_sum_against_matrix_products():
    m, L = 4, 5
    V = 2**m
    weight = np.array([bin(x).count("1") for x in range(V)])
    P = []
    for t in range(L + 1):
        row = np.array([float(q) for q in nbw_path_oracle(m, t)])
        P.append(np.array([[row[weight[x ^ y]] for y in range(V)] for x in range(V)]))
    A = sum(P)
    S = A @ A @ A - (np.eye(V) + 3 * P[1] + 3 * P[1] @ P[1] + 3 * P[2])
    ts = nbw.triangle_sum(nbw.nbw_spectrum(m, L), nbw.krawtchouk_table(m), L)
    assert ts.value == pytest.approx(S[0, 0], abs=1e-12)
    assert ts.sup == pytest.approx(S[0].max(), abs=1e-12)
    assert ts.k01_bound == 2 * L**3 / V
    assert nbw.triangle_sum(nbw.nbw_spectrum(m, L), nbw.krawtchouk_table(m), 0).value == 0.0


def test_input_validation():
    with pytest.raises(ValueError):
        nbw.nbw_spectrum(1, 3)
    with pytest.raises(ValueError):
        nbw.krawtchouk_table(0)
    spec = nbw.nbw_spectrum(4, 3)
    K = nbw.krawtchouk_table(4)
    with pytest.raises(ValueError):
        nbw.nbw_transition(spec, K, 4, 0)
    with pytest.raises(ValueError):
        nbw.nbw_transition(spec, K, 1, 5)


def test_condition_report():
    g = build("hypercube:m=12")
    rep = nbw.check_conditions(g, 1 / 11, 0.5, 3)
    assert rep.condition2 == pytest.approx(0.0, abs=1e-12)
    assert rep.condition3 == pytest.approx(rep.triangle * math.log(g.V) / 0.5)
