import itertools

import networkx as nx
import numpy as np
import pytest

from percolab.graphs import build
from percolab.oracle import (
    MAX_ORACLE_EDGES, ExactOracle, OracleRefusal, check_differential_inequalities, exact_small_oracle,
)


def brute_tau(g, p):
    u, v = g.all_edges()
    tau = np.zeros((g.V, g.V))
    for bits in itertools.product((0, 1), repeat=g.edge_count):
        w = np.prod([p if b else 1 - p for b in bits])
        G = nx.Graph()
        G.add_nodes_from(range(g.V))
        G.add_edges_from((int(a), int(b)) for a, b, o in zip(u, v, bits) if o)
        for comp in nx.connected_components(G):
            c = list(comp)
            tau[np.ix_(c, c)] += w
    return tau


def test_hand_values_square():
    orc = ExactOracle(build("hypercube:m=2"))
    assert orc.connection(0.5, 0, 3) == pytest.approx(7 / 16, abs=1e-15)
    assert orc.connection(0.5, 0, 1) == pytest.approx(9 / 16, abs=1e-15)
    assert orc.chi(0.5) == pytest.approx(41 / 16, abs=1e-15)


def test_single_edge_closed_forms():
    orc = ExactOracle(build("complete:n=2"))
    for p in (0.1, 0.5, 0.9):
        assert orc.connection(p, 0, 1) == pytest.approx(p)
        assert orc.chi(p) == pytest.approx(1 + p)
        for gm in (0.2, 0.7):
            assert orc.magnetization(p, gm) == pytest.approx(1 - (1 - gm) * (1 - p + p * (1 - gm)))


@pytest.mark.parametrize("spec", ["hypercube:m=2", "complete:n=4", "hypercube:m=3"])
def test_tau_matches_independent_enumeration(spec):
    g = build(spec)
    orc = ExactOracle(g)
    for p in (0.2, 0.65):
        assert np.allclose(orc.tau(p), brute_tau(g, p), atol=1e-13)


def test_cluster_law_and_magnetization():
    g = build("hypercube:m=3")
    point, law = exact_small_oracle(g, 0.4, 0.3)
    assert law[0] == 0
    assert law.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.arange(law.size) @ law == pytest.approx(ExactOracle(g).chi(0.4))
    assert point.method == "exact-enumeration"
    orc = ExactOracle(g)
    assert orc.magnetization(0.4, 0.0) == 0.0
    assert orc.magnetization(0.4, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_analytic_derivatives():
    orc = ExactOracle(build("complete:n=4"))
    h = 1e-6
    for p in (0.2, 0.5, 0.8):
        for gm in (0.1, 0.6):
            fd_p = (orc.magnetization(p + h, gm) - orc.magnetization(p - h, gm)) / (2 * h)
            fd_g = (orc.magnetization(p, gm + h) - orc.magnetization(p, gm - h)) / (2 * h)
            assert orc.dM_dp(p, gm) == pytest.approx(fd_p, abs=1e-7)
            assert orc.dM_dgamma(p, gm) == pytest.approx(fd_g, abs=1e-7)


def test_nabla():
    g = build("hypercube:m=2")
    orc = ExactOracle(g)
    tau = orc.tau(0.5)
    assert orc.nabla(0.5)[0, 3] == pytest.approx(sum(tau[0, u] * tau[u, v] * tau[v, 3] for u in range(4) for v in range(4)))
    off = [orc.nabla(0.5)[x, y] for x in range(4) for y in range(4) if x != y]
    assert orc.nabla_max(0.5) == pytest.approx(max(off))


def test_refusal():
    with pytest.raises(OracleRefusal):
        ExactOracle(build("hypercube:m=4"))  # 32 edges
    assert build("hypercube:m=3").edge_count <= MAX_ORACLE_EDGES


@pytest.mark.parametrize("spec", ["hypercube:m=2", "hypercube:m=3", "complete:n=4"])
def test_differential_inequalities_hold(spec):
    grid = [i / 10 for i in range(1, 10)]
    rows = check_differential_inequalities(build(spec), grid, grid)
    assert len(rows) == 81
    for r in rows:
        assert min(r.slack_ineq1, r.slack_ineq2, r.slack_rdi) >= -1e-8


def test_inequality_grid_validation():
    with pytest.raises(ValueError):
        check_differential_inequalities(build("hypercube:m=2"), [0.0], [0.5])
    with pytest.raises(ValueError):
        check_differential_inequalities(build("hypercube:m=2"), [0.5], [1.0])
