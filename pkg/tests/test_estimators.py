import math

import numpy as np
import pytest

from percolab.estimators import (
    ReplicateAborted, TargetUnreachable, ball_volumes, chi, cluster_statistics, cluster_tail,
    connection_probability, estimate_pc, k0_threshold, magnetization, survival_probability, triangle_diagram,
)
from percolab.graphs import build
from percolab.oracle import ExactOracle


def within(est, exact, se, k=4.0):
    return abs(est - exact) <= k * se + 1e-12


@pytest.fixture(scope="module")
def cube3():
    g = build("hypercube:m=3")
    return g, ExactOracle(g)


def test_chi_matches_oracle(cube3):
    g, orc = cube3
    for p in (0.2, 0.5):
        rep = chi(g, p, 3000, seed=1)
        assert within(rep.mean, orc.chi(p), rep.std_error)
        assert rep.name == "chi" and rep.replicates == 3000


def test_tail_and_connection_match_oracle(cube3):
    g, orc = cube3
    p = 0.4
    law = orc.cluster_law(p)
    for k in (2, 5):
        for method in ("z", "origin"):
            rep = cluster_tail(g, p, k, 3000, seed=2, method=method)
            assert within(rep.mean, law[k:].sum(), rep.std_error)
    rep = connection_probability(g, p, 0, 7, 3000, seed=3)
    assert within(rep.mean, orc.connection(p, 0, 7), rep.std_error)
    with pytest.raises(ValueError):
        cluster_tail(g, p, 0, 10, 0)
    with pytest.raises(ValueError):
        cluster_tail(g, p, 2, 10, 0, method="bogus")


def test_survival_and_first_shell():
    g = build("hypercube:m=6")
    p = 0.2
    rep = survival_probability(g, p, 1, 4000, seed=4)
    assert within(rep.mean, 1 - (1 - p) ** 6, rep.std_error)
    bv = ball_volumes(g, p, 3, 4000, seed=4)
    assert bv.shell_mean[0] == 1.0
    assert within(bv.shell_mean[1], 6 * p, bv.shell_se[1])
    assert np.all(np.diff(bv.ball_mean) >= 0)
    with pytest.raises(ValueError):
        survival_probability(g, p, 0, 10, 0)


def test_triangle_and_magnetization_match_oracle(cube3):
    g, orc = cube3
    p = 0.5
    rep = triangle_diagram(g, p, 0, 7, 3000, seed=5)
    assert within(rep.mean, orc.nabla(p)[0, 7], rep.std_error)
    assert rep.extra["aborted"] == 0 and not rep.extra["biased"]
    pt = magnetization(g, p, 0.3, 3000, seed=6)
    assert within(pt.M, orc.magnetization(p, 0.3), pt.std_error)
    assert magnetization(g, p, 0.0, 5, 0).M == 0.0
    assert magnetization(g, p, 1.0, 5, 0).M == 1.0
    with pytest.raises(ValueError):
        magnetization(g, p, 1.5, 5, 0)


def test_triangle_cost_cap():
    g = build("hypercube:m=6")
    rep = triangle_diagram(g, 0.3, 0, 0, 200, seed=1, cost_cap=40)
    assert rep.extra["aborted"] > 0 and rep.extra["biased"]
    with pytest.raises(ReplicateAborted):
        triangle_diagram(g, 0.9, 0, 0, 20, seed=1, cost_cap=1)


def test_estimate_pc_brackets_and_self_consistency():
    g = build("hypercube:m=10")
    pc = estimate_pc(g, 1.0, replicates=20, seed=3)
    assert pc.width <= 1e-3 / 10**3
    assert pc.bracket[0] <= pc.p_hat <= pc.bracket[1]
    assert pc.chi_lo.mean <= pc.target < pc.chi_hi.mean
    rep = pc.chi_at_p_hat
    assert abs(rep.mean - pc.target) <= 2 * rep.std_error
    again = estimate_pc(g, 1.0, replicates=20, seed=3)
    assert again.p_hat == pc.p_hat


def test_estimate_pc_complete_graph_window():
    n = 20_000
    g = build(f"complete:n={n}")
    pc = estimate_pc(g, 1.0, replicates=20, seed=1)
    assert abs(pc.p_hat * n - 1) <= 2 * n ** (-1 / 3)


def test_estimate_pc_errors():
    g = build("hypercube:m=6")
    with pytest.raises(TargetUnreachable):
        estimate_pc(g, 64 ** (2 / 3) + 1, replicates=4)
    with pytest.raises(ValueError):
        estimate_pc(g, 0.0)
    with pytest.raises(ValueError):
        estimate_pc(g, 0.1, tolerance=0.0)


def test_worker_count_never_changes_results():
    g = build("hypercube:m=9")
    for fn, kw in ((chi, {"p": 0.15}), (cluster_tail, {"p": 0.15, "k": 10}), (survival_probability, {"p": 0.15, "r": 3})):
        a = fn(g, replicates=10, seed=7, workers=1, **kw).as_dict()
        b = fn(g, replicates=10, seed=7, workers=3, **kw).as_dict()
        a.pop("elapsed_s")
        b.pop("elapsed_s")
        assert a == b
    s1 = cluster_statistics(g, 0.15, 6, 1, ks=(5,), workers=1)
    s2 = cluster_statistics(g, 0.15, 6, 1, ks=(5,), workers=2)
    assert all(np.array_equal(s1[k], s2[k]) for k in s1)


def test_k0_threshold():
    assert k0_threshold(0.1, 2**20) == math.ceil(100 * (1e-3 * 2**20) ** 0.25)
    assert k0_threshold(0.1, 2**20) == 570


def test_needs_two_replicates():
    with pytest.raises(ValueError):
        chi(build("hypercube:m=3"), 0.5, 1, 0)
