import networkx as nx
import numpy as np
import pytest

from percolab.graphs import build
from percolab.intrinsic import MAX_RADIUS, ball, disjoint_survival, survival_event
from percolab.rng import EdgeRandomness


def open_graph(g, rand, p, forbidden=()):
    G = nx.Graph()
    G.add_nodes_from(range(g.V))
    u, v = g.endpoints(rand.open_edges(p)[0])
    forb = set(forbidden)
    G.add_edges_from((a, b) for a, b in zip(u.tolist(), v.tolist()) if a not in forb and b not in forb)
    return G


@pytest.mark.parametrize("spec,p", [("hypercube:m=8", 0.3), ("torus:n=9,d=2", 0.6), ("complete:n=30", 0.06)])
def test_shells_match_bfs(spec, p):
    g = build(spec)
    rand = EdgeRandomness(3, g.edge_count)
    dist = nx.single_source_shortest_path_length(open_graph(g, rand, p), 0)
    for r in (0, 1, 2, 5, 40):
        b = ball(g, rand, p, 0, r)
        expect = np.bincount([d for d in dist.values() if d <= r], minlength=r + 1)
        assert b.shell_sizes.tolist() == expect.tolist()
        for t in range(r + 1):
            assert sorted(b.shell(t).tolist()) == sorted(x for x, d in dist.items() if d == t)
        assert b.survived == (expect[r] > 0)
        assert survival_event(g, rand, p, 0, r) == b.survived


def test_ball_off_forbidden_set():
    g = build("hypercube:m=8")
    rand = EdgeRandomness(8, g.edge_count)
    forb = [1, 2, 4, 8]
    dist = nx.single_source_shortest_path_length(open_graph(g, rand, 0.4, forb), 0)
    b = ball(g, rand, 0.4, 0, 12, forbidden=forb)
    expect = np.bincount([d for d in dist.values() if d <= 12], minlength=13)
    assert b.shell_sizes.tolist() == expect.tolist()
    assert not set(b.vertices.tolist()) & set(forb)
    with pytest.raises(ValueError):
        ball(g, rand, 0.4, 1, 3, forbidden=forb)


def test_ball_monotone_in_p_and_r():
    g = build("hypercube:m=10")
    rand = EdgeRandomness(1, g.edge_count)
    prev = -1
    for p in (0.05, 0.1, 0.2):
        tot = ball(g, rand, p, 0, 6).total
        assert tot >= prev
        prev = tot
    sizes = [ball(g, rand, 0.15, 0, r).total for r in range(8)]
    assert sizes == sorted(sizes)


def test_disjoint_survival():
    g = build("hypercube:m=8")
    rand = EdgeRandomness(2, g.edge_count)
    assert disjoint_survival(g, rand, 1.0, 0, 255, 1, 1)
    assert not disjoint_survival(g, rand, 1.0, 0, 255, 5, 5)  # both balls cover everything
    assert not disjoint_survival(g, rand, 0.0, 0, 255, 1, 1)
    with pytest.raises(ValueError):
        disjoint_survival(g, rand, 0.5, 3, 3, 1, 1)


def test_radius_validation():
    g = build("hypercube:m=3")
    rand = EdgeRandomness(0, g.edge_count)
    with pytest.raises(ValueError):
        ball(g, rand, 0.5, 0, -1)
    with pytest.raises(ValueError):
        ball(g, rand, 0.5, 0, MAX_RADIUS + 1)
    with pytest.raises(IndexError):
        ball(g, rand, 0.5, 8, 1)
