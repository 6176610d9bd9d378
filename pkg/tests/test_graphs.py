import networkx as nx
import numpy as np
import pytest

from percolab.graphs import EdgeRef, GraphError, GraphSpec, Hypercube, build


def as_nx(g):
    G = nx.Graph()
    G.add_nodes_from(range(g.V))
    u, v = g.all_edges()
    G.add_edges_from(zip(u.tolist(), v.tolist()))
    return G


def test_spec_round_trip():
    for text in ("hypercube:m=20", "hamming:n=10,d=3", "torus:n=7,d=2", "complete:n=100", "regular:n=50,m=3,seed=9"):
        spec = GraphSpec.parse(text)
        assert str(spec) == text
        assert GraphSpec.parse(str(spec)) == spec


@pytest.mark.parametrize("text", ["", "hypercube", "cube:m=3", "hypercube:m=x", "hypercube:m"])
def test_spec_rejects_garbage(text):
    with pytest.raises(GraphError):
        build(text)


def test_parameter_limits():
    with pytest.raises(GraphError):
        Hypercube(0)
    with pytest.raises(GraphError):
        Hypercube(31)
    with pytest.raises(GraphError):
        build("torus:n=2,d=2")
    with pytest.raises(GraphError):
        build("regular:n=5,m=3")  # n*m odd
    with pytest.raises(GraphError):
        build("hamming:n=3")


def test_counts(small_graph):
    g = small_graph
    assert g.edge_count * 2 == g.V * g.degree
    u, v = g.all_edges()
    assert u.shape == (g.edge_count,)
    assert np.all(u < v)
    pairs = set(zip(u.tolist(), v.tolist()))
    assert len(pairs) == g.edge_count


def test_neighbors_symmetric_and_regular(small_graph):
    g = small_graph
    for x in range(g.V):
        nb_ = g.neighbors(x)
        assert nb_.shape == (g.degree,)
        assert len(set(nb_.tolist())) == g.degree
        assert x not in nb_
        for y in nb_:
            assert x in g.neighbors(int(y))


def test_edge_index_bijection(small_graph):
    g = small_graph
    seen = set()
    for x in range(g.V):
        for d in range(g.degree):
            idx = g.edge_index(EdgeRef(x, d))
            assert 0 <= idx < g.edge_count
            u, v = g.endpoints(np.array([idx]))
            assert {int(u[0]), int(v[0])} == {x, int(g.neighbors(x)[d])}
            seen.add(idx)
    assert seen == set(range(g.edge_count))
    for idx in range(g.edge_count):
        ref = g.edge_ref(idx)
        assert g.is_canonical(ref)
        assert g.edge_index(ref) == idx
    assert sum(1 for _ in g.canonical_edges()) == g.edge_count


def test_matches_networkx_generators():
    assert nx.is_isomorphic(as_nx(build("hypercube:m=4")), nx.hypercube_graph(4))
    assert nx.is_isomorphic(as_nx(build("complete:n=6")), nx.complete_graph(6))
    assert nx.is_isomorphic(as_nx(build("torus:n=4,d=2")), nx.grid_graph([4, 4], periodic=True))
    # Hamming H(3, 2) is the 3x3 rook's graph
    rook = nx.cartesian_product(nx.complete_graph(3), nx.complete_graph(3))
    assert nx.is_isomorphic(as_nx(build("hamming:n=3,d=2")), rook)


def test_graph_distance(small_graph):
    g = small_graph
    G = as_nx(g)
    dist = dict(nx.single_source_shortest_path_length(G, 0))
    for y in range(g.V):
        assert g.graph_distance(0, y) == dist.get(y, -1)


def test_regular_is_deterministic_and_simple():
    a = build("regular:n=200,m=5,seed=3")
    b = build("regular:n=200,m=5,seed=3")
    assert np.array_equal(a.adjacency(), b.adjacency())
    assert a.girth_status == "unchecked"
    c = build("regular:n=200,m=5,seed=4")
    assert not np.array_equal(a.adjacency(), c.adjacency())


def test_large_hypercube_is_lazy():
    g = build("hypercube:m=30")
    assert g.V == 2**30
    assert g.edge_count == 30 * 2**29
    x = 123456789
    assert sorted(g.neighbors(x).tolist()) == sorted(x ^ (1 << i) for i in range(30))
    idx = g.edge_index(EdgeRef(x, 29))
    u, v = g.endpoints(np.array([idx]))
    assert {int(u[0]), int(v[0])} == {x, x ^ (1 << 29)}


def test_vertex_checks():
    g = build("hypercube:m=3")
    with pytest.raises(IndexError):
        g.neighbors(8)
    with pytest.raises(IndexError):
        g.edge_index(EdgeRef(0, 3))
