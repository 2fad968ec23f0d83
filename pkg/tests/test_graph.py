import numpy as np
import pytest

from cliquepgd import (InputError, ResourceLimitError, build_graph,
                       graph_from_cliques, maximal_cliques, neighbors,
                       verify_neighbor_clique_identity)
from cliquepgd.graph import CliqueCover
from cliquepgd.instances import bruteforce_maximal_cliques, random_er_graph

FIG1_CLIQUES = (
    tuple(range(0, 6)),
    tuple(range(4, 9)),
    tuple(range(7, 12)),
    (8, 9) + tuple(range(12, 20)),
)


def fig1_graph():
    return graph_from_cliques(20, FIG1_CLIQUES)


def test_build_path_graph():
    g = build_graph(3, [(0, 1), (1, 2)])
    assert neighbors(g, 0) == {0, 1}
    assert neighbors(g, 1) == {0, 1, 2}
    assert g.num_edges == 2


def test_duplicate_and_reversed_edges_merge():
    g = build_graph(3, [(0, 1), (1, 0), (0, 1)])
    assert g.num_edges == 1
    assert g.edges == [(0, 1)]


def test_build_graph_errors():
    with pytest.raises(InputError):
        build_graph(3, [(0, 3)])
    with pytest.raises(InputError):
        build_graph(3, [(1, 1)])
    with pytest.raises(InputError):
        build_graph(0, [])
    with pytest.raises(InputError):
        neighbors(build_graph(2, [(0, 1)]), 2)


def test_triangle_single_clique():
    g = build_graph(3, [(0, 1), (1, 2), (0, 2)])
    cover = maximal_cliques(g)
    assert cover.cliques == ((0, 1, 2),)
    assert np.allclose(cover.weights, 1.0)


def test_path_cliques_and_weights():
    cover = maximal_cliques(build_graph(3, [(0, 1), (1, 2)]))
    assert cover.cliques == ((0, 1), (1, 2))
    assert cover.membership == ((0,), (0, 1), (1,))
    assert np.allclose(cover.weights, [1.0, 0.5, 1.0])


def test_isolated_node_is_singleton_clique():
    cover = maximal_cliques(build_graph(3, [(0, 1)]))
    assert cover.cliques == ((0, 1), (2,))
    assert np.allclose(cover.weights, 1.0)
    assert neighbors(build_graph(3, [(0, 1)]), 2) == {2}


def test_fig1_network_cliques():
    g = fig1_graph()
    cover = maximal_cliques(g)
    assert cover.cliques == FIG1_CLIQUES
    w = cover.weights
    assert np.allclose(w[[4, 5, 7, 9]], 0.5)
    assert w[8] == pytest.approx(1.0 / 3.0)
    others = [i for i in range(20) if i not in (4, 5, 7, 8, 9)]
    assert np.allclose(w[others], 1.0)
    # closed neighborhood of node 8 by brute-force adjacency scan
    expected = {j for (i, j) in g.edges if i == 8}
    expected |= {i for (i, j) in g.edges if j == 8}
    expected.add(8)
    assert neighbors(g, 8) == expected == set(range(4, 20))


def test_neighbor_clique_identity():
    g = fig1_graph()
    cover = maximal_cliques(g)
    assert verify_neighbor_clique_identity(g, cover)
    # removing a clique breaks the union identity
    broken = CliqueCover(
        cliques=cover.cliques[:-1],
        membership=tuple(tuple(l for l in m if l < cover.q - 1)
                         for m in cover.membership),
        local_rank={k: v for k, v in cover.local_rank.items()
                    if k[0] < cover.q - 1},
        weights=cover.weights,
    )
    assert not verify_neighbor_clique_identity(g, broken)


def test_local_rank_roundtrip():
    rng = np.random.default_rng(7)
    for _ in range(20):
        g = random_er_graph(rng, int(rng.integers(2, 11)), 0.5)
        cover = maximal_cliques(g)
        for (l, i), pos in cover.local_rank.items():
            assert cover.cliques[l][pos] == i


def test_enumeration_matches_bruteforce():
    rng = np.random.default_rng(11)
    for _ in range(60):
        n = int(rng.integers(2, 13))
        g = random_er_graph(rng, n, float(rng.choice((0.2, 0.5, 0.8))))
        assert set(maximal_cliques(g).cliques) == bruteforce_maximal_cliques(g)
        assert verify_neighbor_clique_identity(g, maximal_cliques(g))


def test_enumeration_deterministic():
    rng = np.random.default_rng(13)
    g = random_er_graph(rng, 10, 0.6)
    assert maximal_cliques(g).cliques == maximal_cliques(g).cliques


def test_clique_count_cap():
    # complement of a perfect matching on 6 nodes has 2^3 maximal cliques
    edges = [(i, j) for i in range(6) for j in range(i + 1, 6)
             if {i, j} not in ({0, 1}, {2, 3}, {4, 5})]
    g = build_graph(6, edges)
    assert len(maximal_cliques(g).cliques) == 8
    with pytest.raises(ResourceLimitError):
        maximal_cliques(g, cap=5)
