import networkx as nx
import numpy as np
import pytest

from cmoment.graphs import (
    Graph, chordal_extension, chordal_extension_greedy, chordal_extension_maximal,
    maximal_cliques,
)

from _helpers import is_chordal_mcs


def random_graph(rng, n, p):
    g = Graph(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.uniform() < p:
                g.add_edge(i, j)
    return g


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(g.nodes)
    h.add_edges_from(g.edges())
    return h


class TestMaximalExtension:
    def test_path_becomes_one_clique(self):
        g = Graph("abc", [("a", "b"), ("b", "c")])
        cg = chordal_extension_maximal(g)
        assert cg.cliques == [("a", "b", "c")]

    def test_isolated_nodes(self):
        g = Graph([1, 2])
        cg = chordal_extension_maximal(g)
        assert cg.cliques == [(1,), (2,)]

    def test_components_become_cliques(self):
        # same component layout as the stabilized two-variable basis graph:
        # a 3-chain, an isolated node and a 2-chain
        nodes = ["1", "z1", "z1^2", "z2^2", "z2", "z1z2"]
        g = Graph(nodes, [("1", "z1"), ("z1", "z1^2"), ("z2", "z1z2")])
        cg = chordal_extension_maximal(g)
        assert sorted(len(c) for c in cg.cliques) == [1, 2, 3]
        assert set(map(frozenset, cg.cliques)) == {
            frozenset({"1", "z1", "z1^2"}),
            frozenset({"z2^2"}),
            frozenset({"z2", "z1z2"}),
        }


class TestGreedyExtension:
    def test_four_cycle_gets_one_chord(self):
        g = Graph("abcd", [("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")])
        for heuristic in ("min-degree", "min-fill"):
            cg = chordal_extension_greedy(g, heuristic)
            assert cg.num_edges() == 5
            assert sorted(len(c) for c in cg.cliques) == [3, 3]

    def test_chordal_input_untouched(self):
        g = Graph(range(4), [(0, 1), (1, 2), (0, 2), (2, 3)])
        cg = chordal_extension_greedy(g, "min-fill")
        assert cg.num_edges() == g.num_edges()

    @pytest.mark.parametrize("heuristic", ["min-degree", "min-fill"])
    def test_random_graphs_verified_by_independent_checker(self, heuristic):
        rng = np.random.default_rng(7)
        for _ in range(15):
            g = random_graph(rng, 12, 0.25)
            cg = chordal_extension_greedy(g, heuristic)
            # input edges preserved, nodes unchanged
            assert set(g.nodes) == set(cg.nodes)
            for a, b in g.edges():
                assert cg.has_edge(a, b)
            assert is_chordal_mcs(cg.nodes, cg.adj)
            assert nx.is_chordal(to_nx(cg))

    def test_fill_edges_stay_within_components(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            g1 = random_graph(rng, 6, 0.4)
            g = Graph(range(12))
            for a, b in g1.edges():
                g.add_edge(a, b)
                g.add_edge(a + 6, b + 6)
            comp_of = {}
            for ci, comp in enumerate(g.connected_components()):
                for v in comp:
                    comp_of[v] = ci
            cg = chordal_extension_greedy(g, "min-fill")
            for a, b in cg.edges():
                assert comp_of[a] == comp_of[b]


class TestMaximalCliques:
    def test_complete_graph(self):
        g = Graph(range(4), [(i, j) for i in range(4) for j in range(i + 1, 4)])
        cg = chordal_extension_greedy(g, "min-fill")
        assert maximal_cliques(cg) == [(0, 1, 2, 3)]

    def test_path(self):
        g = Graph("abc", [("a", "b"), ("b", "c")])
        cg = chordal_extension_greedy(g, "min-fill")
        assert set(map(frozenset, cg.cliques)) == {
            frozenset({"a", "b"}), frozenset({"b", "c"})}

    def test_against_networkx_enumeration(self):
        rng = np.random.default_rng(21)
        for _ in range(15):
            g = random_graph(rng, 13, 0.3)
            cg = chordal_extension_greedy(g, "min-degree")
            ours = set(map(frozenset, cg.cliques))
            theirs = set(map(frozenset, nx.find_cliques(to_nx(cg))))
            assert ours == theirs
            assert len(ours) <= len(cg.nodes)
            # every edge covered by at least one clique
            for a, b in cg.edges():
                assert any(a in c and b in c for c in ours)


class TestConnectedComponents:
    def test_single_component(self):
        g = Graph(range(3), [(0, 1), (1, 2)])
        assert g.connected_components() == [[0, 1, 2]]

    def test_two_components(self):
        g = Graph(range(4), [(0, 1), (2, 3)])
        assert g.connected_components() == [[0, 1], [2, 3]]

    def test_isolated(self):
        g = Graph("xyz")
        assert g.connected_components() == [["x"], ["y"], ["z"]]


def test_dispatch_names():
    g = Graph(range(3), [(0, 1)])
    for name in ("max", "md", "mf", "min-degree", "min-fill"):
        cg = chordal_extension(g, name)
        assert is_chordal_mcs(cg.nodes, cg.adj)
    with pytest.raises(ValueError):
        chordal_extension(g, "bogus")
