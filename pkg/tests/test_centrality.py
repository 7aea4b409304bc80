import numpy as np
import pytest

from cyberlab.centrality import (CentralityVector, allocation_weights,
                                 betweenness_centrality, degree_centrality,
                                 edge_betweenness, inverse_weights,
                                 write_centrality_csv)
from cyberlab.graphs import Graph, erdos_renyi, fixture

from conftest import all_graphs, brute_force_betweenness


class TestCentralityVector:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            CentralityVector(np.ones(3), "closeness")

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            CentralityVector(np.array([1.0, -0.5]), "degree")

    def test_ranking_tie_break(self):
        c = CentralityVector(np.array([2.0, 5.0, 2.0, 5.0]), "degree")
        assert c.ranking() == [1, 3, 0, 2]


class TestDegree:
    def test_tree8(self):
        c = degree_centrality(fixture("tree8"))
        assert c.values[1] == 3  # 1-based label 2

    def test_star8(self):
        c = degree_centrality(fixture("star8")).values
        assert c[0] == 7 and set(c[1:]) == {1}

    def test_empty(self):
        assert np.all(degree_centrality(Graph(4, [])).values == 0)

    def test_sums_to_twice_edges(self):
        g = erdos_renyi(30, 0.2, 3)
        assert degree_centrality(g).values.sum() == 2 * g.num_edges


class TestBetweenness:
    def test_tree8_node(self):
        c = betweenness_centrality(fixture("tree8")).values
        assert c[1] == pytest.approx(15.0)  # 1-based label 2

    def test_star8_hub(self):
        c = betweenness_centrality(fixture("star8")).values
        assert c[0] == pytest.approx(21.0)
        assert np.allclose(c[1:], 0.0)

    def test_complete8_all_zero(self):
        assert np.allclose(betweenness_centrality(fixture("complete8")).values, 0.0)

    def test_tree_sum_identity(self):
        # on a tree each pair has a unique path: sum = sum over pairs of
        # (path length - 1)
        from cyberlab.graphs import shortest_path_lengths
        g = fixture("tree8")
        d = shortest_path_lengths(g)
        expected = sum(d[i][j] - 1 for i in range(8) for j in range(i + 1, 8))
        assert betweenness_centrality(g).values.sum() == pytest.approx(expected)


class TestEdgeBetweenness:
    def test_tree8_edges(self):
        eb = edge_betweenness(fixture("tree8"))
        assert eb[(1, 2)] == pytest.approx(15.0)  # 1-based edge (2,3): 3x5 split
        assert eb[(0, 1)] == pytest.approx(7.0)   # 1-based edge (1,2): 1x7 split

    def test_complete3(self):
        g = Graph(3, [(0, 1), (0, 2), (1, 2)])
        assert all(v == pytest.approx(1.0) for v in edge_betweenness(g).values())

    def test_tree_product_rule(self):
        # tree edge value = product of component sizes after its removal
        g = fixture("tree8")
        eb = edge_betweenness(g)
        from cyberlab.graphs import connected_components
        for e, val in eb.items():
            parts = connected_components(g.without_edges([e]))
            assert len(parts) == 2
            assert val == pytest.approx(len(parts[0]) * len(parts[1]))


class TestBruteForceEquivalence:
    def test_all_graphs_up_to_5(self):
        for n in range(2, 6):
            for g in all_graphs(n):
                node_ref, edge_ref = brute_force_betweenness(g)
                assert np.allclose(betweenness_centrality(g).values, node_ref)
                eb = edge_betweenness(g)
                for e, val in edge_ref.items():
                    assert eb[e] == pytest.approx(val)

    @pytest.mark.parametrize("n", [6, 7])
    def test_random_graphs_6_7(self, n, rng):
        for _ in range(60):
            g = erdos_renyi(n, float(rng.uniform(0.2, 0.9)),
                            int(rng.integers(2 ** 31)))
            node_ref, edge_ref = brute_force_betweenness(g)
            assert np.allclose(betweenness_centrality(g).values, node_ref)
            eb = edge_betweenness(g)
            for e, val in edge_ref.items():
                assert eb[e] == pytest.approx(val)

    def test_matches_networkx(self):
        nx = pytest.importorskip("networkx")
        g = erdos_renyi(40, 0.12, 11)
        h = nx.Graph()
        h.add_nodes_from(range(g.n))
        h.add_edges_from(g.sorted_edges())
        ref = nx.betweenness_centrality(h, normalized=False)
        ours = betweenness_centrality(g).values
        assert np.allclose(ours, [ref[i] for i in range(g.n)])
        eref = nx.edge_betweenness_centrality(h, normalized=False)
        eb = edge_betweenness(g)
        for e, val in eb.items():
            # networkx counts ordered pairs' endpoints the same way but
            # includes the endpoint pair once per unordered pair
            assert val == pytest.approx(eref[e])


class TestWeights:
    def test_allocation_weights(self):
        w = allocation_weights(CentralityVector(np.array([1.0, 1.0, 2.0]), "degree"))
        assert np.allclose(w, [0.25, 0.25, 0.5])

    def test_zero_entries_kept(self):
        w = allocation_weights(np.array([0.0, 3.0, 1.0]))
        assert np.allclose(w, [0.0, 0.75, 0.25])

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            allocation_weights(np.zeros(3))

    def test_scale_invariance(self):
        c = np.array([1.0, 4.0, 2.0])
        assert np.allclose(allocation_weights(c), allocation_weights(17.3 * c))

    def test_inverse_weights(self):
        assert np.allclose(inverse_weights(np.array([0.5, 0.5, 0.0])), [2, 2, 0])
        assert np.allclose(inverse_weights(np.array([0.25, 0.75])), [4, 4 / 3])


def test_centrality_csv(tmp_path):
    path = tmp_path / "c.csv"
    write_centrality_csv(fixture("star8"), path, investment=np.ones(8))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "node,degree,betweenness,investment"
    assert len(lines) == 9
