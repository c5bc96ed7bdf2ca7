import pytest

from eudparse.conllu import NodeId
from eudparse.graph import (
    EudGraph,
    GraphError,
    from_graph,
    node_index_map,
    reach_count,
    reachable_from_root,
    to_graph,
)

from conftest import sent, synth_treebank, tok


def graph(m, edges, ids=None):
    node_ids = ids if ids is not None else tuple(NodeId(i) for i in range(1, m + 1))
    return EudGraph(m=m, node_ids=node_ids, edges=frozenset(edges))


class TestIndexing:
    def test_interleaved_order_with_empty_node(self):
        tokens = [tok("1", "a"), tok("2", "b"), tok("3", "c", deps=[("0", "root")]),
                  tok("3.1", "e"), tok("4", "d", deps=[("3", "obj")]), tok("5", "f")]
        s = sent(tokens)
        index = node_index_map(s)
        assert index[NodeId(4)] == 5
        assert index[NodeId(3, 1)] == 4
        assert index[NodeId(5)] == 6

    def test_identity_mapping_without_empty_nodes(self):
        s = sent([tok(str(i), "w") for i in range(1, 6)])
        index = node_index_map(s)
        assert all(index[NodeId(k)] == k for k in range(1, 6))

    def test_two_empty_nodes_after_token_one(self):
        # surface order 1, 1.1, 1.2, 2 puts token 2 at index 4
        s = sent([tok("1", "a"), tok("1.1", "e1"), tok("1.2", "e2"), tok("2", "b")])
        assert node_index_map(s)[NodeId(2)] == 4

    def test_index_map_is_bijection(self):
        for s in synth_treebank(10, seed=5):
            index = node_index_map(s)
            assert sorted(index.values()) == list(range(1, len(s.tokens) + 1))


class TestToFromGraph:
    def test_offsets_heads_past_empty_nodes(self):
        s = sent([tok("1", "a", deps=[("0", "root")]),
                  tok("1.1", "e", deps=[("1", "obj")]),
                  tok("2", "b", deps=[("1", "nsubj")])])
        g = to_graph(s)
        assert g.edges == {(0, 1, "root"), (1, 2, "obj"), (1, 3, "nsubj")}

    def test_dangling_head_names_node(self):
        s = sent([tok("1", "a", deps=[("7", "det")])])
        with pytest.raises(GraphError) as err:
            to_graph(s)
        assert "7" in str(err.value)

    def test_single_root_edge(self):
        s = sent([tok("1", "a", deps=[("0", "root")])])
        g = from_graph(graph(1, {(0, 1, "root")}), sent([tok("1", "a")]))
        assert g == s

    def test_round_trip_on_fixtures(self):
        for s in synth_treebank(15, seed=9):
            g = to_graph(s)
            assert to_graph(from_graph(g, s)) == g

    def test_empty_edge_set_writes_underscores(self):
        s = sent([tok("1", "a", deps=[("0", "root")]), tok("2", "b", deps=[("1", "det")])])
        out = from_graph(graph(2, set()), s)
        assert all(t.deps == () for t in out.tokens)

    def test_node_count_mismatch(self):
        with pytest.raises(GraphError):
            from_graph(graph(3, set()), sent([tok("1", "a")]))


class TestInvariants:
    def test_root_never_dependent(self):
        with pytest.raises(GraphError):
            graph(2, {(1, 0, "x")})

    def test_no_self_loops(self):
        with pytest.raises(GraphError):
            graph(2, {(1, 1, "x")})

    def test_cycles_are_permitted(self):
        g = graph(2, {(0, 1, "a"), (1, 2, "b"), (2, 1, "c")})
        assert reachable_from_root(g) == {1, 2}


class TestReachability:
    def test_chain(self):
        g = graph(3, {(0, 1, "a"), (1, 2, "b")})
        assert reachable_from_root(g) == {1, 2}

    def test_empty_graph(self):
        assert reachable_from_root(graph(2, set())) == frozenset()

    def test_monotone_under_edge_addition(self):
        import numpy as np

        rng = np.random.default_rng(2)
        for _ in range(50):
            m = int(rng.integers(2, 9))
            edges = {(int(h), int(d), "x")
                     for h in range(m + 1) for d in range(1, m + 1)
                     if h != d and rng.random() < 0.2}
            g = graph(m, edges)
            before = reachable_from_root(g)
            h = int(rng.integers(0, m + 1))
            d = int(rng.integers(1, m + 1))
            if h == d:
                continue
            g2 = graph(m, edges | {(h, d, "y")})
            assert before <= reachable_from_root(g2)


class TestReachCount:
    def test_two_cycle(self):
        g = graph(4, {(3, 4, "a"), (4, 3, "b")})
        assert reach_count(g, 3, {3, 4}) == 1
        assert reach_count(g, 4, {3, 4}) == 1

    def test_no_outgoing(self):
        g = graph(5, set())
        assert reach_count(g, 5, {5}) == 0

    def test_chain_of_three(self):
        g = graph(4, {(2, 3, "a"), (3, 4, "b")})
        assert reach_count(g, 2, {2, 3, 4}) == 2
        assert reach_count(g, 3, {2, 3, 4}) == 1

    def test_candidate_must_be_unreachable(self):
        g = graph(2, set())
        with pytest.raises(GraphError):
            reach_count(g, 1, {2})

    def test_counts_paths_through_reachable_nodes(self):
        # 3 reaches 5 via the reachable node 1
        g = graph(5, {(0, 1, "r"), (3, 1, "a"), (1, 5, "b")})
        assert reach_count(g, 3, {3, 5}) == 1
