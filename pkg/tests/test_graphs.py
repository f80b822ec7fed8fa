import numpy as np
import pytest

from graphseq.graphs import (DirectedGraph, GraphError, GraphFileError, LabeledGraph,
                             Sample, add_supernode, parse_graph_file, sample_from_dict,
                             sample_neighbors, sample_to_dict, transform_labeled_edges,
                             write_samples)
from graphseq.rng import Rng


def random_graph(rng, n=8, extra_edges=10):
    edges = set()
    while len(edges) < extra_edges:
        u = rng.integers(0, n)
        v = rng.integers(0, n)
        if u != v:
            edges.add((u, v))
    return DirectedGraph([str(i) for i in range(n)], sorted(edges))


class TestNeighbors:
    def test_forward_direct_readoff(self):
        g = DirectedGraph(["a", "b", "c"], [(0, 1), (0, 2)])
        assert g.forward_neighbors(0) == [1, 2]

    def test_forward_empty(self):
        g = DirectedGraph(["a", "b"], [(0, 1)])
        assert g.forward_neighbors(1) == []

    def test_backward_direct_readoff(self):
        g = DirectedGraph(["a", "b", "c"], [(0, 1), (2, 1)])
        assert g.backward_neighbors(1) == [0, 2]

    def test_backward_source_empty(self):
        g = DirectedGraph(["a", "b"], [(0, 1)])
        assert g.backward_neighbors(0) == []

    def test_matches_edge_list_scan(self):
        # independent oracle: scan the raw edge list
        g = random_graph(Rng(5))
        for v in range(g.num_nodes):
            assert g.forward_neighbors(v) == [d for s, d in g.edges if s == v]
            assert g.backward_neighbors(v) == [s for s, d in g.edges if d == v]

    def test_adjacency_duality(self):
        g = random_graph(Rng(17), n=12, extra_edges=25)
        for v in range(g.num_nodes):
            for u in g.forward_neighbors(v):
                assert v in g.backward_neighbors(u)
            for u in g.backward_neighbors(v):
                assert v in g.forward_neighbors(u)

    def test_invalid_id(self):
        g = DirectedGraph(["a"], [])
        with pytest.raises(GraphError):
            g.forward_neighbors(1)


class TestConstruction:
    def test_rejects_self_loop(self):
        with pytest.raises(GraphError, match="self-loop"):
            DirectedGraph(["a", "b"], [(0, 0)])

    def test_rejects_duplicate_edge(self):
        with pytest.raises(GraphError, match="duplicate"):
            DirectedGraph(["a", "b"], [(0, 1), (0, 1)])

    def test_rejects_out_of_range(self):
        with pytest.raises(GraphError):
            DirectedGraph(["a", "b"], [(0, 2)])


class TestTransformLabeledEdges:
    def test_single_edge(self):
        g = transform_labeled_edges(LabeledGraph(["a", "b"], [(0, 1, "n")]))
        assert g.num_nodes == 3
        assert g.attrs[2] == "n"
        assert set(g.edges) == {(0, 2), (2, 1)}

    def test_no_edges_unchanged(self):
        g = transform_labeled_edges(LabeledGraph(["a", "b"], []))
        assert g.num_nodes == 2
        assert g.edges == ()

    def test_contraction_recovers_original(self):
        # independent oracle: contract each edge-node back into one edge
        rng = Rng(8)
        labels = "nsew"
        original = set()
        while len(original) < 10:
            u, v = rng.integers(0, 6), rng.integers(0, 6)
            if u != v:
                original.add((u, v))
        labeled = [(u, v, labels[rng.integers(0, 4)]) for u, v in sorted(original)]
        g = transform_labeled_edges(LabeledGraph([str(i) for i in range(6)], labeled))
        assert g.num_nodes == 6 + 10
        assert len(g.edges) == 20
        recovered = set()
        for w in range(6, g.num_nodes):
            sources = g.backward_neighbors(w)
            dests = g.forward_neighbors(w)
            assert len(sources) == 1 and len(dests) == 1
            recovered.add((sources[0], dests[0]))
        assert recovered == original

    def test_bipartite_between_originals_and_edge_nodes(self):
        labeled = [(0, 1, "n"), (1, 2, "e"), (2, 0, "w")]
        g = transform_labeled_edges(LabeledGraph(["a", "b", "c"], labeled))
        for s, d in g.edges:
            assert (s < 3) != (d < 3)

    def test_missing_label_rejected(self):
        with pytest.raises(GraphError, match="label"):
            transform_labeled_edges(LabeledGraph(["a", "b"], [(0, 1, "")]))


class TestSupernode:
    def test_single_node(self):
        g, sid = add_supernode(DirectedGraph(["a"], []))
        assert g.num_nodes == 2 and sid == 1
        assert g.edges == ((0, 1),)

    def test_degrees_definitional(self):
        g0 = random_graph(Rng(4), n=7)
        g, sid = add_supernode(g0)
        assert g.backward_neighbors(sid) == list(range(7))
        assert g.forward_neighbors(sid) == []

    def test_original_subgraph_unchanged(self):
        g0 = random_graph(Rng(21), n=6)
        g, sid = add_supernode(g0)
        assert g.attrs[:6] == g0.attrs
        assert set(e for e in g.edges if sid not in e) == set(g0.edges)


class TestSampleNeighbors:
    def test_under_cap_returned_as_is(self):
        assert sample_neighbors([4, 2, 9], 10, Rng(0)) == [4, 2, 9]

    def test_size_contract(self):
        nbrs = list(range(100))
        out = sample_neighbors(nbrs, 25, Rng(1))
        assert len(out) == 25
        assert len(set(out)) == 25
        assert set(out) <= set(nbrs)

    def test_inclusion_frequency(self):
        rng = Rng(6)
        counts = {i: 0 for i in range(4)}
        draws = 10_000
        for _ in range(draws):
            for i in sample_neighbors([0, 1, 2, 3], 2, rng):
                counts[i] += 1
        for i in range(4):
            assert abs(counts[i] / draws - 0.5) < 0.02

    def test_cap_below_one(self):
        with pytest.raises(ValueError):
            sample_neighbors([1], 0, Rng(0))


class TestSampleType:
    def test_empty_target_rejected(self):
        with pytest.raises(ValueError):
            Sample(graph=DirectedGraph(["a"], []), target=[])

    def test_bad_marker_rejected(self):
        with pytest.raises(GraphError):
            Sample(graph=DirectedGraph(["a"], []), target=["a"], markers=(0, 3))


class TestGraphFile:
    def test_single_line(self, tmp_path):
        path = tmp_path / "one.jsonl"
        path.write_text('{"nodes":[{"id":0,"attr":"a"},{"id":1,"attr":"b"}],'
                        '"edges":[[0,1]],"target":["b"]}\n')
        samples = parse_graph_file(path)
        assert len(samples) == 1
        assert samples[0].graph.num_nodes == 2

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert parse_graph_file(path) == []

    def test_round_trip_100_random_samples(self, tmp_path):
        rng = Rng(33)
        samples = []
        for i in range(100):
            g = random_graph(rng, n=3 + rng.integers(0, 5), extra_edges=3)
            target = [str(rng.integers(0, 10)) for _ in range(1 + rng.integers(0, 4))]
            markers = (0, 1) if rng.random() < 0.5 else None
            samples.append(Sample(graph=g, target=target, markers=markers))
        path = tmp_path / "many.jsonl"
        write_samples(path, samples)
        loaded = parse_graph_file(path)
        assert len(loaded) == 100
        for a, b in zip(samples, loaded):
            assert a.graph == b.graph
            assert a.target == b.target
            assert a.markers == b.markers

    def test_list_attrs_round_trip(self, tmp_path):
        g = DirectedGraph([["START", "0"], "1"], [(0, 1)])
        path = tmp_path / "attrs.jsonl"
        write_samples(path, [Sample(graph=g, target=["0", "1"], markers=(0, 1))])
        loaded = parse_graph_file(path)[0]
        assert loaded.graph.attrs == [["START", "0"], "1"]

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"nodes":[{"id":0,"attr":"a"}],"edges":[],"target":["a"]}\n'
                        'not json\n')
        with pytest.raises(GraphFileError, match="line 2"):
            parse_graph_file(path)

    def test_gapped_ids_rejected(self):
        with pytest.raises(GraphError, match="ids"):
            sample_from_dict({"nodes": [{"id": 0, "attr": "a"}, {"id": 2, "attr": "b"}],
                              "edges": [], "target": ["a"]})
