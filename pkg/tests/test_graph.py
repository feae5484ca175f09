import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from voyagegraph import (
    Entity,
    OrderRelation,
    ROOT,
    ViolationCode,
    ViolationError,
    VisitNode,
    VisitingOrderGraph,
    build_graph,
    depth,
    order_relation,
    split_multi_visit,
    validate,
)
from conftest import ITINERARY_NODES, make_nodes, random_valid_graph
from oracles import order_relation_oracle


def codes(result):
    assert isinstance(result, list), f"expected violations, got {result!r}"
    return [v.code for v in result]


class TestBuildGraph:
    def test_itinerary_is_valid(self, itinerary_graph):
        assert validate(itinerary_graph) == []
        assert itinerary_graph.parent["kyoto_city"] == ROOT
        assert itinerary_graph.parent["buddha_hall"] == "todaiji"
        assert itinerary_graph.successor["nara_station"] == "todaiji"

    def test_single_node_defaults_to_root(self):
        graph = build_graph([VisitNode("solo")])
        assert isinstance(graph, VisitingOrderGraph)
        assert graph.parent == {"solo": ROOT}
        assert graph.successor == {}

    def test_cross_group_transition_rejected(self):
        result = build_graph(
            make_nodes(ITINERARY_NODES),
            inclusion=[("kyoto_city", "kyoto_station"), ("nara_city", "nara_station")],
            transition=[("kyoto_station", "nara_station")],
        )
        assert codes(result) == [ViolationCode.TRANSITION_NOT_SIBLINGS]

    def test_dangling_reference(self):
        result = build_graph([VisitNode("a")], transition=[("a", "ghost")])
        assert codes(result) == [ViolationCode.DANGLING_REFERENCE]

    def test_two_successors(self):
        result = build_graph(
            make_nodes(["a", "b", "c"]), transition=[("a", "b"), ("a", "c")]
        )
        assert codes(result) == [ViolationCode.MULTI_SUCCESSOR]

    def test_two_predecessors(self):
        result = build_graph(
            make_nodes(["a", "b", "c"]), transition=[("a", "c"), ("b", "c")]
        )
        assert codes(result) == [ViolationCode.MULTI_PREDECESSOR]

    def test_two_parents(self):
        result = build_graph(
            make_nodes(["a", "b", "c"]), inclusion=[("a", "c"), ("b", "c")]
        )
        assert codes(result) == [ViolationCode.MULTI_PARENT]

    def test_transition_two_cycle(self):
        result = build_graph(make_nodes(["a", "b"]), transition=[("a", "b"), ("b", "a")])
        assert codes(result) == [ViolationCode.TRANSITION_CYCLE]

    def test_inclusion_two_cycle(self):
        result = build_graph(make_nodes(["a", "b"]), inclusion=[("a", "b"), ("b", "a")])
        assert codes(result) == [ViolationCode.CYCLE_INCLUSION]

    def test_unknown_time_node(self):
        result = build_graph([VisitNode("a")], excluded=["a"])
        assert codes(result) == [ViolationCode.UNKNOWN_TIME_NODE]

    def test_overlap_both_linked(self):
        result = build_graph(
            make_nodes(["a", "b", "c"]),
            inclusion=[("c", "a"), ("c", "b")],
            overlap=[("a", "b")],
        )
        assert codes(result) == [ViolationCode.OVERLAP_BOTH_LINKED]

    def test_overlap_single_linked_ok(self):
        graph = build_graph(
            make_nodes(["a", "b", "c"]),
            inclusion=[("c", "a")],
            overlap=[("a", "b")],
        )
        assert isinstance(graph, VisitingOrderGraph)

    def test_incomplete_chain_strict_only(self):
        nodes = make_nodes(["a", "b"])
        assert isinstance(build_graph(nodes), VisitingOrderGraph)
        result = build_graph(nodes, strict=True)
        assert codes(result) == [ViolationCode.INCOMPLETE_CHAIN]

    def test_reserved_id_rejected(self):
        with pytest.raises(ValueError, match="reserved"):
            build_graph([VisitNode("ROOT")])

    def test_duplicate_declaration_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            build_graph([VisitNode("a"), VisitNode("a")])

    def test_violations_sorted_and_complete(self):
        result = build_graph(
            make_nodes(["a", "b", "c"]),
            transition=[("a", "ghost"), ("b", "a"), ("a", "b")],
            excluded=["c"],
        )
        assert isinstance(result, list)
        keys = [(v.code.value, v.subject) for v in result]
        assert keys == sorted(keys)
        assert ViolationCode.DANGLING_REFERENCE in codes(result)
        assert ViolationCode.UNKNOWN_TIME_NODE in codes(result)


class TestValidate:
    def test_direct_construction_cycle(self):
        nodes = {r: VisitNode(r) for r in ("a", "b")}
        graph = VisitingOrderGraph(
            nodes=nodes, parent={"a": "b", "b": "a"}, successor={}
        )
        assert codes(validate(graph)) == [ViolationCode.CYCLE_INCLUSION]

    def test_missing_parent_entry(self):
        graph = VisitingOrderGraph(nodes={"a": VisitNode("a")}, parent={}, successor={})
        assert codes(validate(graph)) == [ViolationCode.DANGLING_REFERENCE]

    def test_injectivity_checked_on_maps(self):
        nodes = {r: VisitNode(r) for r in ("a", "b", "c")}
        graph = VisitingOrderGraph(
            nodes=nodes,
            parent={r: ROOT for r in nodes},
            successor={"a": "c", "b": "c"},
        )
        assert codes(validate(graph)) == [ViolationCode.MULTI_PREDECESSOR]

    @given(st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_build_then_validate_clean(self, seed):
        graph = random_valid_graph(np.random.default_rng(seed))
        assert validate(graph) == []

    @given(st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_edge_removal_keeps_graph_valid(self, seed):
        rng = np.random.default_rng(seed)
        graph = random_valid_graph(rng)
        if graph.successor:
            drop = sorted(graph.successor)[int(rng.integers(len(graph.successor)))]
            successor = {k: v for k, v in graph.successor.items() if k != drop}
            trimmed = VisitingOrderGraph(
                nodes=graph.nodes,
                parent=graph.parent,
                successor=successor,
                overlap=graph.overlap,
                excluded=graph.excluded,
            )
            assert validate(trimmed) == []
        non_root = [r for r, p in graph.parent.items() if p != ROOT]
        if non_root:
            child = non_root[int(rng.integers(len(non_root)))]
            parent = dict(graph.parent)
            parent[child] = ROOT
            # Detaching an inclusion edge may orphan a transition whose
            # endpoints are no longer siblings, so drop those too.
            successor = {
                a: b
                for a, b in graph.successor.items()
                if parent[a] == parent[b]
            }
            moved = VisitingOrderGraph(
                nodes=graph.nodes, parent=parent, successor=successor
            )
            assert validate(moved) == []


class TestDepth:
    def test_itinerary_depths(self, itinerary_graph):
        assert depth(itinerary_graph, "nara_city") == 1
        assert depth(itinerary_graph, "buddha_hall") == 3

    def test_flat_graph_all_depth_one(self):
        graph = build_graph(make_nodes(["x", "y", "z"]))
        assert all(depth(graph, r) == 1 for r in ("x", "y", "z"))

    def test_unknown_node(self, itinerary_graph):
        with pytest.raises(KeyError):
            depth(itinerary_graph, "atlantis")

    @given(st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_depth_recurrence(self, seed):
        graph = random_valid_graph(np.random.default_rng(seed))
        for ref, parent in graph.parent.items():
            if parent == ROOT:
                assert depth(graph, ref) == 1
            else:
                assert depth(graph, ref) == depth(graph, parent) + 1


class TestOrderRelation:
    def test_lifted_before(self, itinerary_graph):
        assert order_relation(itinerary_graph, "kyoto_station", "nara_city") is OrderRelation.BEFORE
        assert order_relation(itinerary_graph, "kyoto_station", "buddha_hall") is OrderRelation.BEFORE

    def test_containment(self, itinerary_graph):
        assert order_relation(itinerary_graph, "nara_city", "todaiji") is OrderRelation.CONTAINS
        assert order_relation(itinerary_graph, "buddha_hall", "nara_city") is OrderRelation.CONTAINED_BY

    def test_same(self, itinerary_graph):
        assert order_relation(itinerary_graph, "todaiji", "todaiji") is OrderRelation.SAME

    def test_incomparable_without_chain(self):
        graph = build_graph(make_nodes(["x", "y"]))
        assert order_relation(graph, "x", "y") is OrderRelation.INCOMPARABLE

    def test_unknown_node(self, itinerary_graph):
        with pytest.raises(KeyError):
            order_relation(itinerary_graph, "kyoto_city", "atlantis")

    @given(st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_mutual_inverse(self, seed):
        graph = random_valid_graph(np.random.default_rng(seed))
        refs = graph.node_refs()
        for a in refs:
            for b in refs:
                assert order_relation(graph, a, b) is order_relation(graph, b, a).inverse()

    @given(st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_matches_closure_oracle(self, seed):
        graph = random_valid_graph(np.random.default_rng(seed))
        refs = graph.node_refs()
        for a in refs:
            for b in refs:
                assert order_relation(graph, a, b) is order_relation_oracle(graph, a, b)


class TestSplitMultiVisit:
    entity = Entity(id="loop", mention_ids=("m1", "m2", "m3"))

    def test_two_partitions(self):
        nodes = split_multi_visit(self.entity, [["m1"], ["m2", "m3"]])
        assert nodes == [VisitNode("loop", 0), VisitNode("loop", 1)]
        assert nodes[1].ref == "loop#1"

    def test_single_partition(self):
        assert split_multi_visit(self.entity, [["m1", "m2", "m3"]]) == [VisitNode("loop", 0)]

    def test_overlapping_partitions(self):
        with pytest.raises(ViolationError) as excinfo:
            split_multi_visit(self.entity, [["m1"], ["m1"]])
        assert [v.code for v in excinfo.value.violations] == [
            ViolationCode.EMPTY_VISIT_PARTITION
        ]

    def test_empty_partition(self):
        with pytest.raises(ViolationError) as excinfo:
            split_multi_visit(self.entity, [["m1"], []])
        assert ViolationCode.EMPTY_VISIT_PARTITION in [
            v.code for v in excinfo.value.violations
        ]

    def test_foreign_mention(self):
        with pytest.raises(ViolationError) as excinfo:
            split_multi_visit(self.entity, [["m1"], ["m9"]])
        assert ViolationCode.DANGLING_REFERENCE in [
            v.code for v in excinfo.value.violations
        ]
