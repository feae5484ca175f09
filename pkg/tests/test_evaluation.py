import dataclasses

import numpy as np
import pytest

from voyagegraph import (
    EOS,
    MentionLabel,
    ROOT,
    VisitingOrderGraph,
    build_graph,
    cohens_kappa,
    evaluate_irp,
    evaluate_trp,
    flat_baseline,
    iaa_f1,
    measure_agreement,
    occorder,
    pair_f1,
)
from conftest import make_nodes, quick_document, visit_mention


def forest_with_depth_profile(n_top: int, n_total: int) -> VisitingOrderGraph:
    """n_top nodes under ROOT, the rest nested beneath them round-robin."""
    refs = [f"v{i:03d}" for i in range(n_total)]
    inclusion = []
    tops = refs[:n_top]
    attach_points = list(tops)
    for i, ref in enumerate(refs[n_top:]):
        parent = attach_points[i % len(attach_points)]
        inclusion.append((parent, ref))
        if i % 3 == 0:
            # Deepen occasionally so several depth rows exist.
            attach_points[i % len(attach_points)] = ref
    graph = build_graph(make_nodes(refs), inclusion=inclusion)
    assert isinstance(graph, VisitingOrderGraph)
    return graph


class TestEvaluateIrp:
    def test_perfect_prediction(self, itinerary_graph):
        report = evaluate_irp(itinerary_graph, dict(itinerary_graph.parent))
        assert report.f1 == 1.0
        assert all(sub.f1 == 1.0 for sub in report.breakdowns.values())

    def test_flat_identity_on_profiled_forest(self):
        graph = forest_with_depth_profile(114, 468)
        report = evaluate_irp(graph, flat_baseline(graph.nodes.values()))
        assert report.f1 == pytest.approx(114 / 468, abs=1e-12)
        assert report.f1 == pytest.approx(0.2436, abs=0.0005)
        assert report.breakdowns["depth=1"].f1 == 1.0
        assert report.breakdowns["depth>=2"].f1 == 0.0

    def test_hand_counted_partial_credit(self):
        graph = build_graph(
            make_nodes(["a", "b", "c", "d", "e", "f"]),
            inclusion=[("a", "b"), ("a", "c"), ("c", "d"), ("c", "e")],
        )
        predicted = dict(graph.parent)
        predicted["b"] = ROOT  # wrong
        predicted["d"] = "a"  # wrong
        report = evaluate_irp(graph, predicted)
        assert (report.tp, report.fp, report.fn) == (4, 2, 2)
        assert report.precision == report.recall == pytest.approx(4 / 6)

    def test_depth_breakdown_tps_sum_to_total(self):
        graph = forest_with_depth_profile(10, 60)
        predicted = dict(graph.parent)
        for ref in list(predicted)[::4]:
            predicted[ref] = ROOT if predicted[ref] != ROOT else sorted(graph.nodes)[0]
        predicted = {r: (p if p != r else ROOT) for r, p in predicted.items()}
        report = evaluate_irp(graph, predicted)
        depth_tp = sum(
            sub.tp for key, sub in report.breakdowns.items()
            if key.startswith("depth=")
        )
        assert depth_tp == report.tp

    def test_partial_assignment_rejected(self, itinerary_graph):
        partial = dict(itinerary_graph.parent)
        partial.pop("todaiji")
        with pytest.raises(ValueError, match="total"):
            evaluate_irp(itinerary_graph, partial)


def chain_doc_and_graph(order, doc_order=None):
    """Flat sibling group chained in ``order``; mentions in ``doc_order``."""
    doc = quick_document("d", [visit_mention(e) for e in (doc_order or order)])
    graph = build_graph(make_nodes(sorted(order)), transition=list(zip(order, order[1:])))
    assert isinstance(graph, VisitingOrderGraph)
    return doc, graph


class TestEvaluateTrp:
    def test_perfect_prediction(self):
        doc, graph = chain_doc_and_graph(["A", "B", "C"])
        predicted = {"A": "B", "B": "C", "C": EOS}
        report = evaluate_trp(graph, predicted, doc)
        assert report.f1 == 1.0
        assert report.breakdowns["forward"].f1 == 1.0
        assert "reverse" in report.breakdowns
        assert report.breakdowns["size=3"].f1 == 1.0

    def test_skip_link_counts(self):
        doc, graph = chain_doc_and_graph(["A", "B", "C"])
        report = evaluate_trp(graph, {"A": "C", "B": EOS, "C": EOS}, doc)
        assert (report.tp, report.fp, report.fn) == (0, 1, 2)
        assert report.f1 == 0.0

    def test_reverse_classification(self):
        # Gold visits B before A, but A is mentioned first.
        doc, graph = chain_doc_and_graph(["B", "A"], doc_order=["A", "B"])
        report = evaluate_trp(graph, {"A": EOS, "B": "A"}, doc)
        assert report.breakdowns["reverse"].tp == 1
        assert report.breakdowns["forward"].tp == 0

    def test_forward_plus_reverse_covers_gold(self):
        rng = np.random.default_rng(5)
        entities = [f"e{i}" for i in range(6)]
        order = [entities[i] for i in rng.permutation(6)]
        doc, graph = chain_doc_and_graph(order, doc_order=entities)
        report = evaluate_trp(graph, {r: EOS for r in entities}, doc)
        fwd = report.breakdowns["forward"]
        rev = report.breakdowns["reverse"]
        assert (fwd.tp + fwd.fn) + (rev.tp + rev.fn) == report.tp + report.fn == 5

    def test_occorder_em_never_recalls_reverse_pairs(self):
        doc, graph = chain_doc_and_graph(["B", "A", "C"], doc_order=["A", "B", "C"])
        predicted = occorder(doc, ["A", "B", "C"], "em")
        report = evaluate_trp(graph, predicted, doc)
        assert report.breakdowns["reverse"].recall == 0.0

    def test_successor_outside_group_rejected(self):
        doc = quick_document("d", [visit_mention(e) for e in ("A", "B", "C")])
        graph = build_graph(make_nodes(["A", "B", "C"]), inclusion=[("A", "B"), ("A", "C")])
        with pytest.raises(ValueError, match="outside the sibling group"):
            evaluate_trp(graph, {"A": EOS, "B": "A", "C": EOS}, doc)


class TestPairF1:
    def test_identical(self):
        assert pair_f1({("a", "b")}, {("a", "b")}).f1 == 1.0

    def test_disjoint(self):
        assert pair_f1({("a", "b")}, {("b", "a")}).f1 == 0.0

    def test_counts(self):
        gold = {(i, i) for i in range(4)}
        predicted = {(i, i) for i in range(1, 6)}
        report = pair_f1(gold, predicted)
        assert report.precision == pytest.approx(0.6)
        assert report.recall == pytest.approx(0.75)
        assert report.f1 == pytest.approx(2 / 3, abs=1e-9)

    def test_swap_symmetry(self):
        gold = {(1, 2), (2, 3), (9, 9)}
        predicted = {(1, 2), (4, 4)}
        forward = pair_f1(gold, predicted)
        backward = pair_f1(predicted, gold)
        assert forward.f1 == backward.f1
        assert forward.precision == backward.recall
        assert forward.recall == backward.precision


class TestAgreement:
    def annotator_pair(self):
        base = quick_document(
            "d",
            [
                ("A", True, MentionLabel.VISIT),
                ("B", True, MentionLabel.SEE),
                ("C", True, MentionLabel.VISIT),
            ],
        )
        other = dataclasses.replace(
            base,
            mentions=[
                dataclasses.replace(
                    m,
                    gold_label=(
                        MentionLabel.UNK_OR_NOT_VISIT if m.entity_id == "B" else m.gold_label
                    ),
                )
                for m in base.mentions
            ],
        )
        return base, other

    def test_identical_annotations(self):
        doc, _ = self.annotator_pair()
        assert iaa_f1([doc], [doc], "mention") == 1.0
        report = measure_agreement([doc], [doc], "mention")
        assert report.kappa == 1.0

    def test_partial_agreement(self):
        a, b = self.annotator_pair()
        assert iaa_f1([a], [b], "mention") == pytest.approx(2 / 3)
        assert iaa_f1([a], [b], "mention") == iaa_f1([b], [a], "mention")

    def test_relation_levels(self):
        from voyagegraph import GraphAnnotation

        doc_a = quick_document(
            "d",
            [visit_mention("A"), visit_mention("B")],
            graph=GraphAnnotation(inclusion=(("A", "B"),)),
        )
        doc_b = dataclasses.replace(
            doc_a, graph=GraphAnnotation(inclusion=(("A", "B"),), transition=(("A", "B"),))
        )
        assert iaa_f1([doc_a], [doc_b], "inclusion") == 1.0
        assert iaa_f1([doc_a], [doc_b], "transition") == 0.0
        assert iaa_f1([doc_a], [doc_b], "relation") == pytest.approx(2 / 3)
        assert measure_agreement([doc_a], [doc_b], "relation").kappa is None

    def test_document_mismatch(self):
        doc, _ = self.annotator_pair()
        renamed = dataclasses.replace(doc, id="other")
        with pytest.raises(ValueError, match="document sets"):
            iaa_f1([doc], [renamed], "mention")


class TestCohensKappa:
    def test_two_by_two_table(self):
        labels_a = ["x"] * 20 + ["x"] * 5 + ["y"] * 10 + ["y"] * 15
        labels_b = ["x"] * 20 + ["y"] * 5 + ["x"] * 10 + ["y"] * 15
        assert cohens_kappa(labels_a, labels_b) == pytest.approx(0.4, abs=1e-12)

    def test_identical_sequences(self):
        labels = ["x", "y", "x", "z"]
        assert cohens_kappa(labels, labels) == 1.0

    def test_identical_constant_sequences(self):
        assert cohens_kappa(["x"] * 5, ["x"] * 5) == 1.0

    def test_independent_uniform_near_zero(self):
        rng = np.random.default_rng(123)
        labels_a = rng.integers(0, 4, size=10_000).tolist()
        labels_b = rng.integers(0, 4, size=10_000).tolist()
        assert abs(cohens_kappa(labels_a, labels_b)) < 0.05

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            cohens_kappa(["x"], ["x", "y"])

    def test_label_set_enforced(self):
        with pytest.raises(ValueError, match="outside"):
            cohens_kappa(["x"], ["q"], label_set={"x", "y"})

    def test_kappa_never_exceeds_one(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(2, 30))
            a = rng.integers(0, 3, size=n).tolist()
            b = rng.integers(0, 3, size=n).tolist()
            assert cohens_kappa(a, b) <= 1.0 + 1e-12

    def test_equals_observed_agreement_when_chance_is_zero(self):
        # Disjoint label vocabularies make expected agreement zero.
        labels_a = ["x", "x", "y"]
        labels_b = ["p", "q", "p"]
        assert cohens_kappa(labels_a, labels_b) == 0.0
