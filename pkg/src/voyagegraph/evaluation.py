"""Relation-pair F1 with breakdowns, plus inter-annotator agreement.

Pair scores are pooled globally over all documents (pairs are
namespaced by document id); corpus-level reports additionally carry the
unweighted mean of per-document F1 scores.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import Document
from .graph import VisitingOrderGraph, depth
from .model import EOS, ROOT
from .tables import render_table
from .vop import ParentAssignment, SuccessorAssignment, first_mention


@dataclass(frozen=True)
class PairF1Report:
    tp: int
    fp: int
    fn: int
    breakdowns: dict = field(default_factory=dict)
    per_document_mean_f1: float | None = None

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @classmethod
    def from_sets(cls, gold: set, predicted: set, **kwargs) -> "PairF1Report":
        tp = len(gold & predicted)
        return cls(tp=tp, fp=len(predicted) - tp, fn=len(gold) - tp, **kwargs)

    def as_dict(self) -> dict:
        out = {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }
        if self.per_document_mean_f1 is not None:
            out["per_document_mean_f1"] = self.per_document_mean_f1
        if self.breakdowns:
            out["breakdowns"] = {k: v.as_dict() for k, v in self.breakdowns.items()}
        return out

    def format_table(self) -> str:
        rows = [["All", self.tp + self.fn, f"{self.precision:.3f}",
                 f"{self.recall:.3f}", f"{self.f1:.3f}"]]
        for key, sub in self.breakdowns.items():
            rows.append(
                [key, sub.tp + sub.fn, f"{sub.precision:.3f}", f"{sub.recall:.3f}", f"{sub.f1:.3f}"]
            )
        return render_table(["Pairs", "Gold", "P", "R", "F1"], rows)


def pair_f1(gold_pairs: Iterable[tuple], predicted_pairs: Iterable[tuple]) -> PairF1Report:
    """Exact set-overlap precision/recall/F1 over ordered pairs."""
    return PairF1Report.from_sets(set(gold_pairs), set(predicted_pairs))


def _pooled(buckets_gold: dict, buckets_pred: dict, keys: Iterable[str]) -> dict:
    return {
        key: PairF1Report.from_sets(buckets_gold.get(key, set()), buckets_pred.get(key, set()))
        for key in keys
    }


# ---------------------------------------------------------------------------
# Inclusion relation prediction


def evaluate_irp(
    golds: Mapping[str, VisitingOrderGraph] | VisitingOrderGraph,
    predictions: Mapping[str, ParentAssignment] | ParentAssignment,
) -> PairF1Report:
    """Parent-pair F1 including ROOT attachments, broken down by gold depth.

    Accepts either one graph and one assignment or parallel mappings
    keyed by document id.  Every prediction must be total over the gold
    node set.  Breakdown rows cover depth 1, depth >= 2, and every
    individual depth present in the gold data.
    """
    if isinstance(golds, VisitingOrderGraph):
        golds = {"": golds}
        predictions = {"": predictions}
    if set(golds) != set(predictions):
        raise ValueError("gold and predicted document sets differ")

    gold_pairs: set = set()
    pred_pairs: set = set()
    gold_buckets: dict[str, set] = {}
    pred_buckets: dict[str, set] = {}
    depths: set[int] = set()
    doc_f1: list[float] = []

    for doc_id in sorted(golds):
        graph = golds[doc_id]
        assignment = predictions[doc_id]
        if set(assignment) != set(graph.nodes):
            raise ValueError(f"document {doc_id!r}: assignment is not total over gold nodes")
        doc_gold: set = set()
        doc_pred: set = set()
        for ref in graph.node_refs():
            if assignment[ref] == ref:
                raise ValueError(f"document {doc_id!r}: {ref!r} is its own parent")
            d = depth(graph, ref)
            depths.add(d)
            gold_pair = (doc_id, graph.parent[ref], ref)
            pred_pair = (doc_id, assignment[ref], ref)
            doc_gold.add(gold_pair)
            doc_pred.add(pred_pair)
            for key in (f"depth={d}", "depth>=2" if d >= 2 else "depth=1"):
                gold_buckets.setdefault(key, set()).add(gold_pair)
                pred_buckets.setdefault(key, set()).add(pred_pair)
        gold_pairs |= doc_gold
        pred_pairs |= doc_pred
        if doc_gold or doc_pred:
            doc_f1.append(PairF1Report.from_sets(doc_gold, doc_pred).f1)

    keys = ["depth=1", "depth>=2"] + [f"depth={d}" for d in sorted(depths) if d >= 2]
    return PairF1Report.from_sets(
        gold_pairs,
        pred_pairs,
        breakdowns=_pooled(gold_buckets, pred_buckets, keys),
        per_document_mean_f1=sum(doc_f1) / len(doc_f1) if doc_f1 else None,
    )


# ---------------------------------------------------------------------------
# Transition relation prediction


def _size_bucket(size: int) -> str:
    return f"size={size}" if size < 10 else "size>=10"


def evaluate_trp(
    golds: Mapping[str, VisitingOrderGraph] | VisitingOrderGraph,
    predictions: Mapping[str, SuccessorAssignment] | SuccessorAssignment,
    documents: Mapping[str, Document] | Document,
) -> PairF1Report:
    """Successor-pair F1 excluding EOS, with direction and size breakdowns.

    Gold pairs are classified forward or reverse by the occurrence order
    of the two nodes' earliest mentions; predictions join the bucket of
    their query node's gold pair.  Size buckets follow the query's
    candidate-set cardinality (its sibling-group size), pooling 10 and
    larger.
    """
    if isinstance(golds, VisitingOrderGraph):
        golds = {"": golds}
        predictions = {"": predictions}
        documents = {"": documents}
    if not (set(golds) == set(predictions) == set(documents)):
        raise ValueError("gold, predicted, and document sets differ")

    gold_pairs: set = set()
    pred_pairs: set = set()
    gold_buckets: dict[str, set] = {}
    pred_buckets: dict[str, set] = {}
    sizes: set[int] = set()
    doc_f1: list[float] = []

    for doc_id in sorted(golds):
        graph = golds[doc_id]
        assignment = predictions[doc_id]
        document = documents[doc_id]
        if set(assignment) != set(graph.nodes):
            raise ValueError(f"document {doc_id!r}: assignment is not total over gold nodes")
        group_size = {
            ref: len(group)
            for group in graph.sibling_groups().values()
            for ref in group
        }
        doc_gold: set = set()
        doc_pred: set = set()
        for ref in graph.node_refs():
            predicted = assignment[ref]
            if predicted != EOS:
                if predicted not in graph.nodes or graph.parent[predicted] != graph.parent[ref]:
                    raise ValueError(
                        f"document {doc_id!r}: predicted successor {predicted!r} of {ref!r} "
                        "is outside the sibling group"
                    )
                doc_pred.add((doc_id, ref, predicted))
            gold_successor = graph.successor.get(ref)
            if gold_successor is not None:
                doc_gold.add((doc_id, ref, gold_successor))

        for pair_set, buckets in ((doc_gold, gold_buckets), (doc_pred, pred_buckets)):
            for doc, src, dst in pair_set:
                size = group_size[src]
                sizes.add(size)
                buckets.setdefault(_size_bucket(size), set()).add((doc, src, dst))
                gold_successor = graph.successor.get(src)
                if gold_successor is None:
                    continue  # no gold pair: direction undefined
                forward = (
                    first_mention(document, src).order_key
                    < first_mention(document, gold_successor).order_key
                )
                buckets.setdefault("forward" if forward else "reverse", set()).add(
                    (doc, src, dst)
                )

        gold_pairs |= doc_gold
        pred_pairs |= doc_pred
        if doc_gold or doc_pred:
            doc_f1.append(PairF1Report.from_sets(doc_gold, doc_pred).f1)

    keys = ["forward", "reverse"] + sorted(
        {_size_bucket(s) for s in sizes if s >= 2}, key=lambda k: (len(k), k)
    )
    return PairF1Report.from_sets(
        gold_pairs,
        pred_pairs,
        breakdowns=_pooled(gold_buckets, pred_buckets, keys),
        per_document_mean_f1=sum(doc_f1) / len(doc_f1) if doc_f1 else None,
    )


# ---------------------------------------------------------------------------
# Inter-annotator agreement


def cohens_kappa(labels_a: Sequence, labels_b: Sequence, label_set: Iterable | None = None) -> float:
    """Chance-corrected agreement between two aligned label sequences."""
    if len(labels_a) != len(labels_b):
        raise ValueError(f"length mismatch: {len(labels_a)} vs {len(labels_b)}")
    n = len(labels_a)
    if n == 0:
        raise ValueError("empty annotations")
    if label_set is not None:
        allowed = set(label_set)
        stray = [l for l in list(labels_a) + list(labels_b) if l not in allowed]
        if stray:
            raise ValueError(f"labels outside the label set: {stray[:3]}")
    observed = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    counts_a = Counter(labels_a)
    counts_b = Counter(labels_b)
    expected = sum(counts_a[l] * counts_b.get(l, 0) for l in counts_a) / (n * n)
    if expected == 1.0:
        return 1.0
    return (observed - expected) / (1.0 - expected)


@dataclass(frozen=True)
class AgreementReport:
    f1: float
    kappa: float | None
    n_items: int

    def as_dict(self) -> dict:
        return {"f1": self.f1, "kappa": self.kappa, "n_items": self.n_items}


_LABEL_LEVELS = ("mention", "entity")
_RELATION_LEVELS = ("inclusion", "transition", "relation")


def _annotation_items(document: Document, level: str) -> set | list:
    if level == "mention":
        return [
            (document.id, m.id, m.gold_label) for m in document.mentions
        ]
    if level == "entity":
        return [(document.id, e.id, e.gold_label) for e in document.entities]
    annotation = document.graph
    inclusion = set()
    transition = set()
    if annotation is not None:
        inclusion = {
            (document.id, "inclusion", a, b) for a, b in annotation.inclusion if a != ROOT
        }
        transition = {(document.id, "transition", a, b) for a, b in annotation.transition}
    if level == "inclusion":
        return inclusion
    if level == "transition":
        return transition
    return inclusion | transition


def measure_agreement(
    docs_a: Sequence[Document], docs_b: Sequence[Document], level: str
) -> AgreementReport:
    """F1 overlap between two annotators, plus kappa for label levels.

    Both annotations must cover the same document ids.  Label levels
    (mention, entity) compare per-item labels: their F1 equals the
    agreement fraction, and kappa corrects it for chance.  Relation
    levels (inclusion, transition, relation) compare extracted pair
    sets, where kappa is not defined.
    """
    if level not in _LABEL_LEVELS + _RELATION_LEVELS:
        raise ValueError(f"unknown agreement level {level!r}")
    index_a = {d.id: d for d in docs_a}
    index_b = {d.id: d for d in docs_b}
    if set(index_a) != set(index_b):
        raise ValueError("annotations cover different document sets")

    if level in _LABEL_LEVELS:
        items_a: list = []
        items_b: list = []
        for doc_id in sorted(index_a):
            items_a.extend(_annotation_items(index_a[doc_id], level))
            items_b.extend(_annotation_items(index_b[doc_id], level))
        items_a.sort(key=lambda t: (t[0], t[1]))
        items_b.sort(key=lambda t: (t[0], t[1]))
        keys_a = [(doc, item) for doc, item, _ in items_a]
        keys_b = [(doc, item) for doc, item, _ in items_b]
        if keys_a != keys_b:
            raise ValueError(f"annotators label different {level} sets")
        labels_a = [label for _, _, label in items_a]
        labels_b = [label for _, _, label in items_b]
        report = pair_f1(set(items_a), set(items_b))
        return AgreementReport(
            f1=report.f1, kappa=cohens_kappa(labels_a, labels_b), n_items=len(labels_a)
        )

    pairs_a: set = set()
    pairs_b: set = set()
    for doc_id in sorted(index_a):
        pairs_a |= set(_annotation_items(index_a[doc_id], level))
        pairs_b |= set(_annotation_items(index_b[doc_id], level))
    report = pair_f1(pairs_a, pairs_b)
    return AgreementReport(f1=report.f1, kappa=None, n_items=len(pairs_a | pairs_b))


def iaa_f1(docs_a: Sequence[Document], docs_b: Sequence[Document], level: str) -> float:
    """Agreement F1 alone, symmetric in its two arguments."""
    return measure_agreement(docs_a, docs_b, level).f1
