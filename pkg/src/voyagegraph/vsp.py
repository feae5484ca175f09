"""Visit status prediction: mention-level argmax, entity aggregation, metrics.

Scorers are pluggable: anything with a ``score_mention(document, mention)``
method returning a non-negative weight for every mention label can drive
prediction.  Weights need not sum to one; only the argmax matters.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Protocol, Sequence

from .corpus import Document
from .model import EntityLabel, Mention, MentionLabel, label_rank
from .tables import render_table


class MentionScorer(Protocol):
    def score_mention(self, document: Document, mention: Mention) -> Mapping[MentionLabel, float]:
        ...


def predict_mention_labels(
    scorer: MentionScorer, document: Document
) -> dict[str, MentionLabel]:
    """Most probable label per mention, ties broken by fixed label order."""
    predictions: dict[str, MentionLabel] = {}
    for mention in document.mentions:
        weights = scorer.score_mention(document, mention)
        best: MentionLabel | None = None
        best_weight = 0.0
        for label in MentionLabel:
            if label not in weights:
                raise ValueError(f"scorer returned no weight for {label.value} on {mention.id!r}")
            weight = float(weights[label])
            if weight < 0:
                raise ValueError(
                    f"scorer returned negative weight {weight} for {label.value} on {mention.id!r}"
                )
            if best is None or weight > best_weight:
                best, best_weight = label, weight
        assert best is not None
        predictions[mention.id] = best
    return predictions


def aggregate_mla(mention_labels: Iterable[MentionLabel]) -> EntityLabel:
    """Entity label from mention labels: any Visit/PlanToVisit wins."""
    labels = list(mention_labels)
    if not labels:
        raise ValueError("cannot aggregate an empty mention label list")
    if any(l in (MentionLabel.VISIT, MentionLabel.PLAN_TO_VISIT) for l in labels):
        return EntityLabel.VISIT
    return EntityLabel.OTHER


def predict_entity_labels(
    mention_labels: Mapping[str, MentionLabel], document: Document
) -> dict[str, EntityLabel]:
    """Apply the aggregation rule entity by entity."""
    out = {}
    for entity in document.entities:
        missing = [m for m in entity.mention_ids if m not in mention_labels]
        if missing:
            raise ValueError(f"entity {entity.id!r}: unlabeled mentions {missing}")
        out[entity.id] = aggregate_mla(mention_labels[m] for m in entity.mention_ids)
    return out


@dataclass(frozen=True)
class VspPrediction:
    mention_labels: dict[str, MentionLabel]
    entity_labels: dict[str, EntityLabel]


def predict_vsp(scorer: MentionScorer, document: Document) -> VspPrediction:
    """Two-step prediction: mention argmax, then entity aggregation."""
    mention_labels = predict_mention_labels(scorer, document)
    return VspPrediction(mention_labels, predict_entity_labels(mention_labels, document))


# ---------------------------------------------------------------------------
# Majority baseline


def majority_label(histogram: Mapping):
    """Most frequent label; ties go to the earlier label in fixed order."""
    items = [(label, count) for label, count in histogram.items() if count > 0]
    if not items:
        raise ValueError("empty histogram")
    return min(items, key=lambda kv: (-kv[1], label_rank(kv[0])))[0]


class MajorityScorer:
    """Assigns weight 1 to one fixed label and 0 to every other."""

    def __init__(self, label: MentionLabel):
        self.label = label

    def score_mention(self, document, mention) -> dict[MentionLabel, float]:
        return {label: 1.0 if label is self.label else 0.0 for label in MentionLabel}


def majority_baseline(
    mention_histogram: Mapping[MentionLabel, int],
    entity_histogram: Mapping[EntityLabel, int],
) -> tuple[MajorityScorer, EntityLabel]:
    """Training-majority scorer plus the constant entity-level label."""
    return (
        MajorityScorer(majority_label(mention_histogram)),
        majority_label(entity_histogram),
    )


def mention_label_histogram(documents: Iterable[Document]) -> Counter:
    counts: Counter = Counter()
    for doc in documents:
        counts.update(m.gold_label for m in doc.mentions if m.gold_label is not None)
    return counts


def entity_label_histogram(documents: Iterable[Document]) -> Counter:
    counts: Counter = Counter()
    for doc in documents:
        counts.update(e.gold_label for e in doc.entities if e.gold_label is not None)
    return counts


# ---------------------------------------------------------------------------
# Evaluation


@dataclass(frozen=True)
class LabelScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationReport:
    """Accuracy, full-label-set macro F1, per-label P/R/F1, confusion counts.

    The confusion matrix is keyed (gold label, predicted label); its row
    sums are gold supports, its column sums predicted counts, and its
    trace over the total is the accuracy.
    """

    accuracy: float
    macro_f1: float
    per_label: dict
    confusion: dict
    n_items: int

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "n_items": self.n_items,
            "per_label": {
                label.value: {
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "support": s.support,
                }
                for label, s in self.per_label.items()
            },
            "confusion": {
                gold.value: {pred.value: n for (g, pred), n in self.confusion.items() if g == gold}
                for gold in self.per_label
            },
        }

    def format_table(self) -> str:
        rows = [
            [label.value, f"{s.precision:.3f}", f"{s.recall:.3f}", f"{s.f1:.3f}", s.support]
            for label, s in self.per_label.items()
        ]
        table = render_table(["Label", "P", "R", "F1", "Support"], rows)
        return (
            f"{table}\n"
            f"accuracy {self.accuracy:.3f}  macro-F1 {self.macro_f1:.3f}  items {self.n_items}"
        )


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def evaluate_vsp(
    gold: Mapping[str, object],
    predicted: Mapping[str, object],
    label_set: Sequence | type = MentionLabel,
) -> ClassificationReport:
    """Exact-match accuracy and per-label P/R/F1 over matching id sets.

    Macro F1 averages over the full label set, counting zero for labels
    with an undefined score, so a majority predictor over L labels with
    majority fraction m scores exactly (2m / (1 + m)) / L.
    """
    labels = list(label_set)
    if set(gold) != set(predicted):
        only_gold = sorted(set(gold) - set(predicted))[:3]
        only_pred = sorted(set(predicted) - set(gold))[:3]
        raise ValueError(
            f"gold and predicted id sets differ (gold-only {only_gold}, predicted-only {only_pred})"
        )
    if not gold:
        raise ValueError("nothing to evaluate")
    confusion = {(g, p): 0 for g in labels for p in labels}
    for item_id, gold_label in gold.items():
        confusion[(gold_label, predicted[item_id])] += 1
    n = len(gold)
    correct = sum(confusion[(l, l)] for l in labels)
    per_label = {}
    for label in labels:
        tp = confusion[(label, label)]
        gold_count = sum(confusion[(label, p)] for p in labels)
        pred_count = sum(confusion[(g, label)] for g in labels)
        precision = tp / pred_count if pred_count else 0.0
        recall = tp / gold_count if gold_count else 0.0
        per_label[label] = LabelScores(precision, recall, _f1(precision, recall), gold_count)
    macro_f1 = sum(s.f1 for s in per_label.values()) / len(labels)
    return ClassificationReport(
        accuracy=correct / n,
        macro_f1=macro_f1,
        per_label=per_label,
        confusion=confusion,
        n_items=n,
    )
