"""Shared fixtures: a hand-built itinerary graph and document builders."""

from __future__ import annotations

from collections import defaultdict

import numpy as np
import pytest

from voyagegraph import (
    Document,
    Entity,
    EntityLabel,
    Mention,
    MentionLabel,
    ROOT,
    Sentence,
    VisitNode,
    VisitingOrderGraph,
    build_graph,
)

# A small two-city itinerary: two top-level cities visited in sequence,
# stations and sights nested beneath them, one grandchild sight.
ITINERARY_NODES = [
    "kyoto_city",
    "kyoto_station",
    "nara_city",
    "nara_station",
    "todaiji",
    "buddha_hall",
]
ITINERARY_INCLUSION = [
    ("kyoto_city", "kyoto_station"),
    ("nara_city", "nara_station"),
    ("nara_city", "todaiji"),
    ("todaiji", "buddha_hall"),
]
ITINERARY_TRANSITION = [
    ("kyoto_city", "nara_city"),
    ("nara_station", "todaiji"),
]


def make_nodes(refs):
    return [VisitNode(ref) for ref in refs]


@pytest.fixture
def itinerary_graph() -> VisitingOrderGraph:
    graph = build_graph(
        make_nodes(ITINERARY_NODES),
        inclusion=ITINERARY_INCLUSION,
        transition=ITINERARY_TRANSITION,
    )
    assert isinstance(graph, VisitingOrderGraph)
    return graph


def quick_document(
    doc_id: str,
    mention_spec,
    entity_labels=None,
    visits=None,
    unknown_time=(),
    graph=None,
):
    """Build a document from (entity_id, is_proper, label) occurrence triples.

    Each mention lands in its own sentence, so occurrence order equals
    the order of the triples.
    """
    sentences = []
    mentions = []
    per_entity = defaultdict(list)
    for i, (eid, proper, label) in enumerate(mention_spec):
        mention_id = f"{eid}.m{len(per_entity[eid])}"
        surface = mention_id
        text = f"went to {surface} today"
        start = text.index(surface)
        mentions.append(
            Mention(
                id=mention_id,
                entity_id=eid,
                sentence_index=i,
                char_start=start,
                char_end=start + len(surface),
                surface=surface,
                is_proper_noun=proper,
                gold_label=label,
            )
        )
        sentences.append(Sentence(id=f"s{i:02d}", text=text))
        per_entity[eid].append(mention_id)
    entity_labels = entity_labels or {}
    visits = visits or {}
    entities = [
        Entity(
            id=eid,
            mention_ids=tuple(ids),
            gold_label=entity_labels.get(eid, EntityLabel.VISIT),
            unknown_time=eid in unknown_time,
            visits=visits.get(eid),
        )
        for eid, ids in per_entity.items()
    ]
    return Document(
        id=doc_id, sentences=sentences, mentions=mentions, entities=entities, graph=graph
    )


def visit_mention(eid: str) -> tuple[str, bool, MentionLabel]:
    return (eid, True, MentionLabel.VISIT)


def random_valid_graph(rng: np.random.Generator, max_nodes: int = 12) -> VisitingOrderGraph:
    """Random forest plus random disjoint chains inside each sibling group."""
    n = int(rng.integers(1, max_nodes + 1))
    refs = [f"n{i:02d}" for i in range(n)]
    inclusion = []
    for i, ref in enumerate(refs):
        # Parents only among earlier nodes keeps the forest acyclic.
        pick = int(rng.integers(0, i + 1))
        if pick > 0:
            inclusion.append((refs[pick - 1], ref))
    parent_of = {child: parent for parent, child in inclusion}
    groups = defaultdict(list)
    for ref in refs:
        groups[parent_of.get(ref, ROOT)].append(ref)
    transition = []
    for group in groups.values():
        order = [group[i] for i in rng.permutation(len(group))]
        for a, b in zip(order, order[1:]):
            # Random cut points split the group into disjoint chains.
            if rng.random() < 0.65:
                transition.append((a, b))
    graph = build_graph(make_nodes(refs), inclusion=inclusion, transition=transition)
    assert isinstance(graph, VisitingOrderGraph)
    return graph
