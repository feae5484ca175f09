"""Visiting order prediction: parent selection and successor decoding.

Both subtasks select from candidate sets with a pseudo target (ROOT for
parents, EOS for successors) by maximizing a pluggable pairwise score.
Successor decoding comes in two flavors: independent per-node argmax,
which may break the chain structure, and greedy sequence sorting, which
always yields one simple chain per sibling group.
"""

from __future__ import annotations

from enum import Enum
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .corpus import Document
from .graph import VisitingOrderGraph
from .model import EOS, ROOT, Mention, MentionLabel, VisitNode, parse_node_ref

#: node reference -> parent reference (or ROOT)
ParentAssignment = dict[str, str]
#: node reference -> successor reference (or EOS)
SuccessorAssignment = dict[str, str]


class RelationKind(str, Enum):
    PARENT_OF = "parent-of"
    SUBSEQUENT_TO = "subsequent-to"


class PairwiseScorer(Protocol):
    def score_pair(
        self, document: Document, query: str, candidate: str, kind: RelationKind
    ) -> float:
        ...


def irp_candidates(nodes: Sequence[VisitNode], query: str) -> list[str]:
    """Parent candidates for a query node: every other node, then ROOT."""
    refs = [n.ref for n in sorted(nodes)]
    if query not in refs:
        raise ValueError(f"query {query!r} is not among the given nodes")
    return [r for r in refs if r != query] + [ROOT]


def trp_candidates(graph: VisitingOrderGraph, query: str) -> list[str]:
    """Successor candidates: siblings of the query, then EOS."""
    if query not in graph.nodes:
        raise KeyError(f"unknown node {query!r}")
    parent = graph.parent[query]
    siblings = [r for r in graph.node_refs() if r != query and graph.parent[r] == parent]
    return siblings + [EOS]


_TRP_PRIORITY = {MentionLabel.VISIT: 0, MentionLabel.SEE: 1}


def representative_mention(
    document: Document,
    node: VisitNode | str,
    kind: RelationKind,
    mention_labels: Mapping[str, MentionLabel] | None = None,
) -> Mention:
    """Pick the mention that stands for a node in pairwise scoring.

    Parent selection prefers proper-noun mentions; successor selection
    prefers Visit over See over all other labels.  Within equal
    priority the earliest mention wins.
    """
    if isinstance(node, str):
        node = parse_node_ref(node)
    mentions = document.mentions_of(node)
    if kind is RelationKind.PARENT_OF:
        proper = [m for m in mentions if m.is_proper_noun]
        return proper[0] if proper else mentions[0]
    if mention_labels is None:
        labels = {m.id: m.gold_label for m in mentions}
    else:
        labels = {m.id: mention_labels.get(m.id) for m in mentions}
    return min(mentions, key=lambda m: (_TRP_PRIORITY.get(labels[m.id], 2), m.order_key))


def first_mention(document: Document, node: VisitNode | str) -> Mention:
    """Earliest mention of a node in document order."""
    if isinstance(node, str):
        node = parse_node_ref(node)
    return document.mentions_of(node)[0]


# ---------------------------------------------------------------------------
# Parent selection (inclusion relation prediction)


def _candidate_tiebreak(document: Document, candidate: str, kind: RelationKind):
    """Pseudo nodes lose ties; real nodes rank by earliest representative."""
    if candidate in (ROOT, EOS):
        return (1, (), ())
    rep = representative_mention(document, candidate, kind)
    node = parse_node_ref(candidate)
    return (0, rep.order_key, (node.entity_id, node.visit_index))


def _argmax_candidate(
    scorer: PairwiseScorer,
    document: Document,
    query: str,
    candidates: Sequence[str],
    kind: RelationKind,
) -> str:
    ordered = sorted(candidates, key=lambda c: _candidate_tiebreak(document, c, kind))
    best = None
    best_score = 0.0
    for candidate in ordered:
        try:
            score = float(scorer.score_pair(document, query, candidate, kind))
        except Exception as e:
            raise ValueError(
                f"scorer failed on pair ({query!r}, {candidate!r}, {kind.value})"
            ) from e
        if best is None or score > best_score:
            best, best_score = candidate, score
    assert best is not None
    return best


def predict_parents(
    scorer: PairwiseScorer, document: Document, nodes: Sequence[VisitNode]
) -> ParentAssignment:
    """Per-node argmax parent over the candidate set including ROOT."""
    assignment: ParentAssignment = {}
    for node in sorted(nodes):
        candidates = irp_candidates(nodes, node.ref)
        assignment[node.ref] = _argmax_candidate(
            scorer, document, node.ref, candidates, RelationKind.PARENT_OF
        )
    return assignment


def flat_baseline(nodes: Iterable[VisitNode]) -> ParentAssignment:
    """Every node attached directly to ROOT."""
    return {node.ref: ROOT for node in nodes}


def random_parent_baseline(nodes: Sequence[VisitNode], seed: int = 0) -> ParentAssignment:
    """Uniform seeded choice from each node's candidate set."""
    rng = np.random.default_rng(seed)
    assignment: ParentAssignment = {}
    for node in sorted(nodes):
        candidates = irp_candidates(nodes, node.ref)
        assignment[node.ref] = candidates[rng.integers(len(candidates))]
    return assignment


# ---------------------------------------------------------------------------
# Successor selection (transition relation prediction)


def occorder(
    document: Document,
    group: Sequence[str],
    strategy: str = "em",
    mention_labels: Mapping[str, MentionLabel] | None = None,
) -> SuccessorAssignment:
    """Chain a sibling group by representative-mention occurrence order.

    ``em`` ranks nodes by their earliest mention; ``vs`` ranks them by
    the visit-status-priority representative.
    """
    if strategy not in ("em", "vs"):
        raise ValueError(f"unknown occorder strategy {strategy!r}")
    if strategy == "em":
        reps = {ref: first_mention(document, ref) for ref in group}
    else:
        reps = {
            ref: representative_mention(
                document, ref, RelationKind.SUBSEQUENT_TO, mention_labels
            )
            for ref in group
        }
    ordered = sorted(group, key=lambda ref: reps[ref].order_key)
    return _chain_assignment(ordered)


def _chain_assignment(ordered: Sequence[str]) -> SuccessorAssignment:
    assignment = {a: b for a, b in zip(ordered, ordered[1:])}
    if ordered:
        assignment[ordered[-1]] = EOS
    return assignment


def naive_score_decode(
    scorer: PairwiseScorer, document: Document, group: Sequence[str]
) -> SuccessorAssignment:
    """Independent per-node argmax; the result may violate chain structure."""
    assignment: SuccessorAssignment = {}
    for ref in sorted(group, key=lambda r: parse_node_ref(r)):
        candidates = [c for c in group if c != ref] + [EOS]
        assignment[ref] = _argmax_candidate(
            scorer, document, ref, candidates, RelationKind.SUBSEQUENT_TO
        )
    return assignment


def sequence_sort_decode(
    scorer: PairwiseScorer, document: Document, group: Sequence[str]
) -> SuccessorAssignment:
    """Greedy sequence sorting: always produces one simple chain.

    Repeatedly accept the highest-scoring remaining ordered pair (ties
    by lexicographic pair), then drop its reverse, every pair into the
    same target, every pair out of the same source, and any pair that
    would close a cycle through the accepted ones, until the order over
    all nodes is determined.  EOS is implied by the chain tail rather
    than scored.
    """
    members = sorted(set(group))
    if len(members) != len(list(group)):
        raise ValueError("sibling group contains duplicate nodes")
    if len(members) <= 1:
        return _chain_assignment(members)

    scores: dict[tuple[str, str], float] = {}
    for a in members:
        for b in members:
            if a != b:
                try:
                    scores[(a, b)] = float(
                        scorer.score_pair(document, a, b, RelationKind.SUBSEQUENT_TO)
                    )
                except Exception as e:
                    raise ValueError(f"scorer failed on pair ({a!r}, {b!r})") from e

    remaining = set(scores)
    successor: dict[str, str] = {}
    # Union-find over chain fragments to detect pairs that would close a
    # cycle: two endpoints already in one fragment.
    fragment = {m: m for m in members}

    def find(x: str) -> str:
        while fragment[x] != x:
            fragment[x] = fragment[fragment[x]]
            x = fragment[x]
        return x

    while len(successor) < len(members) - 1:
        # Highest score first; ties by lexicographic (from, to).
        src, dst = min(remaining, key=lambda p: (-scores[p], p))
        if find(src) == find(dst):
            remaining.discard((src, dst))
            continue
        successor[src] = dst
        fragment[find(src)] = find(dst)
        remaining = {
            (a, b)
            for a, b in remaining
            if not (a == src or b == dst or (a, b) == (dst, src))
        }

    tail = [m for m in members if m not in successor]
    assert len(tail) == 1
    successor[tail[0]] = EOS
    return successor


def random_order_baseline(group: Sequence[str], seed: int = 0) -> SuccessorAssignment:
    """Uniformly random seeded permutation chain over the group."""
    members = sorted(group)
    rng = np.random.default_rng(seed)
    ordered = [members[i] for i in rng.permutation(len(members))]
    return _chain_assignment(ordered)


# ---------------------------------------------------------------------------
# Document-level drivers


def _chain_groups(graph: VisitingOrderGraph):
    """Sibling groups minus overlap standbys, which chain nowhere.

    Yields (group, standbys) per parent; assignments must still give the
    standbys an explicit EOS entry to stay total over the node set.
    """
    standbys = graph.overlap_standbys()
    for _, group in sorted(graph.sibling_groups().items()):
        yield [r for r in group if r not in standbys], [r for r in group if r in standbys]


def decode_transitions(
    scorer: PairwiseScorer,
    document: Document,
    graph: VisitingOrderGraph,
    decoder: str = "seqsort",
) -> SuccessorAssignment:
    """Decode every sibling group of a graph with the chosen strategy."""
    if decoder not in ("seqsort", "naive"):
        raise ValueError(f"unknown decoder {decoder!r}")
    assignment: SuccessorAssignment = {}
    for group, standbys in _chain_groups(graph):
        if decoder == "seqsort":
            assignment.update(sequence_sort_decode(scorer, document, group))
        else:
            assignment.update(naive_score_decode(scorer, document, group))
        assignment.update({ref: EOS for ref in standbys})
    return assignment


def occorder_transitions(
    document: Document,
    graph: VisitingOrderGraph,
    strategy: str = "em",
    mention_labels: Mapping[str, MentionLabel] | None = None,
) -> SuccessorAssignment:
    assignment: SuccessorAssignment = {}
    for group, standbys in _chain_groups(graph):
        assignment.update(occorder(document, group, strategy, mention_labels))
        assignment.update({ref: EOS for ref in standbys})
    return assignment


def random_transitions(graph: VisitingOrderGraph, seed: int = 0) -> SuccessorAssignment:
    """Random chains for every sibling group, one seeded stream per graph."""
    rng = np.random.default_rng(seed)
    assignment: SuccessorAssignment = {}
    for group, standbys in _chain_groups(graph):
        members = sorted(group)
        ordered = [members[i] for i in rng.permutation(len(members))]
        assignment.update(_chain_assignment(ordered))
        assignment.update({ref: EOS for ref in standbys})
    return assignment
