"""Core data model: visit status labels, mentions, entities, and graph nodes.

Offsets are always counted in Unicode code points, never bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

ROOT = "ROOT"
EOS = "EOS"

#: Identifiers that can never be used as entity ids.
RESERVED_IDS = frozenset({ROOT, EOS})


class MentionLabel(Enum):
    """Mention-level visit status.

    Declaration order doubles as the deterministic tie-break order for
    argmax selection and majority votes.
    """

    VISIT = "Visit"
    PLAN_TO_VISIT = "PlanToVisit"
    SEE = "See"
    VISIT_PAST = "VisitPast"
    VISIT_FUTURE = "VisitFuture"
    UNK_OR_NOT_VISIT = "UnkOrNotVisit"


class EntityLabel(Enum):
    """Entity-level visit status."""

    VISIT = "Visit"
    OTHER = "Other"


_MENTION_LABEL_RANK = {label: i for i, label in enumerate(MentionLabel)}
_ENTITY_LABEL_RANK = {label: i for i, label in enumerate(EntityLabel)}


def label_rank(label: MentionLabel | EntityLabel) -> int:
    """Position of a label in its fixed tie-break order."""
    if isinstance(label, MentionLabel):
        return _MENTION_LABEL_RANK[label]
    return _ENTITY_LABEL_RANK[label]


@dataclass(frozen=True)
class Sentence:
    id: str
    text: str


@dataclass(frozen=True)
class Mention:
    """One text span referring to a location.

    ``char_start``/``char_end`` index into the owning sentence in code
    points, with 0 <= start < end <= len(sentence).
    """

    id: str
    entity_id: str
    sentence_index: int
    char_start: int
    char_end: int
    surface: str
    is_proper_noun: bool = False
    gold_label: MentionLabel | None = None

    @property
    def order_key(self) -> tuple[int, int, int, str]:
        """Strict total occurrence order of mentions within a document."""
        return (self.sentence_index, self.char_start, self.char_end, self.id)


@dataclass(frozen=True)
class Entity:
    """A coreference cluster of mentions referring to one location.

    ``mention_ids`` follows document occurrence order.  ``visits``, when
    present, partitions (a subset of) the mentions into one group per
    visit episode, in episode order.
    """

    id: str
    mention_ids: tuple[str, ...]
    gold_label: EntityLabel | None = None
    unknown_time: bool = False
    visits: tuple[tuple[str, ...], ...] | None = None

    @property
    def n_visit_episodes(self) -> int:
        return len(self.visits) if self.visits else 1


@dataclass(frozen=True, order=True)
class VisitNode:
    """One visit episode of an entity, acting as a graph node.

    Single-visit entities map to a single node with ``visit_index`` 0.
    The dataclass ordering, (entity_id, visit_index), is the canonical
    node iteration order used throughout the package.
    """

    entity_id: str
    visit_index: int = 0

    @property
    def ref(self) -> str:
        """Serialized node reference: ``entity_id`` or ``entity_id#k``."""
        if self.visit_index == 0:
            return self.entity_id
        return f"{self.entity_id}#{self.visit_index}"


def parse_node_ref(ref: str) -> VisitNode:
    """Parse an ``entity_id`` / ``entity_id#k`` node reference.

    Entity ids therefore must not contain ``#`` and must not collide
    with the reserved ROOT / EOS identifiers.
    """
    if ref in RESERVED_IDS:
        raise ValueError(f"reserved identifier {ref!r} is not a node reference")
    entity_id, sep, index = ref.partition("#")
    if not entity_id:
        raise ValueError(f"malformed node reference {ref!r}")
    if not sep:
        return VisitNode(entity_id, 0)
    if not index.isdigit():
        raise ValueError(f"malformed visit index in node reference {ref!r}")
    return VisitNode(entity_id, int(index))
