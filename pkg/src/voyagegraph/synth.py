"""Seeded synthetic corpora with gold graphs, plus oracle and heuristic scorers.

The generator stands in for real annotated travelogues: sentence text is
placeholder prose, but offsets, occurrence order, label distributions,
and graph structure are faithful, which is what the rest of the toolkit
needs for testing and demonstration.  Equal configs and seeds yield
byte-identical corpora after canonical serialization.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import CorpusStats, Document, GraphAnnotation, document_graph
from .model import (
    EOS,
    ROOT,
    Entity,
    EntityLabel,
    Mention,
    MentionLabel,
    Sentence,
    VisitNode,
)
from .vop import RelationKind, representative_mention

_DEFAULT_GROUP_SIZES = {1: 0.62, 2: 0.22, 3: 0.10, 4: 0.06}
_DEFAULT_MENTION_COUNTS = {1: 0.62, 2: 0.20, 3: 0.13, 4: 0.05}
_DEFAULT_LABEL_WEIGHTS = {
    MentionLabel.VISIT: 0.679,
    MentionLabel.PLAN_TO_VISIT: 0.095,
    MentionLabel.SEE: 0.056,
    MentionLabel.VISIT_PAST: 0.003,
    MentionLabel.VISIT_FUTURE: 0.002,
    MentionLabel.UNK_OR_NOT_VISIT: 0.165,
}


def _check_distribution(dist: Mapping, name: str) -> None:
    if not dist:
        raise ValueError(f"{name} must not be empty")
    if any(p < 0 for p in dist.values()):
        raise ValueError(f"{name} has negative probabilities")
    total = sum(dist.values())
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"{name} sums to {total}, expected 1")


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for corpus generation; defaults mirror a real 100-document corpus."""

    n_documents: int = 100
    entities_per_document: tuple[int, int] = (27, 40)
    max_depth: int = 5
    sibling_group_sizes: dict = field(default_factory=lambda: dict(_DEFAULT_GROUP_SIZES))
    mentions_per_entity: dict = field(default_factory=lambda: dict(_DEFAULT_MENTION_COUNTS))
    mention_label_weights: dict = field(default_factory=lambda: dict(_DEFAULT_LABEL_WEIGHTS))
    reverse_pair_rate: float = 0.15
    multi_visit_rate: float = 0.05
    unknown_time_rate: float = 0.015
    overlap_rate: float = 0.02
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.entities_per_document
        if not (1 <= lo <= hi):
            raise ValueError(f"bad entities_per_document range ({lo}, {hi})")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.n_documents < 0:
            raise ValueError("n_documents must not be negative")
        _check_distribution(self.sibling_group_sizes, "sibling_group_sizes")
        _check_distribution(self.mentions_per_entity, "mentions_per_entity")
        _check_distribution(self.mention_label_weights, "mention_label_weights")
        if any(k < 1 for k in self.sibling_group_sizes):
            raise ValueError("sibling group sizes must be positive")
        if min(self.sibling_group_sizes) > hi:
            raise ValueError("smallest sibling group size exceeds the entity budget")
        if any(k < 1 for k in self.mentions_per_entity):
            raise ValueError("mention counts must be positive")
        for rate_name in ("reverse_pair_rate", "multi_visit_rate", "unknown_time_rate", "overlap_rate"):
            rate = getattr(self, rate_name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{rate_name} must lie in [0, 1], got {rate}")

    def as_dict(self) -> dict:
        return {
            "n_documents": self.n_documents,
            "entities_per_document": list(self.entities_per_document),
            "max_depth": self.max_depth,
            "sibling_group_sizes": {str(k): v for k, v in self.sibling_group_sizes.items()},
            "mentions_per_entity": {str(k): v for k, v in self.mentions_per_entity.items()},
            "mention_label_weights": {
                k.value: v for k, v in self.mention_label_weights.items()
            },
            "reverse_pair_rate": self.reverse_pair_rate,
            "multi_visit_rate": self.multi_visit_rate,
            "unknown_time_rate": self.unknown_time_rate,
            "overlap_rate": self.overlap_rate,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "SynthConfig":
        kwargs = dict(raw)
        if "entities_per_document" in kwargs:
            kwargs["entities_per_document"] = tuple(kwargs["entities_per_document"])
        for key in ("sibling_group_sizes", "mentions_per_entity"):
            if key in kwargs:
                kwargs[key] = {int(k): float(v) for k, v in kwargs[key].items()}
        if "mention_label_weights" in kwargs:
            kwargs["mention_label_weights"] = {
                MentionLabel(k): float(v) for k, v in kwargs["mention_label_weights"].items()
            }
        return cls(**kwargs)

    @classmethod
    def from_json_file(cls, path: str | Path) -> "SynthConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class GeneratedCorpus:
    documents: list[Document]
    stats: CorpusStats


def _sampler(dist: Mapping, rng: np.random.Generator):
    keys = sorted(dist)
    probs = np.array([dist[k] for k in keys], dtype=float)
    probs = probs / probs.sum()

    def draw():
        return keys[rng.choice(len(keys), p=probs)]

    return draw


_NAME_SYLLABLES = [
    "Ka", "Ri", "Ho", "Na", "Mi", "To", "Sa", "Yu", "Ki", "Ta", "Ren", "Go", "Aya", "Fu",
]
_FACILITY_SUFFIXES = ["Station", "Temple", "Park", "Museum", "Tower", "Market"]
_LEVEL_SUFFIXES = {0: "Prefecture", 1: "City", 2: "District"}
# Templates embed one mention each; several are non-ASCII so code-point
# offsets get exercised by every corpus.
_TEMPLATES = [
    "We finally reached {} before noon.",
    "Next on the route was {} as planned.",
    "その後は{}まで歩いた。",
    "A short ride brought us to {} at last.",
    "昼すぎに{}へ到着。",
    "People recommended {} to us repeatedly.",
]


def _surface_name(rng: np.random.Generator) -> str:
    n = 2 + int(rng.integers(0, 2))
    return "".join(_NAME_SYLLABLES[rng.integers(len(_NAME_SYLLABLES))] for _ in range(n))


def _level_suffix(level: int, rng: np.random.Generator) -> str:
    if level in _LEVEL_SUFFIXES:
        return _LEVEL_SUFFIXES[level]
    return _FACILITY_SUFFIXES[rng.integers(len(_FACILITY_SUFFIXES))]


def _generate_document(
    doc_id: str, config: SynthConfig, rng: np.random.Generator
) -> tuple[Document, CorpusStats]:
    draw_mentions = _sampler(config.mentions_per_entity, rng)
    draw_group = _sampler(config.sibling_group_sizes, rng)
    labels = sorted(config.mention_label_weights, key=lambda l: l.value)
    label_probs = np.array([config.mention_label_weights[l] for l in labels])
    label_probs = label_probs / label_probs.sum()

    n_entities = int(rng.integers(config.entities_per_document[0],
                                  config.entities_per_document[1] + 1))
    entity_ids = [f"{doc_id}-e{i:03d}" for i in range(n_entities)]
    mention_labels: dict[str, list[MentionLabel]] = {}
    for eid in entity_ids:
        count = draw_mentions()
        mention_labels[eid] = [
            labels[rng.choice(len(labels), p=label_probs)] for _ in range(count)
        ]

    def is_visited(eid: str) -> bool:
        return any(
            l in (MentionLabel.VISIT, MentionLabel.PLAN_TO_VISIT) for l in mention_labels[eid]
        )

    if not any(is_visited(e) for e in entity_ids):
        mention_labels[entity_ids[0]][0] = MentionLabel.VISIT

    unknown_time = {
        eid for eid in entity_ids if is_visited(eid) and rng.random() < config.unknown_time_rate
    }
    if all(eid in unknown_time for eid in entity_ids if is_visited(eid)):
        unknown_time.discard(next(e for e in entity_ids if is_visited(e)))

    visits: dict[str, int] = {}  # entity id -> number of visit episodes
    for eid in entity_ids:
        if (
            is_visited(eid)
            and eid not in unknown_time
            and len(mention_labels[eid]) >= 2
            and rng.random() < config.multi_visit_rate
        ):
            visits[eid] = 2
        else:
            visits[eid] = 1

    # Tokens are provisional node handles; visit indices are assigned
    # only once the traversal order is known.
    tokens: list[tuple[str, int]] = []
    for eid in entity_ids:
        if is_visited(eid) and eid not in unknown_time:
            tokens.extend((eid, k) for k in range(visits[eid]))

    # Overlap pairs: the partner node stays out of the forest and the
    # chains; its relations are represented by its partner.
    single_tokens = [t for t in tokens if visits[t[0]] == 1]
    n_overlap = min(
        int(rng.binomial(len(single_tokens), config.overlap_rate)), len(single_tokens) // 2
    )
    overlap_partners: list[tuple[tuple[str, int], tuple[str, int]]] = []
    if n_overlap:
        chosen = rng.choice(len(single_tokens), size=2 * n_overlap, replace=False)
        for i in range(n_overlap):
            rep = single_tokens[chosen[2 * i]]
            partner = single_tokens[chosen[2 * i + 1]]
            overlap_partners.append((rep, partner))
    unplaced = {partner for _, partner in overlap_partners}

    placeable = [t for t in tokens if t not in unplaced]
    order = rng.permutation(len(placeable))
    placeable = [placeable[i] for i in order]

    parent_of: dict[tuple[str, int], object] = {}
    group_order: dict[object, list[tuple[str, int]]] = {}
    available: list[tuple[object, int]] = [(ROOT, 0)]
    while placeable:
        if not available:
            # Every slot is exhausted (deep thin trees at the depth cap):
            # the remaining nodes extend the top-level chain.
            group_order.setdefault(ROOT, [])
            for node in placeable:
                parent_of[node] = ROOT
            group_order[ROOT].extend(placeable)
            placeable = []
            break
        idx = int(rng.integers(len(available)))
        parent, parent_depth = available.pop(idx)
        size = min(draw_group(), len(placeable))
        group = placeable[:size]
        placeable = placeable[size:]
        group_order[parent] = list(group)
        for child in group:
            parent_of[child] = parent
            if parent_depth + 1 < config.max_depth:
                available.append((child, parent_depth + 1))

    # Visit sequence: walk each chain, descending into a node's own
    # sibling group before moving on.
    sequence: list[tuple[str, int]] = []

    def descend(token: tuple[str, int]) -> None:
        sequence.append(token)
        for child in group_order.get(token, []):
            descend(child)

    for top in group_order.get(ROOT, []):
        descend(top)

    for _, partner in overlap_partners:
        position = int(rng.integers(len(sequence) + 1))
        sequence.insert(position, partner)

    # Relabel visit episodes so the earlier-visited token is episode 0,
    # then freeze node references.
    seq_pos = {token: i for i, token in enumerate(sequence)}
    ref_of: dict[tuple[str, int], str] = {}
    episode_rank: dict[tuple[str, int], int] = {}
    for eid in entity_ids:
        own = sorted((t for t in seq_pos if t[0] == eid), key=lambda t: seq_pos[t])
        for k, token in enumerate(own):
            ref_of[token] = VisitNode(eid, k).ref
            episode_rank[token] = k

    # First-mention positions start out matching the visit sequence;
    # reversing a transition pair swaps the two first mentions.
    mention_pos = dict(seq_pos)
    for parent in sorted(group_order, key=str):
        group = group_order[parent]
        for a, b in zip(group, group[1:]):
            if rng.random() < config.reverse_pair_rate:
                mention_pos[a], mention_pos[b] = mention_pos[b], mention_pos[a]

    # Mention slots: (entity, partition, rank). Every token's first
    # mention sits at its mention position; later mentions of the same
    # partition and all mentions of non-node entities get fractional keys.
    first_order = sorted(mention_pos, key=lambda t: mention_pos[t])
    slot_keys: list[tuple[float, str, int]] = []  # (key, entity, partition)
    partition_sizes: dict[str, list[int]] = {}
    for eid in entity_ids:
        count = len(mention_labels[eid])
        episodes = visits[eid] if any(t[0] == eid for t in seq_pos) else 1
        if episodes == 2:
            first = count // 2 + count % 2
            partition_sizes[eid] = [first, count - first]
        else:
            partition_sizes[eid] = [count]
    anchor: dict[tuple[str, int], float] = {}
    for i, token in enumerate(first_order):
        key = float(i)
        anchor[token] = key
        slot_keys.append((key, token[0], token[1]))
    horizon = float(len(first_order))
    for eid in entity_ids:
        placed = [t for t in seq_pos if t[0] == eid]
        if placed:
            for part, size in enumerate(partition_sizes[eid]):
                base = anchor[(eid, part)]
                for _ in range(size - 1):
                    key = base + rng.random() * max(horizon - base, 1.0)
                    slot_keys.append((key, eid, part))
        else:
            for _ in range(len(mention_labels[eid])):
                slot_keys.append((rng.random() * max(horizon, 1.0), eid, 0))
    slot_keys.sort(key=lambda s: (s[0], s[1], s[2]))

    depth_of: dict[tuple[str, int], int] = {}
    for token in seq_pos:
        d, cursor = 0, token
        while cursor != ROOT:
            d += 1
            cursor = parent_of.get(cursor, ROOT)
        depth_of[token] = d

    entity_level: dict[str, int] = {}
    entity_name: dict[str, str] = {}
    for eid in entity_ids:
        placed = [t for t in seq_pos if t[0] == eid]
        level = depth_of[placed[0]] - 1 if placed else int(rng.integers(0, 4))
        entity_level[eid] = level
        entity_name[eid] = f"{_surface_name(rng)} {_level_suffix(level, rng)}"

    sentences: list[Sentence] = []
    mentions: list[Mention] = []
    mention_ids_of: dict[str, list[str]] = {eid: [] for eid in entity_ids}
    partition_mentions: dict[str, dict[int, list[str]]] = {eid: {} for eid in entity_ids}
    next_rank = {eid: 0 for eid in entity_ids}
    for sentence_index, (_, eid, part) in enumerate(slot_keys):
        rank = next_rank[eid]
        next_rank[eid] += 1
        mention_id = f"{eid}-m{rank}"
        proper = rank == 0 or rng.random() < 0.4
        name = entity_name[eid]
        suffix = name.split(" ", 1)[1]
        surface = name if proper else f"the {suffix.lower()}"
        template = _TEMPLATES[rng.integers(len(_TEMPLATES))]
        start = template.index("{}")
        text = template.format(surface)
        label = mention_labels[eid][rank]
        mentions.append(
            Mention(
                id=mention_id,
                entity_id=eid,
                sentence_index=sentence_index,
                char_start=start,
                char_end=start + len(surface),
                surface=surface,
                is_proper_noun=proper,
                gold_label=label,
            )
        )
        sentences.append(Sentence(id=f"s{sentence_index:03d}", text=text))
        mention_ids_of[eid].append(mention_id)
        partition_mentions[eid].setdefault(part, []).append(mention_id)

    entities = []
    n_multi_visit = 0
    for eid in entity_ids:
        entity_visits = None
        if len(partition_mentions[eid]) >= 2:
            # Partition order must follow visit episodes, not the
            # provisional token order.
            ordered_parts = sorted(
                partition_mentions[eid], key=lambda prov: episode_rank[(eid, prov)]
            )
            entity_visits = tuple(
                tuple(partition_mentions[eid][prov]) for prov in ordered_parts
            )
            n_multi_visit += 1
        entities.append(
            Entity(
                id=eid,
                mention_ids=tuple(mention_ids_of[eid]),
                gold_label=EntityLabel.VISIT if is_visited(eid) else EntityLabel.OTHER,
                unknown_time=eid in unknown_time,
                visits=entity_visits,
            )
        )

    inclusion = sorted(
        (ref_of[parent], ref_of[child])
        for child, parent in parent_of.items()
        if parent != ROOT
    )
    transition = sorted(
        (ref_of[a], ref_of[b])
        for group in group_order.values()
        for a, b in zip(group, group[1:])
    )
    overlap = sorted(
        tuple(sorted((ref_of[rep], ref_of[partner]))) for rep, partner in overlap_partners
    )
    document = Document(
        id=doc_id,
        sentences=sentences,
        mentions=mentions,
        entities=entities,
        graph=GraphAnnotation(
            inclusion=tuple(inclusion), transition=tuple(transition), overlap=tuple(overlap)
        ),
    )

    # Ground-truth tally from generation-side state, independent of any
    # later re-count over the document.
    label_tally = Counter(
        label.value for labels in mention_labels.values() for label in labels
    )
    entity_tally = Counter(
        (EntityLabel.VISIT if is_visited(eid) else EntityLabel.OTHER).value
        for eid in entity_ids
    )
    tally = CorpusStats(
        documents=1,
        sentences=len(slot_keys),
        mentions=sum(len(labels) for labels in mention_labels.values()),
        entities=n_entities,
        inclusion=sum(1 for parent in parent_of.values() if parent != ROOT),
        transition=sum(len(group) - 1 for group in group_order.values()),
        overlap=n_overlap,
        unknown_time=len(unknown_time),
        multi_visit=n_multi_visit,
        mention_labels=tuple(sorted(label_tally.items())),
        entity_labels=tuple(sorted(entity_tally.items())),
    )
    return document, tally


def generate_corpus(config: SynthConfig) -> GeneratedCorpus:
    """Generate a corpus whose gold graphs all validate.

    The returned stats are tallied during generation and act as ground
    truth that corpus_stats over the documents must reproduce.
    """
    root = np.random.SeedSequence(config.seed)
    children = root.spawn(config.n_documents)
    documents = []
    stats = CorpusStats()
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        document, tally = _generate_document(f"synth-{i:04d}", config, rng)
        documents.append(document)
        stats = stats + tally
    return GeneratedCorpus(documents=documents, stats=stats)


# ---------------------------------------------------------------------------
# Scorers


class OracleScorer:
    """Scores gold targets 1 and everything else 0, plus optional noise.

    Noise is a pure function of the query, so repeated calls are
    deterministic for a fixed seed regardless of call order.  Mention
    weights are clamped at zero to stay probability-like.
    """

    def __init__(self, documents: Sequence[Document], sigma: float = 0.0, seed: int = 0):
        if sigma < 0:
            raise ValueError("sigma must not be negative")
        self.sigma = float(sigma)
        self.seed = int(seed)
        self._parents: dict[str, dict[str, str]] = {}
        self._successors: dict[str, dict[str, str]] = {}
        self._labels: dict[str, dict[str, MentionLabel | None]] = {}
        for doc in documents:
            graph = document_graph(doc)
            if isinstance(graph, list):
                raise ValueError(f"document {doc.id!r} has an invalid gold graph")
            self._parents[doc.id] = dict(graph.parent)
            successors = {ref: EOS for ref in graph.nodes}
            successors.update(graph.successor)
            self._successors[doc.id] = successors
            self._labels[doc.id] = {m.id: m.gold_label for m in doc.mentions}

    def _noise(self, *parts: str) -> float:
        if not self.sigma:
            return 0.0
        payload = "\x1f".join((str(self.seed),) + parts).encode("utf-8")
        digest = hashlib.blake2b(payload, digest_size=8).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "big"))
        return self.sigma * float(rng.standard_normal())

    def _gold_target(self, document: Document, query: str, kind: RelationKind) -> str:
        table = self._parents if kind is RelationKind.PARENT_OF else self._successors
        if document.id not in table:
            raise KeyError(f"no gold graph for document {document.id!r}")
        gold = table[document.id]
        if query not in gold:
            raise KeyError(f"query {query!r} outside the gold graph of {document.id!r}")
        return gold[query]

    def score_pair(
        self, document: Document, query: str, candidate: str, kind: RelationKind
    ) -> float:
        gold = self._gold_target(document, query, kind)
        base = 1.0 if candidate == gold else 0.0
        return base + self._noise(document.id, kind.value, query, candidate)

    def score_mention(self, document: Document, mention: Mention) -> dict[MentionLabel, float]:
        if document.id not in self._labels or mention.id not in self._labels[document.id]:
            raise KeyError(f"mention {mention.id!r} outside the gold data")
        gold = self._labels[document.id][mention.id]
        if gold is None:
            raise ValueError(f"mention {mention.id!r} carries no gold label")
        return {
            label: max(
                0.0,
                (1.0 if label is gold else 0.0)
                + self._noise(document.id, "label", mention.id, label.value),
            )
            for label in MentionLabel
        }


def oracle_scorer(
    documents: Sequence[Document], sigma: float = 0.0, seed: int = 0
) -> OracleScorer:
    """One object serving both the pairwise and mention scorer contracts."""
    return OracleScorer(documents, sigma=sigma, seed=seed)


#: Suffix -> coarseness level; smaller is coarser.  Anything unknown is
#: treated as the finest level (a facility).
DEFAULT_PLACE_LEVELS = {"Prefecture": 0, "City": 1, "District": 2}


class HeuristicParentScorer:
    """Parent scores from a surface-suffix coarseness lexicon.

    A candidate scores positive only when strictly coarser than the
    query, higher for nearer levels; ROOT sits at zero, between the
    negative same-or-finer candidates and any coarser one.
    """

    def __init__(self, place_levels: Mapping[str, int] | None = None):
        self.levels = dict(DEFAULT_PLACE_LEVELS if place_levels is None else place_levels)
        self._finest = max(self.levels.values(), default=-1) + 1

    def _level(self, document: Document, ref: str) -> int:
        surface = representative_mention(document, ref, RelationKind.PARENT_OF).surface
        best: tuple[int, int] | None = None
        for suffix, level in self.levels.items():
            if surface.lower().endswith(suffix.lower()):
                if best is None or len(suffix) > best[0]:
                    best = (len(suffix), level)
        return best[1] if best else self._finest

    def score_pair(
        self, document: Document, query: str, candidate: str, kind: RelationKind
    ) -> float:
        if kind is not RelationKind.PARENT_OF:
            raise ValueError("this scorer only ranks parent candidates")
        if candidate == ROOT:
            return 0.0
        difference = self._level(document, query) - self._level(document, candidate)
        return 1.0 / difference if difference > 0 else -1.0


def heuristic_parent_scorer(
    place_levels: Mapping[str, int] | None = None
) -> HeuristicParentScorer:
    return HeuristicParentScorer(place_levels)
