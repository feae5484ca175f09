"""Reading, writing, splitting, and summarizing annotated travelogue corpora.

The on-disk format is JSON, one object per document, either as a single
file per document or concatenated as JSON lines.  Canonical output is
JSON lines with sorted keys, compact separators, and LF termination, so
serializing the same document twice is byte-identical.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import build_graph, split_multi_visit
from .model import (
    ROOT,
    RESERVED_IDS,
    Entity,
    EntityLabel,
    Mention,
    MentionLabel,
    Sentence,
    VisitNode,
    parse_node_ref,
)


class SchemaError(ValueError):
    """A document failed validation; ``path`` points at the offending field."""

    def __init__(self, path: str, message: str, document_id: str | None = None):
        self.path = path
        self.message = message
        self.document_id = document_id
        where = f"document {document_id!r}: " if document_id else ""
        super().__init__(f"{where}{path}: {message}")


@dataclass(frozen=True)
class GraphAnnotation:
    """Raw gold edge lists as found in a document file."""

    inclusion: tuple[tuple[str, str], ...] = ()
    transition: tuple[tuple[str, str], ...] = ()
    overlap: tuple[tuple[str, str], ...] = ()


@dataclass
class Document:
    """One travelogue with its mentions, entities, and optional gold graph."""

    id: str
    sentences: list[Sentence]
    mentions: list[Mention]
    entities: list[Entity]
    graph: GraphAnnotation | None = None

    @cached_property
    def mention_index(self) -> dict[str, Mention]:
        return {m.id: m for m in self.mentions}

    @cached_property
    def entity_index(self) -> dict[str, Entity]:
        return {e.id: e for e in self.entities}

    def mentions_of(self, node: VisitNode) -> list[Mention]:
        """Mentions belonging to one visit node, in occurrence order."""
        entity = self.entity_index[node.entity_id]
        if entity.visits:
            ids = entity.visits[node.visit_index]
        else:
            if node.visit_index != 0:
                raise KeyError(f"{node.ref!r}: entity has a single visit episode")
            ids = entity.mention_ids
        return sorted((self.mention_index[i] for i in ids), key=lambda m: m.order_key)


def document_nodes(
    document: Document, entity_labels: Mapping[str, EntityLabel] | None = None
) -> list[VisitNode]:
    """Graph nodes of a document: visited entities, split per visit episode.

    Entities labeled Visit become nodes unless their visit timing is
    unknown; revisited entities contribute one node per partition.
    ``entity_labels`` overrides the stored gold labels, so the same
    derivation serves gold data and system predictions.
    """
    nodes: list[VisitNode] = []
    for entity in document.entities:
        label = (
            entity_labels.get(entity.id) if entity_labels is not None else entity.gold_label
        )
        if label != EntityLabel.VISIT or entity.unknown_time:
            continue
        if entity.visits:
            nodes.extend(split_multi_visit(entity, entity.visits))
        else:
            nodes.append(VisitNode(entity.id, 0))
    return sorted(nodes)


def document_graph(
    document: Document,
    entity_labels: Mapping[str, EntityLabel] | None = None,
    strict: bool = False,
):
    """Build the document's visiting order graph from its edge lists.

    Returns a VisitingOrderGraph or, like build_graph, the complete list
    of violations.
    """
    annotation = document.graph or GraphAnnotation()
    excluded = {e.id for e in document.entities if e.unknown_time}
    return build_graph(
        document_nodes(document, entity_labels),
        inclusion=annotation.inclusion,
        transition=annotation.transition,
        overlap=annotation.overlap,
        excluded=excluded,
        strict=strict,
    )


# ---------------------------------------------------------------------------
# Parsing


def _expect(value, types, path: str, doc_id: str | None):
    # JSON booleans must not pass for integers (bool subclasses int).
    if not isinstance(value, types) or (types is int and isinstance(value, bool)):
        names = types.__name__ if isinstance(types, type) else "/".join(t.__name__ for t in types)
        raise SchemaError(path, f"expected {names}, got {type(value).__name__}", doc_id)
    return value


def _check_keys(obj: dict, required: set, optional: set, path: str, doc_id: str | None):
    for key in required:
        if key not in obj:
            raise SchemaError(path, f"missing required field {key!r}", doc_id)
    unknown = set(obj) - required - optional
    if unknown:
        raise SchemaError(path, f"unknown field(s) {sorted(unknown)}", doc_id)


def _parse_edge_list(raw, path: str, doc_id: str) -> tuple[tuple[str, str], ...]:
    _expect(raw, list, path, doc_id)
    pairs = []
    for i, item in enumerate(raw):
        _expect(item, list, f"{path}[{i}]", doc_id)
        if len(item) != 2:
            raise SchemaError(f"{path}[{i}]", "expected a pair", doc_id)
        a = _expect(item[0], str, f"{path}[{i}][0]", doc_id)
        b = _expect(item[1], str, f"{path}[{i}][1]", doc_id)
        pairs.append((a, b))
    return tuple(pairs)


def parse_document(data: bytes | str | dict, check_graph: bool = True) -> Document:
    """Parse and fully validate one document.

    All cross-references must resolve, offsets are verified in code
    points against the sentence text, and (with ``check_graph``) the
    gold graph must build without violations.  Failures raise
    SchemaError with a path to the offending field.
    """
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    if isinstance(data, str):
        try:
            raw = json.loads(data)
        except json.JSONDecodeError as e:
            raise SchemaError("$", f"invalid JSON: {e}") from e
    else:
        raw = data
    _expect(raw, dict, "$", None)
    _check_keys(raw, {"id", "sentences", "mentions", "entities"}, {"graph"}, "$", None)
    doc_id = _expect(raw["id"], str, "id", None)

    sentences: list[Sentence] = []
    sentence_indices: dict[str, int] = {}
    for i, raw_sent in enumerate(_expect(raw["sentences"], list, "sentences", doc_id)):
        path = f"sentences[{i}]"
        _expect(raw_sent, dict, path, doc_id)
        _check_keys(raw_sent, {"id", "text"}, set(), path, doc_id)
        sid = _expect(raw_sent["id"], str, f"{path}.id", doc_id)
        text = _expect(raw_sent["text"], str, f"{path}.text", doc_id)
        if sid in sentence_indices:
            raise SchemaError(f"{path}.id", f"duplicate sentence id {sid!r}", doc_id)
        sentence_indices[sid] = i
        sentences.append(Sentence(sid, text))

    mentions: list[Mention] = []
    mention_paths: dict[str, str] = {}
    for i, raw_men in enumerate(_expect(raw["mentions"], list, "mentions", doc_id)):
        path = f"mentions[{i}]"
        _expect(raw_men, dict, path, doc_id)
        _check_keys(
            raw_men,
            {"id", "entity_id", "sentence_id", "start", "end", "surface", "is_proper_noun"},
            {"label"},
            path,
            doc_id,
        )
        mid = _expect(raw_men["id"], str, f"{path}.id", doc_id)
        if mid in mention_paths:
            raise SchemaError(f"{path}.id", f"duplicate mention id {mid!r}", doc_id)
        mention_paths[mid] = path
        sid = _expect(raw_men["sentence_id"], str, f"{path}.sentence_id", doc_id)
        if sid not in sentence_indices:
            raise SchemaError(f"{path}.sentence_id", f"unknown sentence {sid!r}", doc_id)
        sentence_index = sentence_indices[sid]
        start = _expect(raw_men["start"], int, f"{path}.start", doc_id)
        end = _expect(raw_men["end"], int, f"{path}.end", doc_id)
        text = sentences[sentence_index].text
        if not (0 <= start < end):
            raise SchemaError(f"{path}.start", f"need 0 <= start < end, got [{start}, {end})", doc_id)
        if end > len(text):
            raise SchemaError(
                f"{path}.end", f"offset {end} beyond sentence length {len(text)}", doc_id
            )
        surface = _expect(raw_men["surface"], str, f"{path}.surface", doc_id)
        if surface != text[start:end]:
            raise SchemaError(
                f"{path}.surface",
                f"surface {surface!r} != sentence slice {text[start:end]!r}",
                doc_id,
            )
        label = None
        if "label" in raw_men:
            raw_label = _expect(raw_men["label"], str, f"{path}.label", doc_id)
            try:
                label = MentionLabel(raw_label)
            except ValueError:
                raise SchemaError(f"{path}.label", f"unknown label {raw_label!r}", doc_id) from None
        mentions.append(
            Mention(
                id=mid,
                entity_id=_expect(raw_men["entity_id"], str, f"{path}.entity_id", doc_id),
                sentence_index=sentence_index,
                char_start=start,
                char_end=end,
                surface=surface,
                is_proper_noun=bool(
                    _expect(raw_men["is_proper_noun"], bool, f"{path}.is_proper_noun", doc_id)
                ),
                gold_label=label,
            )
        )
    mention_by_id = {m.id: m for m in mentions}

    entities: list[Entity] = []
    entity_ids: set[str] = set()
    claimed_mentions: dict[str, str] = {}
    for i, raw_ent in enumerate(_expect(raw["entities"], list, "entities", doc_id)):
        path = f"entities[{i}]"
        _expect(raw_ent, dict, path, doc_id)
        _check_keys(raw_ent, {"id", "mention_ids"}, {"label", "unknown_time", "visits"}, path, doc_id)
        eid = _expect(raw_ent["id"], str, f"{path}.id", doc_id)
        if eid in RESERVED_IDS:
            raise SchemaError(f"{path}.id", f"entity id {eid!r} is reserved", doc_id)
        if "#" in eid:
            raise SchemaError(f"{path}.id", "entity ids must not contain '#'", doc_id)
        if eid in entity_ids:
            raise SchemaError(f"{path}.id", f"duplicate entity id {eid!r}", doc_id)
        entity_ids.add(eid)
        raw_mention_ids = _expect(raw_ent["mention_ids"], list, f"{path}.mention_ids", doc_id)
        if not raw_mention_ids:
            raise SchemaError(f"{path}.mention_ids", "must not be empty", doc_id)
        for j, mid in enumerate(raw_mention_ids):
            _expect(mid, str, f"{path}.mention_ids[{j}]", doc_id)
            if mid not in mention_by_id:
                raise SchemaError(f"{path}.mention_ids[{j}]", f"unknown mention {mid!r}", doc_id)
            if mention_by_id[mid].entity_id != eid:
                raise SchemaError(
                    f"{path}.mention_ids[{j}]",
                    f"mention {mid!r} belongs to entity {mention_by_id[mid].entity_id!r}",
                    doc_id,
                )
            if mid in claimed_mentions:
                raise SchemaError(
                    f"{path}.mention_ids[{j}]", f"mention {mid!r} listed twice", doc_id
                )
            claimed_mentions[mid] = eid
        keys = [mention_by_id[m].order_key for m in raw_mention_ids]
        if keys != sorted(keys):
            raise SchemaError(
                f"{path}.mention_ids", "mention ids are not in document occurrence order", doc_id
            )
        label = None
        if "label" in raw_ent:
            raw_label = _expect(raw_ent["label"], str, f"{path}.label", doc_id)
            try:
                label = EntityLabel(raw_label)
            except ValueError:
                raise SchemaError(f"{path}.label", f"unknown label {raw_label!r}", doc_id) from None
        visits = None
        if "visits" in raw_ent:
            raw_visits = _expect(raw_ent["visits"], list, f"{path}.visits", doc_id)
            seen: set[str] = set()
            parts = []
            for j, raw_part in enumerate(raw_visits):
                _expect(raw_part, list, f"{path}.visits[{j}]", doc_id)
                if not raw_part:
                    raise SchemaError(f"{path}.visits[{j}]", "empty visit partition", doc_id)
                for mid in raw_part:
                    _expect(mid, str, f"{path}.visits[{j}]", doc_id)
                    if mid not in raw_mention_ids:
                        raise SchemaError(
                            f"{path}.visits[{j}]", f"mention {mid!r} not in mention_ids", doc_id
                        )
                    if mid in seen:
                        raise SchemaError(
                            f"{path}.visits[{j}]", f"mention {mid!r} in two partitions", doc_id
                        )
                    seen.add(mid)
                parts.append(tuple(raw_part))
            visits = tuple(parts)
        unknown_time = False
        if "unknown_time" in raw_ent:
            unknown_time = _expect(raw_ent["unknown_time"], bool, f"{path}.unknown_time", doc_id)
        entities.append(
            Entity(
                id=eid,
                mention_ids=tuple(raw_mention_ids),
                gold_label=label,
                unknown_time=unknown_time,
                visits=visits,
            )
        )

    for mention in mentions:
        if mention.entity_id not in entity_ids:
            raise SchemaError(
                f"{mention_paths[mention.id]}.entity_id",
                f"unknown entity {mention.entity_id!r}",
                doc_id,
            )
        if claimed_mentions.get(mention.id) != mention.entity_id:
            raise SchemaError(
                f"{mention_paths[mention.id]}.id",
                f"mention not listed by its entity {mention.entity_id!r}",
                doc_id,
            )

    annotation = None
    if "graph" in raw:
        path = "graph"
        raw_graph = _expect(raw["graph"], dict, path, doc_id)
        _check_keys(raw_graph, set(), {"inclusion", "transition", "overlap"}, path, doc_id)
        annotation = GraphAnnotation(
            inclusion=_parse_edge_list(raw_graph.get("inclusion", []), f"{path}.inclusion", doc_id),
            transition=_parse_edge_list(raw_graph.get("transition", []), f"{path}.transition", doc_id),
            overlap=_parse_edge_list(raw_graph.get("overlap", []), f"{path}.overlap", doc_id),
        )
        for kind, pairs in (
            ("inclusion", annotation.inclusion),
            ("transition", annotation.transition),
            ("overlap", annotation.overlap),
        ):
            for j, (a, b) in enumerate(pairs):
                for k, ref in enumerate((a, b)):
                    if ref == ROOT and kind == "inclusion" and k == 0:
                        continue
                    if ref in RESERVED_IDS:
                        raise SchemaError(
                            f"{path}.{kind}[{j}]", f"reserved reference {ref!r}", doc_id
                        )
                    try:
                        node = parse_node_ref(ref)
                    except ValueError as e:
                        raise SchemaError(f"{path}.{kind}[{j}]", str(e), doc_id) from None
                    if node.entity_id not in entity_ids:
                        raise SchemaError(
                            f"{path}.{kind}[{j}]", f"unknown entity in reference {ref!r}", doc_id
                        )

    document = Document(
        id=doc_id, sentences=sentences, mentions=mentions, entities=entities, graph=annotation
    )
    if annotation is not None and check_graph:
        result = document_graph(document)
        if isinstance(result, list):
            raise SchemaError(
                "graph", "; ".join(str(v) for v in result), doc_id
            )
    return document


# ---------------------------------------------------------------------------
# Serialization


def _document_dict(document: Document) -> dict:
    mentions = []
    for m in document.mentions:
        entry = {
            "id": m.id,
            "entity_id": m.entity_id,
            "sentence_id": document.sentences[m.sentence_index].id,
            "start": m.char_start,
            "end": m.char_end,
            "surface": m.surface,
            "is_proper_noun": m.is_proper_noun,
        }
        if m.gold_label is not None:
            entry["label"] = m.gold_label.value
        mentions.append(entry)
    entities = []
    for e in document.entities:
        entry = {"id": e.id, "mention_ids": list(e.mention_ids)}
        if e.gold_label is not None:
            entry["label"] = e.gold_label.value
        if e.unknown_time:
            entry["unknown_time"] = True
        if e.visits is not None:
            entry["visits"] = [list(p) for p in e.visits]
        entities.append(entry)
    out = {
        "id": document.id,
        "sentences": [{"id": s.id, "text": s.text} for s in document.sentences],
        "mentions": mentions,
        "entities": entities,
    }
    if document.graph is not None:
        out["graph"] = {
            "inclusion": [list(p) for p in document.graph.inclusion],
            "transition": [list(p) for p in document.graph.transition],
            "overlap": [list(p) for p in document.graph.overlap],
        }
    return out


def serialize_document(document: Document) -> bytes:
    """Canonical UTF-8 JSON bytes for one document, LF terminated."""
    text = json.dumps(
        _document_dict(document), ensure_ascii=False, sort_keys=True, separators=(",", ":")
    )
    return (text + "\n").encode("utf-8")


def parse_corpus(data: bytes | str, check_graph: bool = True) -> list[Document]:
    """Parse a JSON-lines collection (or a single-document JSON file)."""
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    stripped = data.strip()
    if not stripped:
        return []
    documents = []
    if "\n" in stripped:
        try:
            whole = json.loads(stripped)
        except json.JSONDecodeError:
            whole = None
        if isinstance(whole, dict):
            return [parse_document(whole, check_graph=check_graph)]
        for line in stripped.split("\n"):
            if line.strip():
                documents.append(parse_document(line, check_graph=check_graph))
    else:
        documents.append(parse_document(stripped, check_graph=check_graph))
    ids = Counter(d.id for d in documents)
    duplicates = sorted(i for i, n in ids.items() if n > 1)
    if duplicates:
        raise SchemaError("$", f"duplicate document ids {duplicates}")
    return documents


def serialize_corpus(documents: Iterable[Document]) -> bytes:
    """Canonical JSON-lines bytes, documents sorted by id."""
    return b"".join(
        serialize_document(d) for d in sorted(documents, key=lambda d: d.id)
    )


def load_corpus(path: str | Path, check_graph: bool = True) -> list[Document]:
    return parse_corpus(Path(path).read_bytes(), check_graph=check_graph)


def save_corpus(documents: Iterable[Document], path: str | Path) -> None:
    Path(path).write_bytes(serialize_corpus(documents))


# ---------------------------------------------------------------------------
# Corpus split


@dataclass(frozen=True)
class CorpusSplit:
    train: tuple[str, ...]
    dev: tuple[str, ...]
    test: tuple[str, ...]

    def as_dict(self) -> dict[str, tuple[str, ...]]:
        return {"train": self.train, "dev": self.dev, "test": self.test}


def allocate_sizes(n: int, ratio: Sequence[int]) -> list[int]:
    """Largest-remainder allocation of n items proportional to ratio."""
    total = sum(ratio)
    quotas = [n * r / total for r in ratio]
    sizes = [int(q) for q in quotas]
    remainders = sorted(
        range(len(ratio)), key=lambda i: (-(quotas[i] - sizes[i]), i)
    )
    for i in remainders[: n - sum(sizes)]:
        sizes[i] += 1
    return sizes


def split_corpus(
    documents: Sequence[Document] | Sequence[str],
    ratio: tuple[int, int, int] = (7, 1, 2),
    seed: int = 0,
) -> CorpusSplit:
    """Deterministic seeded train/dev/test split with exact rounded sizes.

    Membership depends only on the set of document ids, the ratio, and
    the seed, never on input order.
    """
    if len(ratio) != 3 or any(r <= 0 for r in ratio):
        raise ValueError(f"ratio must be three positive integers, got {ratio!r}")
    ids = sorted(d.id if isinstance(d, Document) else d for d in documents)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate document ids")
    if len(ids) < len(ratio):
        raise ValueError(f"cannot split {len(ids)} documents into {len(ratio)} parts")
    sizes = allocate_sizes(len(ids), ratio)
    rng = np.random.default_rng(seed)
    order = [ids[i] for i in rng.permutation(len(ids))]
    train = tuple(sorted(order[: sizes[0]]))
    dev = tuple(sorted(order[sizes[0]: sizes[0] + sizes[1]]))
    test = tuple(sorted(order[sizes[0] + sizes[1]:]))
    return CorpusSplit(train, dev, test)


# ---------------------------------------------------------------------------
# Corpus statistics


@dataclass(frozen=True)
class CorpusStats:
    documents: int = 0
    sentences: int = 0
    mentions: int = 0
    entities: int = 0
    inclusion: int = 0
    transition: int = 0
    overlap: int = 0
    unknown_time: int = 0
    multi_visit: int = 0
    mention_labels: tuple[tuple[str, int], ...] = ()
    entity_labels: tuple[tuple[str, int], ...] = ()

    @property
    def relations(self) -> int:
        return self.inclusion + self.transition

    def __add__(self, other: "CorpusStats") -> "CorpusStats":
        def merge(a, b):
            return tuple(sorted((Counter(dict(a)) + Counter(dict(b))).items()))

        return CorpusStats(
            documents=self.documents + other.documents,
            sentences=self.sentences + other.sentences,
            mentions=self.mentions + other.mentions,
            entities=self.entities + other.entities,
            inclusion=self.inclusion + other.inclusion,
            transition=self.transition + other.transition,
            overlap=self.overlap + other.overlap,
            unknown_time=self.unknown_time + other.unknown_time,
            multi_visit=self.multi_visit + other.multi_visit,
            mention_labels=merge(self.mention_labels, other.mention_labels),
            entity_labels=merge(self.entity_labels, other.entity_labels),
        )

    def as_dict(self) -> dict:
        return {
            "documents": self.documents,
            "sentences": self.sentences,
            "mentions": self.mentions,
            "entities": self.entities,
            "inclusion": self.inclusion,
            "transition": self.transition,
            "relations": self.relations,
            "overlap": self.overlap,
            "unknown_time": self.unknown_time,
            "multi_visit": self.multi_visit,
            "mention_labels": dict(self.mention_labels),
            "entity_labels": dict(self.entity_labels),
        }


def corpus_stats(documents: Iterable[Document]) -> CorpusStats:
    """Exact counts over a corpus; additive over disjoint unions."""
    stats = CorpusStats()
    for doc in documents:
        annotation = doc.graph or GraphAnnotation()
        mention_labels = Counter(
            m.gold_label.value for m in doc.mentions if m.gold_label is not None
        )
        entity_labels = Counter(
            e.gold_label.value for e in doc.entities if e.gold_label is not None
        )
        stats = stats + CorpusStats(
            documents=1,
            sentences=len(doc.sentences),
            mentions=len(doc.mentions),
            entities=len(doc.entities),
            inclusion=sum(1 for p, _ in annotation.inclusion if p != ROOT),
            transition=len(annotation.transition),
            overlap=len(annotation.overlap),
            unknown_time=sum(1 for e in doc.entities if e.unknown_time),
            multi_visit=sum(1 for e in doc.entities if e.n_visit_episodes >= 2),
            mention_labels=tuple(sorted(mention_labels.items())),
            entity_labels=tuple(sorted(entity_labels.items())),
        )
    return stats
